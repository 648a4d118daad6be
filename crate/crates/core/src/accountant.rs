//! Renyi-DP accounting for the quantized Gaussian mechanism.
//!
//! The scalar mechanism maps `x` in `[-c_q/2, c_q/2]` to a lattice pmf, so
//! divergences are finite sums. The two budgets computed here are:
//!
//! * `epsilon_one`, the KL divergence between the pmfs at the two extreme
//!   inputs `+c_q/2` and `-c_q/2`;
//! * `epsilon_infinity`, the closed-form upper bound on the order-infinity
//!   divergence, `log(delta / ∫_{B(k-2)}^{B(k-1)} f(t)(t - B(k-2)) dt)` with
//!   `f` the density of `N(-c_q/2, sigma^2)`.
//!
//! The plain Gaussian baseline, additive composition, RDP to (epsilon, delta)
//! conversion and noise calibration round out the accountant. All budgets
//! are in nats.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pmf::{partial_first_moment, quantized_gaussian_pmf, LevelPmf, NoiseSpec};
use crate::quantizer::QuantizerSpec;

/// Renyi order `alpha`, at least 1, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Finite(f64),
    Infinity,
}

impl Order {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha == f64::INFINITY {
            Ok(Order::Infinity)
        } else if alpha.is_finite() && alpha >= 1.0 {
            Ok(Order::Finite(alpha))
        } else {
            Err(Error::param("alpha", format!("Renyi order must be >= 1, got {alpha}")))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Order::Finite(a) => a,
            Order::Infinity => f64::INFINITY,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(a) => write!(f, "{a}"),
            Order::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Order::Infinity),
            other => {
                let a: f64 = other
                    .parse()
                    .map_err(|_| Error::param("alpha", format!("expected a number or `inf`, got `{s}`")))?;
                Order::new(a)
            }
        }
    }
}

/// An `(alpha, epsilon)`-RDP guarantee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdpPoint {
    pub order: Order,
    pub epsilon: f64,
}

impl RdpPoint {
    pub fn new(order: Order, epsilon: f64) -> Result<Self> {
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(Error::param("epsilon", format!("must be >= 0, got {epsilon}")));
        }
        Ok(Self { order, epsilon })
    }
}

/// An `(epsilon, delta)`-DP guarantee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpPoint {
    pub epsilon: f64,
    pub delta: f64,
}

impl DpPoint {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(Error::param("epsilon", format!("must be >= 0, got {epsilon}")));
        }
        check_delta(delta)?;
        Ok(Self { epsilon, delta })
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::param("delta", format!("must lie in (0, 1), got {delta}")))
    }
}

/// Noise, quantizer and the l2 sensitivity of the scalar mechanism.
///
/// Inputs range over `[-c_q/2, c_q/2]`, so the sensitivity is `c_q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanismSpec {
    pub noise: NoiseSpec,
    pub quant: QuantizerSpec,
    pub sensitivity: f64,
}

impl MechanismSpec {
    pub fn new(noise: NoiseSpec, quant: QuantizerSpec) -> Self {
        Self {
            noise,
            quant,
            sensitivity: quant.clip(),
        }
    }

    pub fn from_parts(levels: usize, clip: f64, sigma: f64) -> Result<Self> {
        Ok(Self::new(NoiseSpec::new(sigma)?, QuantizerSpec::new(levels, clip)?))
    }

    /// Output pmf for input `x`.
    pub fn pmf(&self, x: f64) -> Result<LevelPmf> {
        quantized_gaussian_pmf(x, self.noise, self.quant)
    }

    /// Pmfs at `+c_q/2` and `-c_q/2`.
    pub fn extremal_pmfs(&self) -> Result<(LevelPmf, LevelPmf)> {
        let half = self.quant.clip() / 2.0;
        Ok((self.pmf(half)?, self.pmf(-half)?))
    }
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Renyi divergence `D_alpha(p || q)` of two probability vectors.
///
/// Returns `+inf` when some `q[r] = 0` carries positive `p[r]`.
pub fn renyi_divergence_probs(p: &[f64], q: &[f64], order: Order) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LatticeMismatch);
    }
    if p == q {
        return Ok(0.0);
    }
    if p.iter().chain(q).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::param("p", "probabilities must be finite and non-negative"));
    }
    let support = || p.iter().zip(q).filter(|(pi, _)| **pi > 0.0);
    if support().any(|(_, qi)| *qi == 0.0) {
        return Ok(f64::INFINITY);
    }
    let d = match order {
        Order::Finite(1.0) => support().map(|(pi, qi)| pi * (pi.ln() - qi.ln())).sum::<f64>(),
        Order::Finite(a) => log_sum_exp(support().map(|(pi, qi)| a * pi.ln() - (a - 1.0) * qi.ln())) / (a - 1.0),
        Order::Infinity => support()
            .map(|(pi, qi)| pi.ln() - qi.ln())
            .fold(f64::NEG_INFINITY, f64::max),
    };
    Ok(d.max(0.0))
}

/// Renyi divergence between two output pmfs over the same lattice.
pub fn renyi_divergence(p: &LevelPmf, q: &LevelPmf, order: Order) -> Result<f64> {
    if p.spec() != q.spec() {
        return Err(Error::LatticeMismatch);
    }
    renyi_divergence_probs(p.probs(), q.probs(), order)
}

/// Order-1 budget: `KL(P_{+c_q/2} || P_{-c_q/2})`.
pub fn epsilon_one(mech: &MechanismSpec) -> Result<f64> {
    let (hi, lo) = mech.extremal_pmfs()?;
    renyi_divergence(&hi, &lo, Order::Finite(1.0))
}

/// Order-infinity divergence between the two extremal pmfs. Sits between
/// [`epsilon_one`] and [`epsilon_infinity`].
pub fn extremal_max_divergence(mech: &MechanismSpec) -> Result<f64> {
    let (hi, lo) = mech.extremal_pmfs()?;
    renyi_divergence(&hi, &lo, Order::Infinity)
}

/// Closed-form order-infinity budget bound.
pub fn epsilon_infinity(mech: &MechanismSpec) -> Result<f64> {
    let q = mech.quant;
    let k = q.levels();
    let center = -q.clip() / 2.0;
    let moment = partial_first_moment(q.level(k - 2), q.level(k - 1), center, mech.noise.sigma())?;
    Ok((q.step() / moment).ln())
}

/// RDP of the plain Gaussian mechanism: `alpha * s^2 / (2 sigma^2)`.
pub fn gaussian_rdp_baseline(sensitivity: f64, sigma: f64, order: Order) -> Result<RdpPoint> {
    if !(sensitivity >= 0.0 && sensitivity.is_finite()) {
        return Err(Error::param("sensitivity", format!("must be >= 0, got {sensitivity}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    match order {
        Order::Infinity => Err(Error::Unbounded),
        Order::Finite(a) => RdpPoint::new(order, a * sensitivity * sensitivity / (2.0 * sigma * sigma)),
    }
}

/// Sequential composition at a common order.
pub fn compose(points: &[RdpPoint]) -> Result<RdpPoint> {
    let first = points
        .first()
        .ok_or_else(|| Error::param("points", "nothing to compose"))?;
    if let Some(other) = points.iter().find(|p| p.order != first.order) {
        return Err(Error::MixedOrders {
            first: first.order.to_string(),
            other: other.order.to_string(),
        });
    }
    RdpPoint::new(first.order, points.iter().map(|p| p.epsilon).sum())
}

/// `T`-fold self composition.
pub fn compose_repeated(point: RdpPoint, times: usize) -> RdpPoint {
    RdpPoint {
        order: point.order,
        epsilon: point.epsilon * times as f64,
    }
}

/// Converts `(alpha, epsilon)`-RDP to `(epsilon + log(1/delta)/(alpha - 1), delta)`-DP.
/// At infinite order the budget carries over unchanged.
pub fn rdp_to_dp(point: RdpPoint, delta: f64) -> Result<DpPoint> {
    check_delta(delta)?;
    match point.order {
        Order::Infinity => DpPoint::new(point.epsilon, delta),
        Order::Finite(a) if a <= 1.0 => Err(Error::ConversionUndefined),
        Order::Finite(a) => DpPoint::new(point.epsilon + (1.0 / delta).ln() / (a - 1.0), delta),
    }
}

/// Orders searched by [`calibrate_sigma`] by default: 1.25, 1.5, every
/// integer 2..=64, then 128 and 256.
pub fn default_alpha_grid() -> Vec<f64> {
    let mut grid = vec![1.25, 1.5];
    grid.extend((2..=64).map(f64::from));
    grid.extend([128.0, 256.0]);
    grid
}

/// Best DP epsilon over the grid for `rounds` compositions of the Gaussian
/// mechanism, with the order that attains it.
pub fn gaussian_dp_epsilon(
    sigma: f64,
    rounds: usize,
    sensitivity: f64,
    delta: f64,
    alpha_grid: &[f64],
) -> Result<(f64, f64)> {
    let mut best = (f64::INFINITY, f64::NAN);
    for &a in alpha_grid {
        if !(a > 1.0 && a.is_finite()) {
            return Err(Error::param(
                "alpha_grid",
                format!("orders must be finite and > 1, got {a}"),
            ));
        }
        let per_round = gaussian_rdp_baseline(sensitivity, sigma, Order::Finite(a))?;
        let eps = rdp_to_dp(compose_repeated(per_round, rounds), delta)?.epsilon;
        if eps < best.0 {
            best = (eps, a);
        }
    }
    Ok(best)
}

/// Bracket searched by [`calibrate_sigma`].
pub const SIGMA_BRACKET: (f64, f64) = (1e-6, 1e6);

/// Smallest sigma (relative tolerance 1e-4) such that `rounds` compositions
/// of the Gaussian mechanism meet `target` for some order in `alpha_grid`.
pub fn calibrate_sigma(target: DpPoint, rounds: usize, sensitivity: f64, alpha_grid: &[f64]) -> Result<f64> {
    if rounds == 0 {
        return Err(Error::param("rounds", "must be positive"));
    }
    if alpha_grid.is_empty() {
        return Err(Error::param("alpha_grid", "must not be empty"));
    }
    let meets = |sigma: f64| -> Result<bool> {
        Ok(gaussian_dp_epsilon(sigma, rounds, sensitivity, target.delta, alpha_grid)?.0 <= target.epsilon)
    };
    let (mut lo, mut hi) = SIGMA_BRACKET;
    if !meets(hi)? {
        return Err(Error::Unreachable {
            target: format!("({}, {})-DP", target.epsilon, target.delta),
            lo,
            hi,
        });
    }
    if meets(lo)? {
        return Ok(lo);
    }
    while hi / lo - 1.0 > 1e-4 {
        let mid = (lo * hi).sqrt();
        if meets(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// One row of the budget-versus-levels table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetRow {
    pub levels: usize,
    pub eps_one: f64,
    pub eps_inf: f64,
    /// Gaussian baseline at order 1 with the same sensitivity.
    pub eps_gauss: f64,
}

pub fn budget_row(levels: usize, noise: NoiseSpec, clip: f64) -> Result<BudgetRow> {
    let mech = MechanismSpec::new(noise, QuantizerSpec::new(levels, clip)?);
    Ok(BudgetRow {
        levels,
        eps_one: epsilon_one(&mech)?,
        eps_inf: epsilon_infinity(&mech)?,
        eps_gauss: gaussian_rdp_baseline(mech.sensitivity, noise.sigma(), Order::Finite(1.0))?.epsilon,
    })
}

/// Budgets for each level count, in the order given.
pub fn budget_sweep(levels: &[usize], noise: NoiseSpec, clip: f64) -> Result<Vec<BudgetRow>> {
    levels.iter().map(|&k| budget_row(k, noise, clip)).collect()
}

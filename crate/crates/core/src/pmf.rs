//! Exact output distribution of the quantized Gaussian mechanism.
//!
//! For an input `x` the mechanism draws `t ~ N(x, sigma^2)`, clamps `t` to
//! `[-c_q, c_q]` and rounds stochastically onto the lattice. Level `r`
//! collects the rising half of the hat function on `[B(r-1), B(r)]`, the
//! falling half on `[B(r), B(r+1)]` and, for the two end levels, the tail
//! mass beyond the clipping radius. Every integral has a closed form in the
//! normal CDF and density.

use crate::error::{Error, Result};
use crate::quantizer::QuantizerSpec;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn gaussian_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal CDF.
pub fn gaussian_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal upper tail `1 - Phi(z)`, accurate for large `z`.
pub fn gaussian_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z * std::f64::consts::FRAC_1_SQRT_2)
}

/// `P[a <= Z <= b]` for standard normal `Z`, evaluated on whichever side
/// avoids cancellation.
fn standard_mass(za: f64, zb: f64) -> f64 {
    let m = if za > 0.0 {
        gaussian_sf(za) - gaussian_sf(zb)
    } else {
        gaussian_cdf(zb) - gaussian_cdf(za)
    };
    m.max(0.0)
}

fn check_interval(a: f64, b: f64, mu: f64, sigma: f64) -> Result<()> {
    if a.is_nan() || b.is_nan() || a > b {
        return Err(Error::param("a", format!("interval [{a}, {b}] is empty or reversed")));
    }
    if !mu.is_finite() {
        return Err(Error::param("mu", "must be finite"));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    Ok(())
}

/// Mass of `N(mu, sigma^2)` on `[a, b]`. Either end may be infinite.
pub fn interval_mass(a: f64, b: f64, mu: f64, sigma: f64) -> Result<f64> {
    check_interval(a, b, mu, sigma)?;
    Ok(standard_mass((a - mu) / sigma, (b - mu) / sigma))
}

/// `∫_a^b f(t) (t - a) dt` with `f` the density of `N(mu, sigma^2)`.
///
/// Equals `(mu - a)(F(b) - F(a)) + sigma^2 (f(a) - f(b))`.
pub fn partial_first_moment(a: f64, b: f64, mu: f64, sigma: f64) -> Result<f64> {
    check_interval(a, b, mu, sigma)?;
    if a == b {
        return Ok(0.0);
    }
    let (za, zb) = ((a - mu) / sigma, (b - mu) / sigma);
    let v = sigma * (gaussian_pdf(za) - gaussian_pdf(zb) - za * standard_mass(za, zb));
    Ok(v.max(0.0))
}

/// `∫_a^b f(t) (b - t) dt`, the mirror image of [`partial_first_moment`].
pub fn partial_upper_moment(a: f64, b: f64, mu: f64, sigma: f64) -> Result<f64> {
    check_interval(a, b, mu, sigma)?;
    if a == b {
        return Ok(0.0);
    }
    let (za, zb) = ((a - mu) / sigma, (b - mu) / sigma);
    let v = sigma * (zb * standard_mass(za, zb) - (gaussian_pdf(za) - gaussian_pdf(zb)));
    Ok(v.max(0.0))
}

/// Standard deviation of the additive Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    sigma: f64,
}

impl NoiseSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::param(
                "sigma",
                format!("must be positive and finite, got {sigma}"),
            ));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Probability of each lattice level for one input scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelPmf {
    spec: QuantizerSpec,
    center: f64,
    probs: Vec<f64>,
}

impl LevelPmf {
    pub fn spec(&self) -> &QuantizerSpec {
        &self.spec
    }

    /// The mechanism input this pmf belongs to.
    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Output pmf of `Q(x + N(0, sigma^2); k, c_q)` for `x` in `[-c_q/2, c_q/2]`.
pub fn quantized_gaussian_pmf(x: f64, noise: NoiseSpec, spec: QuantizerSpec) -> Result<LevelPmf> {
    let half = spec.clip() / 2.0;
    if !(x >= -half && x <= half) {
        return Err(Error::OutOfRange {
            value: x,
            lo: -half,
            hi: half,
        });
    }
    let sigma = noise.sigma();
    let k = spec.levels();
    let step = spec.step();
    let b = spec.lattice();

    // Rising half of the hat on [B(r-1), B(r)] lands on level r; falling half
    // on [B(r), B(r+1)] lands on level r.
    let rising: Vec<f64> = (1..k)
        .map(|r| partial_first_moment(b[r - 1], b[r], x, sigma).map(|m| m / step))
        .collect::<Result<_>>()?;
    let falling: Vec<f64> = (0..k - 1)
        .map(|r| partial_upper_moment(b[r], b[r + 1], x, sigma).map(|m| m / step))
        .collect::<Result<_>>()?;

    let mut probs = vec![0.0; k];
    probs[0] = gaussian_cdf((b[0] - x) / sigma) + falling[0];
    probs[k - 1] = rising[k - 2] + gaussian_sf((b[k - 1] - x) / sigma);
    for r in 1..k - 1 {
        probs[r] = rising[r - 1] + falling[r];
    }
    Ok(LevelPmf { spec, center: x, probs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cdf_values() {
        assert_eq!(gaussian_cdf(0.0), 0.5);
        assert_eq!(gaussian_cdf(f64::INFINITY), 1.0);
        assert_eq!(gaussian_cdf(f64::NEG_INFINITY), 0.0);
        assert!((gaussian_cdf(1.959963985) - 0.975).abs() < 1e-9);
        assert!((gaussian_sf(10.0) / 7.619_853_024_160_526e-24 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_moment_edges() {
        assert_eq!(partial_first_moment(0.3, 0.3, 0.0, 1.0).unwrap(), 0.0);
        assert!(partial_first_moment(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(partial_first_moment(0.0, 1.0, 0.0, 0.0).is_err());
        let (mu, sigma) = (0.7, 2.0);
        let m = partial_first_moment(mu - 10.0 * sigma, mu + 10.0 * sigma, mu, sigma).unwrap();
        assert!((m - 10.0 * sigma).abs() < 1e-9);
    }

    #[test]
    fn k2_midpoint_is_symmetric() {
        let p = quantized_gaussian_pmf(0.0, NoiseSpec::new(1.0).unwrap(), QuantizerSpec::new(2, 1.0).unwrap()).unwrap();
        assert!((p.probs()[0] - 0.5).abs() < 1e-15);
        assert!((p.probs()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_inputs_outside_half_radius() {
        let err =
            quantized_gaussian_pmf(0.6, NoiseSpec::new(1.0).unwrap(), QuantizerSpec::new(4, 1.0).unwrap()).unwrap_err();
        assert!(err.to_string().contains("[-0.5, 0.5]"), "{err}");
    }

    #[test]
    fn vanishing_noise_recovers_two_point_rounding() {
        let spec = QuantizerSpec::new(5, 1.0).unwrap();
        for &x in &[-0.4, -0.1, 0.2, 0.45] {
            let p = quantized_gaussian_pmf(x, NoiseSpec::new(1e-6).unwrap(), spec).unwrap();
            let (r, up) = spec.rounding(x);
            for (i, &pi) in p.probs().iter().enumerate() {
                let want = if i == r {
                    1.0 - up
                } else if i == r + 1 {
                    up
                } else {
                    0.0
                };
                assert!((pi - want).abs() < 1e-6, "x={x} level {i}: {pi} vs {want}");
            }
        }
    }

    proptest! {
        #[test]
        fn normalized_and_positive(u in -1.0f64..1.0, sigma in 0.2f64..5.0, k in 2usize..80, c in 0.1f64..4.0) {
            let spec = QuantizerSpec::new(k, c).unwrap();
            let p = quantized_gaussian_pmf(u * c / 2.0, NoiseSpec::new(sigma).unwrap(), spec).unwrap();
            prop_assert!((p.total() - 1.0).abs() < 1e-9);
            prop_assert!(p.probs().iter().all(|&v| v > 0.0));
        }

        #[test]
        fn mirror_symmetry(u in 0.0f64..1.0, sigma in 0.1f64..3.0, k in 2usize..40) {
            let spec = QuantizerSpec::new(k, 1.0).unwrap();
            let noise = NoiseSpec::new(sigma).unwrap();
            let p = quantized_gaussian_pmf(u * 0.5, noise, spec).unwrap();
            let q = quantized_gaussian_pmf(-u * 0.5, noise, spec).unwrap();
            for (a, b) in p.probs().iter().zip(q.probs().iter().rev()) {
                prop_assert!((a - b).abs() <= 1e-14 + 1e-12 * a.abs());
            }
        }
    }
}

//! Independent numerical oracles shared by the integration suites.

#![allow(dead_code)]

use std::f64::consts::PI;

pub fn normal_density(t: f64, mu: f64, sigma: f64) -> f64 {
    let z = (t - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    // Split into panels so narrow Gaussian bumps are never missed.
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (lo, hi) = (a + h * i as f64, a + h * (i + 1) as f64);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson_step(&f, lo, hi, fa, fm, fb, whole, tol / panels as f64, 40)
        })
        .sum()
}

/// Standard normal CDF by quadrature of the density.
pub fn cdf_by_quadrature(z: f64) -> f64 {
    let half = integrate(|t| normal_density(t, 0.0, 1.0), 0.0, z.abs(), 1e-15);
    if z >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// `∫_a^b N(t; mu, sigma) (t - a) dt` by quadrature.
pub fn first_moment_by_quadrature(a: f64, b: f64, mu: f64, sigma: f64) -> f64 {
    integrate(|t| normal_density(t, mu, sigma) * (t - a), a, b, 1e-15)
}

/// Level probabilities of the quantized Gaussian by quadrature of the
/// density against hat functions; tails are folded into the end levels.
pub fn pmf_by_quadrature(x: f64, sigma: f64, k: usize, c: f64) -> Vec<f64> {
    let step = 2.0 * c / (k as f64 - 1.0);
    let level = |r: usize| -c + 2.0 * c * r as f64 / (k as f64 - 1.0);
    let f = |t: f64| normal_density(t, x, sigma);
    let far = 40.0 * sigma;
    let tol = 1e-16;
    (0..k)
        .map(|r| {
            let mut p = 0.0;
            if r == 0 {
                p += integrate(f, (x - far).min(-c), -c, tol);
            } else {
                let lo = level(r - 1);
                p += integrate(|t| f(t) * (t - lo) / step, lo, level(r), tol);
            }
            if r == k - 1 {
                p += integrate(f, c, (x + far).max(c), tol);
            } else {
                let hi = level(r + 1);
                p += integrate(|t| f(t) * (hi - t) / step, level(r), hi, tol);
            }
            p
        })
        .collect()
}

pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).ln())
        .sum()
}

/// Order-1 budget from quadrature pmfs at `+c/2` and `-c/2`.
pub fn epsilon_one_by_quadrature(sigma: f64, k: usize, c: f64) -> f64 {
    kl(
        &pmf_by_quadrature(c / 2.0, sigma, k, c),
        &pmf_by_quadrature(-c / 2.0, sigma, k, c),
    )
}

/// Order-infinity bound with the integral evaluated by quadrature.
pub fn epsilon_infinity_by_quadrature(sigma: f64, k: usize, c: f64) -> f64 {
    let step = 2.0 * c / (k as f64 - 1.0);
    let lo = c - step;
    (step / first_moment_by_quadrature(lo, c, -c / 2.0, sigma)).ln()
}

/// Reference logistic regression: full-batch gradient descent written
/// without the simulator's helpers. Rows are `(features, label)`.
pub fn reference_gradient_descent(rows: &[(Vec<f64>, f64)], lr: f64, steps: usize) -> Vec<f64> {
    let d = rows[0].0.len();
    let mut w = vec![0.0; d + 1];
    for _ in 0..steps {
        let mut g = vec![0.0; d + 1];
        for (x, y) in rows {
            let z: f64 = (0..d).map(|j| w[j] * x[j]).sum::<f64>() + w[d];
            let p = 1.0 / (1.0 + (-z).exp());
            for j in 0..d {
                g[j] += (p - y) * x[j];
            }
            g[d] += p - y;
        }
        for j in 0..=d {
            w[j] -= lr * g[j] / rows.len() as f64;
        }
    }
    w
}

pub fn reference_accuracy(w: &[f64], rows: &[(Vec<f64>, f64)]) -> f64 {
    let d = w.len() - 1;
    let correct = rows
        .iter()
        .filter(|(x, y)| {
            let z: f64 = (0..d).map(|j| w[j] * x[j]).sum::<f64>() + w[d];
            (z >= 0.0) == (*y > 0.5)
        })
        .count();
    correct as f64 / rows.len() as f64
}

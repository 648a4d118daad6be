//! Synthetic binary classification task and the logistic-regression model.
//!
//! Features are drawn from a two-component Gaussian mixture: label `y` in
//! `{0, 1}` is a fair coin, and `x ~ N(s(y) * margin/2 * u, I_d)` where
//! `u = (1, ..., 1)/sqrt(d)` and `s(y) = 2y - 1`.

use rand::Rng;
use rand_distr::StandardNormal;

/// One labelled example. Ids are unique across every dataset a run creates.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: u64,
    pub features: Vec<f64>,
    pub label: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticTask {
    pub dim: usize,
    pub samples_per_client: usize,
    pub margin: f64,
}

impl Default for SyntheticTask {
    fn default() -> Self {
        Self {
            dim: 20,
            samples_per_client: 50,
            margin: 4.0,
        }
    }
}

/// Builds a globally unique sample id from a namespace, a group and an index.
pub fn sample_id(namespace: u8, group: u64, index: u64) -> u64 {
    (u64::from(namespace) << 56) | ((group & 0xff_ffff) << 32) | (index & 0xffff_ffff)
}

impl SyntheticTask {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, id: u64) -> Sample {
        let label = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        let shift = (2.0 * label - 1.0) * self.margin / 2.0 / (self.dim as f64).sqrt();
        let features = (0..self.dim)
            .map(|_| shift + rng.sample::<f64, _>(StandardNormal))
            .collect();
        Sample { id, features, label }
    }

    pub fn draw_many<R: Rng + ?Sized>(&self, rng: &mut R, n: usize, namespace: u8, group: u64) -> Vec<Sample> {
        (0..n)
            .map(|i| self.draw(rng, sample_id(namespace, group, i as u64)))
            .collect()
    }
}

/// Linear logit `w[..d] . x + w[d]`.
pub fn logit(weights: &[f64], features: &[f64]) -> f64 {
    let (w, bias) = weights.split_at(features.len());
    w.iter().zip(features).map(|(a, b)| a * b).sum::<f64>() + bias[0]
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of one sample.
pub fn sample_loss(weights: &[f64], sample: &Sample) -> f64 {
    let z = logit(weights, &sample.features);
    softplus(z) - sample.label * z
}

/// Mean cross-entropy gradient over `batch`, written into `grad`.
pub fn mean_gradient<'a>(weights: &[f64], batch: impl IntoIterator<Item = &'a Sample>, grad: &mut [f64]) {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let d = grad.len() - 1;
    let mut n = 0usize;
    for s in batch {
        let err = sigmoid(logit(weights, &s.features)) - s.label;
        for (g, x) in grad[..d].iter_mut().zip(&s.features) {
            *g += err * x;
        }
        grad[d] += err;
        n += 1;
    }
    if n > 0 {
        let inv = 1.0 / n as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
    }
}

/// `(accuracy, mean loss)` on `data`.
pub fn evaluate(weights: &[f64], data: &[Sample]) -> (f64, f64) {
    if data.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut correct = 0usize;
    let mut loss = 0.0;
    for s in data {
        let z = logit(weights, &s.features);
        if (z >= 0.0) == (s.label > 0.5) {
            correct += 1;
        }
        loss += softplus(z) - s.label * z;
    }
    (correct as f64 / data.len() as f64, loss / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn loss_matches_direct_formula() {
        let s = Sample {
            id: 0,
            features: vec![0.5, -1.0],
            label: 1.0,
        };
        let w = [0.3, 0.2, -0.1];
        let z: f64 = 0.3 * 0.5 - 0.2 - 0.1;
        let p = 1.0 / (1.0 + (-z).exp());
        assert!((sample_loss(&w, &s) + p.ln()).abs() < 1e-14);
        let big = [1000.0, 0.0, 0.0];
        assert!(sample_loss(&big, &s).is_finite());
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let task = SyntheticTask {
            dim: 3,
            samples_per_client: 0,
            margin: 1.0,
        };
        let data = task.draw_many(&mut stream(3, Purpose::Scratch, 0, 0), 7, 0, 0);
        let w = vec![0.1, -0.4, 0.25, 0.05];
        let mut g = vec![0.0; 4];
        mean_gradient(&w, &data, &mut g);
        let mean_loss = |w: &[f64]| data.iter().map(|s| sample_loss(w, s)).sum::<f64>() / data.len() as f64;
        for j in 0..4 {
            let h = 1e-6;
            let mut up = w.clone();
            up[j] += h;
            let mut dn = w.clone();
            dn[j] -= h;
            let fd = (mean_loss(&up) - mean_loss(&dn)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-8, "coord {j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn ids_are_unique_across_groups() {
        assert_ne!(sample_id(1, 0, 5), sample_id(1, 1, 5));
        assert_ne!(sample_id(1, 0, 5), sample_id(2, 0, 5));
    }
}

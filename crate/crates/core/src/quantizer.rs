//! k-level stochastic quantizer with clipping.
//!
//! Inputs are first clipped to an l2 ball of radius `c_q`, then every
//! coordinate is rounded at random to one of the two adjacent points of the
//! lattice `B(r) = -c_q + r * delta`, `delta = 2 c_q / (k - 1)`, with
//! probabilities that make the rounding unbiased.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;

/// Parameters of a k-level quantizer. The step is always derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec {
    levels: usize,
    clip: f64,
}

impl QuantizerSpec {
    pub fn new(levels: usize, clip: f64) -> Result<Self> {
        if levels < 2 {
            return Err(Error::param("k", format!("need at least 2 levels, got {levels}")));
        }
        if !(clip.is_finite() && clip > 0.0) {
            return Err(Error::param("c_q", format!("must be positive and finite, got {clip}")));
        }
        Ok(Self { levels, clip })
    }

    /// Number of levels `k`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Clipping radius `c_q`.
    pub fn clip(&self) -> f64 {
        self.clip
    }

    /// Distance between adjacent levels.
    pub fn step(&self) -> f64 {
        2.0 * self.clip / (self.levels - 1) as f64
    }

    /// Level `B(r)`. The endpoints are exactly `-c_q` and `+c_q`.
    pub fn level(&self, r: usize) -> f64 {
        assert!(r < self.levels, "level index {r} out of range");
        if r == 0 {
            -self.clip
        } else if r == self.levels - 1 {
            self.clip
        } else {
            -self.clip + self.step() * r as f64
        }
    }

    pub fn lattice(&self) -> Vec<f64> {
        (0..self.levels).map(|r| self.level(r)).collect()
    }

    /// Index `r` of the lower bracketing level, so `x` lies in `[B(r), B(r+1)]`.
    /// Input must already be inside `[-c_q, c_q]`.
    pub fn bracket(&self, x: f64) -> usize {
        let r = ((x + self.clip) / self.step()).floor();
        if r.is_nan() || r < 0.0 {
            0
        } else {
            (r as usize).min(self.levels - 2)
        }
    }

    /// Lower bracket index and the probability of rounding up to `B(r+1)`.
    pub fn rounding(&self, x: f64) -> (usize, f64) {
        let x = x.clamp(-self.clip, self.clip);
        let r = self.bracket(x);
        let lo = self.level(r);
        let hi = self.level(r + 1);
        let p_up = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        (r, p_up)
    }

    /// Rounds one in-range scalar given a uniform draw in `[0, 1)`.
    pub fn round_with(&self, x: f64, uniform: f64) -> f64 {
        let (r, p_up) = self.rounding(x);
        if uniform < p_up {
            self.level(r + 1)
        } else {
            self.level(r)
        }
    }

    /// Index of the lattice point nearest to `v`; exact for lattice outputs.
    pub fn index_of(&self, v: f64) -> usize {
        let r = ((v + self.clip) / self.step()).round();
        if r <= 0.0 {
            0
        } else {
            (r as usize).min(self.levels - 1)
        }
    }
}

fn check_finite(w: &[f64]) -> Result<()> {
    match w.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

pub fn l2_norm(w: &[f64]) -> f64 {
    w.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Scales `w` by `min(1, radius / ||w||_2)`.
pub fn clip_vector(w: &[f64], radius: f64) -> Result<Vec<f64>> {
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::param("radius", format!("must be positive, got {radius}")));
    }
    check_finite(w)?;
    let norm = l2_norm(w);
    if norm <= radius {
        return Ok(w.to_vec());
    }
    let scale = radius / norm;
    Ok(w.iter().map(|v| v * scale).collect())
}

/// Clips `w` to the quantizer's ball and rounds every coordinate.
///
/// Each coordinate consumes exactly one `f64` (one `u64`) from `rng`, in
/// index order.
pub fn quantize<R: Rng + ?Sized>(w: &[f64], spec: &QuantizerSpec, rng: &mut R) -> Result<Vec<f64>> {
    let clipped = clip_vector(w, spec.clip())?;
    Ok(clipped
        .iter()
        .map(|&x| spec.round_with(x, rng.random::<f64>()))
        .collect())
}

/// Parallel counterpart of [`quantize`] driven by `(seed, stream_id)`.
///
/// Output is identical to `quantize(w, spec, &mut rng::stream_at(seed, stream_id, 0))`.
pub fn quantize_par(w: &[f64], spec: &QuantizerSpec, seed: u64, stream_id: u64) -> Result<Vec<f64>> {
    const CHUNK: usize = 4096;
    let clipped = clip_vector(w, spec.clip())?;
    let mut out = vec![0.0; clipped.len()];
    out.par_chunks_mut(CHUNK)
        .zip(clipped.par_chunks(CHUNK))
        .enumerate()
        .for_each(|(chunk, (dst, src))| {
            let mut rng = rng::stream_at(seed, stream_id, (chunk * CHUNK) as u64);
            for (d, &x) in dst.iter_mut().zip(src) {
                *d = spec.round_with(x, rng.random::<f64>());
            }
        });
    Ok(out)
}

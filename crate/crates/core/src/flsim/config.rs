use std::fmt;
use std::str::FromStr;

use super::task::SyntheticTask;
use crate::error::{Error, Result};
use crate::kv::KvMap;
use crate::quantizer::QuantizerSpec;

/// Quantizer stage of the client pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantization {
    None,
    Levels(usize),
}

impl fmt::Display for Quantization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantization::None => f.write_str("none"),
            Quantization::Levels(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for Quantization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "none" => Ok(Quantization::None),
            other => match other.parse::<usize>() {
                Ok(k) if k >= 2 => Ok(Quantization::Levels(k)),
                _ => Err("expected `none` or an integer >= 2".into()),
            },
        }
    }
}

/// Local optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Sgd,
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Optimizer::Sgd => f.write_str("sgd"),
        }
    }
}

impl FromStr for Optimizer {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "sgd" => Ok(Optimizer::Sgd),
            _ => Err("supported optimizers: sgd".into()),
        }
    }
}

/// Hyperparameters of one federated run.
#[derive(Debug, Clone, PartialEq)]
pub struct FlRunConfig {
    pub n_clients_total: usize,
    pub n_sampled: usize,
    pub rounds: usize,
    pub local_steps: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Quantizer clipping radius. Client deltas are clipped to half of it.
    pub c_q: f64,
    /// Per-coordinate noise standard deviation.
    pub sigma: f64,
    pub quantization: Quantization,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub task: SyntheticTask,
    pub test_samples: usize,
}

impl Default for FlRunConfig {
    fn default() -> Self {
        Self {
            n_clients_total: 8,
            n_sampled: 8,
            rounds: 30,
            local_steps: 10,
            learning_rate: 0.5,
            batch_size: 16,
            c_q: 1.0,
            sigma: 0.0,
            quantization: Quantization::None,
            optimizer: Optimizer::Sgd,
            seed: 0,
            task: SyntheticTask::default(),
            test_samples: 2000,
        }
    }
}

impl FlRunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_clients_total == 0 {
            return Err(Error::param("clients", "need at least one client"));
        }
        if self.n_sampled == 0 || self.n_sampled > self.n_clients_total {
            return Err(Error::param(
                "sampled",
                format!("must lie in 1..={}, got {}", self.n_clients_total, self.n_sampled),
            ));
        }
        if self.rounds == 0 {
            return Err(Error::param("rounds", "must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch_size", "must be >= 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning_rate", "must be finite and >= 0"));
        }
        if !(self.c_q > 0.0 && self.c_q.is_finite()) {
            return Err(Error::param("c_q", "must be positive"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::param("sigma", "must be finite and >= 0"));
        }
        if self.task.dim == 0 {
            return Err(Error::param("dim", "must be >= 1"));
        }
        if !self.task.margin.is_finite() {
            return Err(Error::param("margin", "must be finite"));
        }
        self.quantizer()?;
        Ok(())
    }

    pub fn quantizer(&self) -> Result<Option<QuantizerSpec>> {
        match self.quantization {
            Quantization::None => Ok(None),
            Quantization::Levels(k) => QuantizerSpec::new(k, self.c_q).map(Some),
        }
    }

    /// Model dimension: features plus bias.
    pub fn model_dim(&self) -> usize {
        self.task.dim + 1
    }

    /// Consumes the simulator keys from `kv`; missing keys take defaults.
    pub fn from_kv(kv: &mut KvMap) -> Result<Self> {
        let d = Self::default();
        let cfg = Self {
            n_clients_total: kv.take_or("clients", d.n_clients_total)?,
            n_sampled: kv.take_or("sampled", d.n_sampled)?,
            rounds: kv.take_or("rounds", d.rounds)?,
            local_steps: kv.take_or("local_steps", d.local_steps)?,
            learning_rate: kv.take_or("learning_rate", d.learning_rate)?,
            batch_size: kv.take_or("batch_size", d.batch_size)?,
            c_q: kv.take_or("c_q", d.c_q)?,
            sigma: kv.take_or("sigma", d.sigma)?,
            quantization: kv.take_or("k", d.quantization)?,
            optimizer: kv.take_or("optimizer", d.optimizer)?,
            seed: kv.take_or("seed", d.seed)?,
            task: SyntheticTask {
                dim: kv.take_or("dim", d.task.dim)?,
                samples_per_client: kv.take_or("samples_per_client", d.task.samples_per_client)?,
                margin: kv.take_or("margin", d.task.margin)?,
            },
            test_samples: kv.take_or("test_samples", d.test_samples)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KvMap::parse(text)?;
        let cfg = Self::from_kv(&mut kv)?;
        kv.finish()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> Vec<(&'static str, String)> {
        vec![
            ("clients", self.n_clients_total.to_string()),
            ("sampled", self.n_sampled.to_string()),
            ("rounds", self.rounds.to_string()),
            ("local_steps", self.local_steps.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("c_q", self.c_q.to_string()),
            ("sigma", self.sigma.to_string()),
            ("k", self.quantization.to_string()),
            ("optimizer", self.optimizer.to_string()),
            ("seed", self.seed.to_string()),
            ("dim", self.task.dim.to_string()),
            ("samples_per_client", self.task.samples_per_client.to_string()),
            ("margin", self.task.margin.to_string()),
            ("test_samples", self.test_samples.to_string()),
        ]
    }
}

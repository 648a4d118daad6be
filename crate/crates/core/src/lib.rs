//! Privacy accounting for federated learning with quantized Gaussian noise.
//!
//! * [`quantizer`]: k-level stochastic quantizer with l2 clipping.
//! * [`pmf`]: exact output pmf of the quantized Gaussian mechanism.
//! * [`accountant`]: Renyi divergences, the order-1 and order-infinity
//!   budgets, the Gaussian baseline, composition, conversion and calibration.
//! * [`flsim`]: federated averaging with privatized client deltas.
//! * [`lira`]: offline likelihood-ratio membership inference.
//! * [`cli`]: the `qdp` binary.

pub mod accountant;
pub mod cli;
pub mod error;
pub mod flsim;
pub mod kv;
pub mod lira;
pub mod pmf;
pub mod quantizer;
pub mod rng;

pub use error::{Error, Result};

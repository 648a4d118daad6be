//! Desk-scale federated averaging with clipped, noised and quantized client
//! deltas.
//!
//! Each round the server samples `n` of `N` clients without replacement.
//! Every sampled client runs local SGD on a logistic-regression model,
//! clips its weight delta to `c_q / 2`, adds per-coordinate Gaussian noise
//! and passes the result through the `(k, c_q)` stochastic quantizer. The
//! server adds the size-weighted average of the privatized deltas.

pub mod artifact;
pub mod config;
pub mod task;
pub mod train;

pub use config::{FlRunConfig, Optimizer, Quantization};
pub use task::{Sample, SyntheticTask};
pub use train::{
    aggregate, averaging_coefficients, local_update, privatize_delta, train, train_centralized, train_on, ClientUpdate,
    FederatedData, GlobalModel, RoundMetrics, RunArtifact,
};

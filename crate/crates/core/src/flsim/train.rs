use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::config::FlRunConfig;
use super::task::{evaluate, mean_gradient, Sample};
use crate::error::{Error, Result};
use crate::quantizer::{clip_vector, quantize};
use crate::rng::{self, Purpose};

/// Sample-id namespaces for generated data.
pub(crate) const NS_CLIENT: u8 = 1;
pub(crate) const NS_TEST: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalModel {
    pub weights: Vec<f64>,
    pub round: usize,
}

impl GlobalModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            round: 0,
        }
    }
}

/// A privatized client delta and the size of the shard that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate {
    pub client: usize,
    pub delta: Vec<f64>,
    pub samples: usize,
}

/// Averaging coefficients `|D_i| / sum_j |D_j|` over the participating clients.
pub fn averaging_coefficients(updates: &[ClientUpdate]) -> Vec<f64> {
    let total: usize = updates.iter().map(|u| u.samples).sum();
    updates.iter().map(|u| u.samples as f64 / total as f64).collect()
}

/// Runs `local_steps` mini-batch SGD steps from the global weights.
///
/// When the batch covers the whole shard every step is a full-batch
/// gradient step in shard order; otherwise batches walk a shuffled
/// permutation that is redrawn every epoch.
pub fn local_update<R: Rng + ?Sized>(
    model: &GlobalModel,
    shard: &[Sample],
    config: &FlRunConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if shard.is_empty() {
        return Err(Error::param("shard", "client has no data"));
    }
    let mut w = model.weights.clone();
    let mut grad = vec![0.0; w.len()];
    let full_batch = config.batch_size >= shard.len();
    let mut order: Vec<usize> = (0..shard.len()).collect();
    let mut cursor = shard.len();
    for _ in 0..config.local_steps {
        if full_batch {
            mean_gradient(&w, shard, &mut grad);
        } else {
            let mut batch = Vec::with_capacity(config.batch_size);
            while batch.len() < config.batch_size {
                if cursor == order.len() {
                    order.shuffle(rng);
                    cursor = 0;
                }
                batch.push(&shard[order[cursor]]);
                cursor += 1;
            }
            mean_gradient(&w, batch, &mut grad);
        }
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi -= config.learning_rate * gi;
        }
    }
    Ok(w)
}

/// Clip to `c_q / 2`, add `N(0, sigma^2)` per coordinate, then quantize with
/// `(k, c_q)`. Disabled stages are the identity.
pub fn privatize_delta<R: Rng + ?Sized>(delta: &[f64], config: &FlRunConfig, rng: &mut R) -> Result<Vec<f64>> {
    let mut h = clip_vector(delta, config.c_q / 2.0)?;
    if config.sigma > 0.0 {
        for v in h.iter_mut() {
            *v += config.sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    match config.quantizer()? {
        Some(spec) => quantize(&h, &spec, rng),
        None => Ok(h),
    }
}

/// `w_{t+1} = w_t + sum_i alpha_i delta_i` with renormalized coefficients.
pub fn aggregate(updates: &[ClientUpdate], model: &GlobalModel) -> Result<GlobalModel> {
    if updates.is_empty() {
        return Err(Error::NoUpdates { round: model.round + 1 });
    }
    let mut weights = model.weights.clone();
    for (u, a) in updates.iter().zip(averaging_coefficients(updates)) {
        if u.delta.len() != weights.len() {
            return Err(Error::param("delta", "dimension does not match the model"));
        }
        for (w, d) in weights.iter_mut().zip(&u.delta) {
            *w += a * d;
        }
    }
    Ok(GlobalModel {
        weights,
        round: model.round + 1,
    })
}

/// Client shards and the held-out test set of a run.
#[derive(Debug, Clone)]
pub struct FederatedData {
    pub shards: Vec<Vec<Sample>>,
    pub test: Vec<Sample>,
}

impl FederatedData {
    pub fn generate(config: &FlRunConfig) -> Self {
        let task = config.task;
        let shards = (0..config.n_clients_total)
            .map(|c| {
                let mut rng = rng::stream(config.seed, Purpose::ClientData, c as u64, 0);
                task.draw_many(&mut rng, task.samples_per_client, NS_CLIENT, c as u64)
            })
            .collect();
        let mut rng = rng::stream(config.seed, Purpose::TestData, 0, 0);
        let test = task.draw_many(&mut rng, config.test_samples, NS_TEST, 0);
        Self { shards, test }
    }

    pub fn training_samples(&self) -> impl Iterator<Item = &Sample> {
        self.shards.iter().flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundMetrics {
    pub round: usize,
    pub test_accuracy: f64,
    pub test_loss: f64,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub config: FlRunConfig,
    pub metrics: Vec<RoundMetrics>,
    pub model: GlobalModel,
    pub diagnostics: Vec<String>,
}

impl RunArtifact {
    pub fn final_accuracy(&self) -> f64 {
        self.metrics.last().map_or(f64::NAN, |m| m.test_accuracy)
    }
}

fn sampled_clients(config: &FlRunConfig, round: usize) -> Vec<usize> {
    if config.n_sampled == config.n_clients_total {
        return (0..config.n_clients_total).collect();
    }
    let mut rng = rng::stream(config.seed, Purpose::ClientSampling, round as u64, 0);
    let mut picked = rand::seq::index::sample(&mut rng, config.n_clients_total, config.n_sampled).into_vec();
    picked.sort_unstable();
    picked
}

fn client_update(
    config: &FlRunConfig,
    model: &GlobalModel,
    shard: &[Sample],
    round: usize,
    client: usize,
) -> Result<ClientUpdate> {
    let mut local_rng = rng::stream(config.seed, Purpose::LocalUpdate, round as u64, client as u64);
    let local = local_update(model, shard, config, &mut local_rng)?;
    let raw: Vec<f64> = local.iter().zip(&model.weights).map(|(a, b)| a - b).collect();
    let mut noise_rng = rng::stream(config.seed, Purpose::Noise, round as u64, client as u64);
    Ok(ClientUpdate {
        client,
        delta: privatize_delta(&raw, config, &mut noise_rng)?,
        samples: shard.len(),
    })
}

/// Runs federated averaging on freshly generated data.
pub fn train(config: &FlRunConfig) -> Result<RunArtifact> {
    config.validate()?;
    train_on(config, &FederatedData::generate(config))
}

/// Runs federated averaging on the given shards.
///
/// Client work within a round runs in parallel; every `(round, client)` pair
/// owns its random streams, so results do not depend on scheduling.
pub fn train_on(config: &FlRunConfig, data: &FederatedData) -> Result<RunArtifact> {
    config.validate()?;
    if data.shards.len() != config.n_clients_total {
        return Err(Error::param("clients", "shard count does not match the config"));
    }
    let mut model = GlobalModel::zeros(config.model_dim());
    let mut metrics = Vec::with_capacity(config.rounds);
    let mut diagnostics = Vec::new();
    for round in 0..config.rounds {
        let sampled = sampled_clients(config, round);
        let results: Vec<(usize, Result<ClientUpdate>)> = sampled
            .par_iter()
            .map(|&c| (c, client_update(config, &model, &data.shards[c], round, c)))
            .collect();
        let mut updates = Vec::with_capacity(results.len());
        for (client, r) in results {
            match r {
                Ok(u) => updates.push(u),
                Err(e) => diagnostics.push(format!("round {}: client {client} skipped: {e}", round + 1)),
            }
        }
        model = match aggregate(&updates, &model) {
            Ok(m) => m,
            Err(e) => {
                diagnostics.push(format!("round {} skipped: {e}", round + 1));
                GlobalModel {
                    weights: model.weights,
                    round: model.round + 1,
                }
            }
        };
        if model.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Diverged { round: round + 1 });
        }
        let (test_accuracy, test_loss) = evaluate(&model.weights, &data.test);
        metrics.push(RoundMetrics {
            round: round + 1,
            test_accuracy,
            test_loss,
        });
    }
    Ok(RunArtifact {
        config: config.clone(),
        metrics,
        model,
        diagnostics,
    })
}

/// Plain centralized SGD with the same optimizer settings, used for shadow
/// models. Runs `steps` mini-batch steps from zero weights.
pub fn train_centralized<R: Rng + ?Sized>(
    data: &[Sample],
    config: &FlRunConfig,
    steps: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let cfg = FlRunConfig {
        local_steps: steps,
        ..config.clone()
    };
    local_update(&GlobalModel::zeros(config.model_dim()), data, &cfg, rng)
}

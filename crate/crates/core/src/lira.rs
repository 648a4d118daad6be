//! Offline likelihood-ratio membership inference.
//!
//! Shadow models are trained centrally on data that contains none of the
//! audit samples. For every audit sample the attacker fits a Gaussian to the
//! shadow losses (the "out" distribution) and scores the target's loss by
//! its upper-tail probability under that Gaussian: a loss lower than what
//! non-member models produce looks like membership.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flsim::task::{logit, sample_loss, Sample};
use crate::flsim::{train_centralized, train_on, FederatedData, FlRunConfig};
use crate::kv::KvMap;
use crate::pmf::{gaussian_cdf, gaussian_sf};
use crate::rng::{self, Purpose};

pub const SIGMA_FLOOR: f64 = 1e-6;

const NS_SHADOW: u8 = 3;
const NS_AUDIT: u8 = 4;

/// Per-sample statistic the attack models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// Cross-entropy loss; lower means member-like.
    Loss,
    /// Logit of the true-class confidence; higher means member-like.
    LogitConfidence,
}

impl Statistic {
    pub fn eval(self, weights: &[f64], sample: &Sample) -> f64 {
        match self {
            Statistic::Loss => sample_loss(weights, sample),
            Statistic::LogitConfidence => (2.0 * sample.label - 1.0) * logit(weights, &sample.features),
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistic::Loss => "loss",
            Statistic::LogitConfidence => "logit_confidence",
        })
    }
}

impl FromStr for Statistic {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "loss" => Ok(Statistic::Loss),
            "logit_confidence" => Ok(Statistic::LogitConfidence),
            _ => Err("expected `loss` or `logit_confidence`".into()),
        }
    }
}

/// A shadow model and the ids of the samples it was trained on.
#[derive(Debug, Clone)]
pub struct ShadowModel {
    pub weights: Vec<f64>,
    pub train_ids: BTreeSet<u64>,
}

/// Fitted non-member distribution of one audit sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutStats {
    pub mu_out: f64,
    pub sigma_out: f64,
}

impl OutStats {
    /// Mean and population standard deviation, floored at [`SIGMA_FLOOR`].
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooFewShadows(values.len()));
        }
        let n = values.len() as f64;
        let mu = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
        Ok(Self {
            mu_out: mu,
            sigma_out: var.sqrt().max(SIGMA_FLOOR),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ShadowEnsemble {
    pub models: Vec<ShadowModel>,
    pub statistic: Statistic,
    pub per_sample_stats: BTreeMap<u64, OutStats>,
}

/// Fits the out distribution of every audit sample over the shadow models.
pub fn fit_out_distribution(
    models: Vec<ShadowModel>,
    audit: &[Sample],
    statistic: Statistic,
) -> Result<ShadowEnsemble> {
    if models.len() < 2 {
        return Err(Error::TooFewShadows(models.len()));
    }
    for (m, model) in models.iter().enumerate() {
        if let Some(s) = audit.iter().find(|s| model.train_ids.contains(&s.id)) {
            return Err(Error::ShadowOverlap { id: s.id, model: m });
        }
    }
    let mut per_sample_stats = BTreeMap::new();
    for s in audit {
        let values: Vec<f64> = models.iter().map(|m| statistic.eval(&m.weights, s)).collect();
        per_sample_stats.insert(s.id, OutStats::fit(&values)?);
    }
    Ok(ShadowEnsemble {
        models,
        statistic,
        per_sample_stats,
    })
}

/// Membership score of loss `l`: `Pr[L > l]` under `N(mu_out, sigma_out^2)`.
pub fn score(l: f64, stats: OutStats) -> f64 {
    gaussian_sf((l - stats.mu_out) / stats.sigma_out)
}

/// Membership score for any statistic, oriented so that 1 is member-like.
pub fn score_statistic(value: f64, stats: OutStats, statistic: Statistic) -> f64 {
    match statistic {
        Statistic::Loss => score(value, stats),
        Statistic::LogitConfidence => gaussian_cdf((value - stats.mu_out) / stats.sigma_out),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoredSample {
    pub id: u64,
    pub member: bool,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackReport {
    pub scores: Vec<ScoredSample>,
    pub accuracy: f64,
    /// Members are predicted when `score >= threshold`; `None` predicts nobody.
    pub threshold: Option<f64>,
    pub roc_points: Vec<(f64, f64)>,
}

/// Best balanced accuracy over all score thresholds, plus the ROC curve.
pub fn attack_accuracy(scored: &[ScoredSample]) -> Result<AttackReport> {
    let members = scored.iter().filter(|s| s.member).count();
    let non_members = scored.len() - members;
    if members == 0 || members != non_members {
        return Err(Error::Unbalanced { members, non_members });
    }
    if let Some(bad) = scored.iter().find(|s| !s.score.is_finite()) {
        return Err(Error::param("score", format!("non-finite score for sample {}", bad.id)));
    }
    let mut order: Vec<&ScoredSample> = scored.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score));

    let n = members as f64;
    let mut roc = vec![(0.0, 0.0)];
    // Predicting nobody: correct on every non-member.
    let mut best = (non_members, None);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = order[i].score;
        while i < order.len() && order[i].score == t {
            if order[i].member {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        roc.push((fp as f64 / n, tp as f64 / n));
        let correct = tp + (non_members - fp);
        if correct >= best.0 {
            best = (correct, Some(t));
        }
    }
    Ok(AttackReport {
        scores: scored.to_vec(),
        accuracy: best.0 as f64 / scored.len() as f64,
        threshold: best.1,
        roc_points: roc,
    })
}

/// Attack-side settings.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    pub shadow_models: usize,
    /// Total audit samples; half members, half non-members.
    pub audit_size: usize,
    /// Training-set size of each shadow model; defaults to the target's.
    pub shadow_samples: Option<usize>,
    pub statistic: Statistic,
    /// Independent repetitions with seeds `seed, seed + 1, ...`.
    pub repeats: usize,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            shadow_models: 16,
            audit_size: 100,
            shadow_samples: None,
            statistic: Statistic::Loss,
            repeats: 1,
        }
    }
}

impl AttackConfig {
    pub fn from_kv(kv: &mut KvMap) -> Result<Self> {
        let d = Self::default();
        let cfg = Self {
            shadow_models: kv.take_or("shadow_models", d.shadow_models)?,
            audit_size: kv.take_or("audit_size", d.audit_size)?,
            shadow_samples: kv.take("shadow_samples")?,
            statistic: kv.take_or("statistic", d.statistic)?,
            repeats: kv.take_or("repeats", d.repeats)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shadow_models < 2 {
            return Err(Error::TooFewShadows(self.shadow_models));
        }
        if self.audit_size < 2 || !self.audit_size.is_multiple_of(2) {
            return Err(Error::param("audit_size", "must be a positive even number"));
        }
        if self.repeats == 0 {
            return Err(Error::param("repeats", "must be >= 1"));
        }
        if self.shadow_samples == Some(0) {
            return Err(Error::param("shadow_samples", "must be >= 1"));
        }
        Ok(())
    }

    pub fn to_kv(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![
            ("shadow_models", self.shadow_models.to_string()),
            ("audit_size", self.audit_size.to_string()),
        ];
        if let Some(n) = self.shadow_samples {
            out.push(("shadow_samples", n.to_string()));
        }
        out.push(("statistic", self.statistic.to_string()));
        out.push(("repeats", self.repeats.to_string()));
        out
    }
}

/// One attack against one trained target.
#[derive(Debug, Clone)]
pub struct AuditOutcome {
    pub seed: u64,
    pub target_test_accuracy: f64,
    pub report: AttackReport,
}

/// Trains the target and `M` member-free shadow models, then attacks.
pub fn audit_run(fl: &FlRunConfig, attack: &AttackConfig) -> Result<AuditOutcome> {
    fl.validate()?;
    attack.validate()?;
    let seed = fl.seed;
    let data = FederatedData::generate(fl);
    let target = train_on(fl, &data)?;

    let half = attack.audit_size / 2;
    let pool: Vec<&Sample> = data.training_samples().collect();
    if half > pool.len() {
        return Err(Error::param(
            "audit_size",
            format!(
                "needs {half} members but the target has {} training samples",
                pool.len()
            ),
        ));
    }
    let mut pick = rng::stream(seed, Purpose::AuditSelection, 0, 0);
    let mut member_idx = rand::seq::index::sample(&mut pick, pool.len(), half).into_vec();
    member_idx.sort_unstable();
    let mut audit: Vec<(Sample, bool)> = member_idx.iter().map(|&i| (pool[i].clone(), true)).collect();
    let mut fresh = rng::stream(seed, Purpose::AuditData, 0, 0);
    audit.extend(
        fl.task
            .draw_many(&mut fresh, half, NS_AUDIT, 0)
            .into_iter()
            .map(|s| (s, false)),
    );

    let shadow_n = attack.shadow_samples.unwrap_or(pool.len());
    let steps = fl.rounds * fl.local_steps;
    let models: Vec<ShadowModel> = (0..attack.shadow_models)
        .into_par_iter()
        .map(|m| {
            let mut drng = rng::stream(seed, Purpose::ShadowData, m as u64, 0);
            let shard = fl.task.draw_many(&mut drng, shadow_n, NS_SHADOW, m as u64);
            let mut trng = rng::stream(seed, Purpose::ShadowTraining, m as u64, 0);
            let weights = train_centralized(&shard, fl, steps, &mut trng)?;
            Ok(ShadowModel {
                weights,
                train_ids: shard.iter().map(|s| s.id).collect(),
            })
        })
        .collect::<Result<_>>()?;

    let samples: Vec<Sample> = audit.iter().map(|(s, _)| s.clone()).collect();
    let ensemble = fit_out_distribution(models, &samples, attack.statistic)?;
    let scored: Vec<ScoredSample> = audit
        .iter()
        .map(|(s, member)| {
            let value = attack.statistic.eval(&target.model.weights, s);
            ScoredSample {
                id: s.id,
                member: *member,
                score: score_statistic(value, ensemble.per_sample_stats[&s.id], attack.statistic),
            }
        })
        .collect();
    Ok(AuditOutcome {
        seed,
        target_test_accuracy: target.final_accuracy(),
        report: attack_accuracy(&scored)?,
    })
}

/// Runs [`audit_run`] for `attack.repeats` consecutive seeds.
pub fn audit_repeated(fl: &FlRunConfig, attack: &AttackConfig) -> Result<Vec<AuditOutcome>> {
    (0..attack.repeats as u64)
        .map(|j| {
            let cfg = FlRunConfig {
                seed: fl.seed.wrapping_add(j),
                ..fl.clone()
            };
            audit_run(&cfg, attack)
        })
        .collect()
}

pub fn mean_accuracy(outcomes: &[AuditOutcome]) -> f64 {
    outcomes.iter().map(|o| o.report.accuracy).sum::<f64>() / outcomes.len() as f64
}

#[derive(Serialize)]
struct RunJson<'a> {
    seed: u64,
    accuracy: f64,
    threshold: Option<f64>,
    target_test_accuracy: f64,
    roc_points: &'a [(f64, f64)],
    scores: &'a [ScoredSample],
}

#[derive(Serialize)]
struct ReportJson<'a> {
    tool_version: &'a str,
    config: BTreeMap<&'a str, String>,
    statistic: Statistic,
    shadow_models: usize,
    threshold_rule: &'a str,
    seeds: Vec<u64>,
    accuracy: f64,
    runs: Vec<RunJson<'a>>,
}

/// `report.json` contents: config echo, seeds, mean accuracy and every run.
pub fn report_json(fl: &FlRunConfig, attack: &AttackConfig, outcomes: &[AuditOutcome]) -> Result<String> {
    let config = fl.to_kv().into_iter().chain(attack.to_kv()).collect();
    let report = ReportJson {
        tool_version: env!("CARGO_PKG_VERSION"),
        config,
        statistic: attack.statistic,
        shadow_models: attack.shadow_models,
        threshold_rule: "max balanced accuracy over score thresholds, ties toward the lower threshold",
        seeds: outcomes.iter().map(|o| o.seed).collect(),
        accuracy: mean_accuracy(outcomes),
        runs: outcomes
            .iter()
            .map(|o| RunJson {
                seed: o.seed,
                accuracy: o.report.accuracy,
                threshold: o.report.threshold,
                target_test_accuracy: o.target_test_accuracy,
                roc_points: &o.report.roc_points,
                scores: &o.report.scores,
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&report)? + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn scored(scores: &[(f64, bool)]) -> Vec<ScoredSample> {
        scores
            .iter()
            .enumerate()
            .map(|(i, &(score, member))| ScoredSample {
                id: i as u64,
                member,
                score,
            })
            .collect()
    }

    #[test]
    fn fit_examples() {
        let s = OutStats::fit(&[0.7, 0.7, 0.7]).unwrap();
        assert!((s.mu_out - 0.7).abs() < 1e-15);
        assert_eq!(s.sigma_out, SIGMA_FLOOR);
        let s = OutStats::fit(&[0.0, 2.0]).unwrap();
        assert_eq!((s.mu_out, s.sigma_out), (1.0, 1.0));
        assert!(matches!(OutStats::fit(&[1.0]), Err(Error::TooFewShadows(1))));
    }

    #[test]
    fn score_examples() {
        let st = OutStats {
            mu_out: 0.4,
            sigma_out: 0.2,
        };
        assert_eq!(score(0.4, st), 0.5);
        assert!(score(0.4 - 10.0 * 0.2, st) > 0.9999);
        assert!((score(0.4 + 1.959963985 * 0.2, st) - 0.025).abs() < 1e-6);
        assert!(score(0.3, st) > score(0.31, st));
    }

    #[test]
    fn perfect_and_constant_scores() {
        let perfect = scored(&[(1.0, true), (1.0, true), (0.0, false), (0.0, false)]);
        assert_eq!(attack_accuracy(&perfect).unwrap().accuracy, 1.0);
        let flat = scored(&[(0.3, true), (0.3, false), (0.3, true), (0.3, false)]);
        let r = attack_accuracy(&flat).unwrap();
        assert_eq!(r.accuracy, 0.5);
        // Both "nobody" and "everybody" reach 0.5; the lower threshold wins.
        assert_eq!(r.threshold, Some(0.3));
        assert_eq!(r.roc_points, vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn unbalanced_rejected() {
        let s = scored(&[(0.1, true), (0.2, true), (0.3, false)]);
        assert!(matches!(
            attack_accuracy(&s),
            Err(Error::Unbalanced {
                members: 2,
                non_members: 1
            })
        ));
    }

    #[test]
    fn random_scores_are_near_chance() {
        let mut rng = rng::stream(77, Purpose::Scratch, 0, 0);
        let s: Vec<ScoredSample> = (0..1000)
            .map(|i| ScoredSample {
                id: i,
                member: i % 2 == 0,
                score: rng.random::<f64>(),
            })
            .collect();
        let r = attack_accuracy(&s).unwrap();
        assert!((r.accuracy - 0.5).abs() <= 0.05, "{}", r.accuracy);
        for w in r.roc_points.windows(2) {
            assert!(w[0].0 <= w[1].0 && w[0].1 <= w[1].1);
        }
        assert_eq!(*r.roc_points.last().unwrap(), (1.0, 1.0));
    }

    #[test]
    fn overlap_is_detected() {
        let s = Sample {
            id: 5,
            features: vec![0.0],
            label: 1.0,
        };
        let models = vec![
            ShadowModel {
                weights: vec![0.0, 0.0],
                train_ids: [1, 2].into(),
            },
            ShadowModel {
                weights: vec![0.0, 0.0],
                train_ids: [5].into(),
            },
        ];
        let err = fit_out_distribution(models, &[s], Statistic::Loss).unwrap_err();
        assert!(matches!(err, Error::ShadowOverlap { id: 5, model: 1 }));
    }

    #[test]
    fn attack_config_validation() {
        let mut kv = KvMap::parse("shadow_models = 1\n").unwrap();
        assert!(matches!(AttackConfig::from_kv(&mut kv), Err(Error::TooFewShadows(1))));
        let mut kv = KvMap::parse("audit_size = 7\n").unwrap();
        assert!(AttackConfig::from_kv(&mut kv).is_err());
    }
}

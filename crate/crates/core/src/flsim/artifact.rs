//! On-disk run artifact: `config`, `metrics.csv` and `model.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::train::RunArtifact;
use crate::error::{Error, Result};

#[derive(Serialize)]
struct ModelFile<'a> {
    round: usize,
    optimizer: String,
    weights: &'a [f64],
}

pub fn metrics_csv(artifact: &RunArtifact) -> String {
    let mut out = String::from("round,test_accuracy,test_loss\n");
    for m in &artifact.metrics {
        writeln!(out, "{},{},{}", m.round, m.test_accuracy, m.test_loss).unwrap();
    }
    out
}

pub fn model_json(artifact: &RunArtifact) -> Result<String> {
    let file = ModelFile {
        round: artifact.model.round,
        optimizer: artifact.config.optimizer.to_string(),
        weights: &artifact.model.weights,
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the artifact files into `dir`, creating it if needed.
pub fn write_run(dir: &Path, artifact: &RunArtifact) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("config"), &crate::kv::render(&artifact.config.to_kv()))?;
    write_file(&dir.join("metrics.csv"), &metrics_csv(artifact))?;
    write_file(&dir.join("model.json"), &model_json(artifact)?)?;
    Ok(())
}

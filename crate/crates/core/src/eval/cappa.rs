use serde::{Deserialize, Serialize};

use super::report::{fingerprint, CsvTable};
use super::sampler::PriorSampler;
use super::stats::mean_stderr;
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::nn::{argmax, forward, NetworkSpec};
use crate::priors::PriorSpec;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CappaReport {
    /// Human-readable task, e.g. `mnist 0 vs 1`.
    pub task: String,
    pub prior: String,
    pub prior_spec: PriorSpec,
    pub n_draws: usize,
    pub n_examples: usize,
    pub accuracy: Vec<f64>,
    pub inverted_accuracy: Vec<f64>,
    pub cappa: Vec<f64>,
    pub mean_cappa: f64,
    pub stderr: f64,
    pub fingerprint: String,
}

/// `(accuracy, inverted accuracy, max of the two)` for binary predictions.
pub fn cappa_of_predictions(predicted: &[usize], labels: &[usize]) -> (f64, f64, f64) {
    let hits = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
    let a = hits as f64 / labels.len() as f64;
    let inv = (labels.len() - hits) as f64 / labels.len() as f64;
    (a, inv, a.max(inv))
}

#[derive(Serialize)]
struct Provenance<'a> {
    experiment: &'a str,
    task: &'a str,
    spec: &'a NetworkSpec,
    prior: &'a PriorSpec,
    seed: u64,
    stream: &'a str,
    n_draws: usize,
    n_examples: usize,
}

/// Class-agnostic prior predictive accuracy over `n_draws` draws on a
/// balanced two-class dataset.
pub fn cappa(
    rng: &SeededRng,
    sampler: &PriorSampler,
    dataset: &Dataset,
    task: &str,
    n_draws: usize,
) -> Result<CappaReport> {
    let spec = sampler.spec;
    if dataset.n_classes != 2 || spec.n_outputs != 2 {
        return Err(Error::InvalidTask(format!(
            "CAPPA needs 2 classes and 2 outputs, got {} and {}",
            dataset.n_classes, spec.n_outputs
        )));
    }
    let ones = dataset.labels.iter().filter(|&&l| l == 1).count();
    if 2 * ones != dataset.len() {
        return Err(Error::InvalidTask(format!(
            "task is unbalanced: {ones} of {} examples in class 1",
            dataset.len()
        )));
    }
    if n_draws == 0 {
        return Err(Error::InvalidArgument("n_draws must be at least 1".into()));
    }
    let per_draw = super::per_draw(rng, n_draws, |_, draw_rng| {
        let params = sampler.draw(&draw_rng)?;
        let logits = forward(spec, &params, &dataset.images)?;
        let predicted: Vec<usize> = (0..dataset.len()).map(|i| argmax(logits.row(i))).collect();
        Ok(cappa_of_predictions(&predicted, &dataset.labels))
    })?;
    let values: Vec<f64> = per_draw.iter().map(|d| d.2).collect();
    let summary = mean_stderr(&values);
    Ok(CappaReport {
        task: task.to_string(),
        prior: sampler.prior.label(),
        prior_spec: sampler.prior,
        n_draws,
        n_examples: dataset.len(),
        accuracy: per_draw.iter().map(|d| d.0).collect(),
        inverted_accuracy: per_draw.iter().map(|d| d.1).collect(),
        cappa: values,
        mean_cappa: summary.mean,
        stderr: summary.stderr,
        fingerprint: fingerprint(&Provenance {
            experiment: "cappa",
            task,
            spec,
            prior: &sampler.prior,
            seed: rng.seed(),
            stream: rng.label(),
            n_draws,
            n_examples: dataset.len(),
        })?,
    })
}

impl CsvTable for CappaReport {
    fn header(&self) -> Vec<String> {
        ["draw", "task", "prior", "accuracy", "inverted_accuracy", "cappa"]
            .map(String::from)
            .to_vec()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        (0..self.n_draws)
            .map(|i| {
                vec![
                    i.to_string(),
                    self.task.clone(),
                    self.prior.clone(),
                    self.accuracy[i].to_string(),
                    self.inverted_accuracy[i].to_string(),
                    self.cappa[i].to_string(),
                ]
            })
            .collect()
    }
}

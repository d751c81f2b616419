use serde::{Deserialize, Serialize};

use super::report::{fingerprint, CsvTable};
use super::sampler::PriorSampler;
use super::stats::mean_stderr;
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::nn::{argmax, forward, NetworkSpec, ParameterSet};
use crate::priors::PriorSpec;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub prior: String,
    pub prior_spec: PriorSpec,
    pub n_draws: usize,
    pub n_examples: usize,
    pub n_classes: usize,
    /// Argmax class counts, one histogram per draw.
    pub histograms: Vec<Vec<usize>>,
    /// Entropy of each histogram in nats.
    pub entropies: Vec<f64>,
    pub mean_entropy: f64,
    pub stderr: f64,
    /// Examples whose top logit was shared by several classes, over all draws.
    pub argmax_ties: usize,
    pub fingerprint: String,
}

/// `-sum p ln p` of the normalised counts, with `0 ln 0 = 0`.
pub fn histogram_entropy(counts: &[usize]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let n = total as f64;
    let h = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

/// Argmax histogram of one parameter draw over `images`, plus the number of
/// exact ties (resolved to the lowest class).
pub fn prediction_histogram(
    spec: &NetworkSpec,
    params: &ParameterSet,
    dataset: &Dataset,
) -> Result<(Vec<usize>, usize)> {
    let logits = forward(spec, params, &dataset.images)?;
    let mut counts = vec![0; spec.n_outputs];
    let mut ties = 0;
    for i in 0..dataset.len() {
        let row = logits.row(i);
        let k = argmax(row);
        counts[k] += 1;
        if row.iter().filter(|&&v| v == row[k]).count() > 1 {
            ties += 1;
        }
    }
    Ok((counts, ties))
}

#[derive(Serialize)]
struct Provenance<'a> {
    experiment: &'a str,
    spec: &'a NetworkSpec,
    prior: &'a PriorSpec,
    seed: u64,
    stream: &'a str,
    n_draws: usize,
    n_examples: usize,
    split: &'a str,
}

/// Mean entropy of the argmax-prediction histogram over `n_draws` prior draws.
pub fn prior_predictive_entropy(
    rng: &SeededRng,
    sampler: &PriorSampler,
    dataset: &Dataset,
    n_draws: usize,
) -> Result<EntropyReport> {
    if n_draws == 0 {
        return Err(Error::InvalidArgument("n_draws must be at least 1".into()));
    }
    let spec = sampler.spec;
    let per_draw = super::per_draw(rng, n_draws, |_, draw_rng| {
        let params = sampler.draw(&draw_rng)?;
        let (counts, ties) = prediction_histogram(spec, &params, dataset)?;
        Ok((histogram_entropy(&counts)?, counts, ties))
    })?;

    let entropies: Vec<f64> = per_draw.iter().map(|d| d.0).collect();
    let summary = mean_stderr(&entropies);
    let fingerprint = fingerprint(&Provenance {
        experiment: "entropy",
        spec,
        prior: &sampler.prior,
        seed: rng.seed(),
        stream: rng.label(),
        n_draws,
        n_examples: dataset.len(),
        split: &dataset.split,
    })?;
    Ok(EntropyReport {
        prior: sampler.prior.label(),
        prior_spec: sampler.prior,
        n_draws,
        n_examples: dataset.len(),
        n_classes: spec.n_outputs,
        argmax_ties: per_draw.iter().map(|d| d.2).sum(),
        histograms: per_draw.into_iter().map(|d| d.1).collect(),
        entropies,
        mean_entropy: summary.mean,
        stderr: summary.stderr,
        fingerprint,
    })
}

impl CsvTable for EntropyReport {
    fn header(&self) -> Vec<String> {
        let mut h = vec!["draw".to_string(), "prior".into(), "entropy".into()];
        h.extend((0..self.n_classes).map(|c| format!("count_{c}")));
        h
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.entropies
            .iter()
            .zip(&self.histograms)
            .enumerate()
            .map(|(i, (h, counts))| {
                let mut row = vec![i.to_string(), self.prior.clone(), h.to_string()];
                row.extend(counts.iter().map(|c| c.to_string()));
                row
            })
            .collect()
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::report::{fingerprint, CsvTable};
use super::sampler::PriorSampler;
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::nn::forward;
use crate::priors::PriorSpec;
use crate::rng::SeededRng;

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "pearson needs two equal-length sequences of at least 2 values, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantSequence);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Fixed input pairs, as dataset indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSet {
    pub same: Vec<(usize, usize)>,
    pub different: Vec<(usize, usize)>,
}

/// `n_pairs` same-class and `n_pairs` different-class pairs. The first member
/// is uniform over the dataset; the second is uniform over the other members
/// of its class, or over all examples of other classes.
pub fn sample_pairs(rng: &mut SeededRng, dataset: &Dataset, n_pairs: usize) -> Result<PairSet> {
    let by_class = dataset.class_indices();
    let n = dataset.len();
    if by_class.iter().filter(|c| !c.is_empty()).count() < 2 {
        return Err(Error::InvalidTask("pairs need at least two populated classes".into()));
    }
    if by_class.iter().all(|c| c.len() < 2) {
        return Err(Error::InvalidTask("no class has two examples".into()));
    }
    let mut same_rng = rng.child("same");
    let mut same = Vec::with_capacity(n_pairs);
    while same.len() < n_pairs {
        let a = same_rng.below(n);
        let members = &by_class[dataset.labels[a]];
        if members.len() < 2 {
            continue;
        }
        let mut b = members[same_rng.below(members.len() - 1)];
        if b == a {
            b = *members.last().expect("class has at least two members");
        }
        same.push((a, b));
    }
    let outside: Vec<Vec<usize>> = (0..dataset.n_classes)
        .map(|c| (0..n).filter(|&i| dataset.labels[i] != c).collect())
        .collect();
    let mut diff_rng = rng.child("different");
    let mut different = Vec::with_capacity(n_pairs);
    while different.len() < n_pairs {
        let a = diff_rng.below(n);
        let others = &outside[dataset.labels[a]];
        different.push((a, others[diff_rng.below(others.len())]));
    }
    Ok(PairSet { same, different })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub prior: String,
    pub prior_spec: PriorSpec,
    pub n_draws: usize,
    /// Pairs of each type.
    pub n_pairs: usize,
    /// Logit whose values are correlated.
    pub output_index: usize,
    pub mean_same: f64,
    pub mean_different: f64,
    /// Pairs dropped because one input's logit never changed across draws.
    pub excluded_same: usize,
    pub excluded_different: usize,
    /// Per-pair correlations in pair order, `None` for excluded pairs.
    pub same_samples: Option<Vec<Option<f64>>>,
    pub different_samples: Option<Vec<Option<f64>>>,
    pub fingerprint: String,
}

impl CorrelationReport {
    pub fn gap(&self) -> f64 {
        self.mean_same - self.mean_different
    }
}

#[derive(Serialize)]
struct Provenance<'a> {
    experiment: &'a str,
    spec: &'a crate::nn::NetworkSpec,
    prior: &'a PriorSpec,
    seed: u64,
    stream: &'a str,
    n_draws: usize,
    output_index: usize,
    pairs: &'a PairSet,
}

/// Correlation of one logit between the two inputs of each pair, taken across
/// `n_draws` prior draws, averaged per pair type.
pub fn activation_correlations(
    rng: &SeededRng,
    sampler: &PriorSampler,
    dataset: &Dataset,
    pairs: &PairSet,
    n_draws: usize,
    output_index: usize,
    retain_samples: bool,
) -> Result<CorrelationReport> {
    if n_draws < 2 {
        return Err(Error::InvalidArgument("correlations need at least 2 draws".into()));
    }
    let spec = sampler.spec;
    if output_index >= spec.n_outputs {
        return Err(Error::InvalidArgument(format!(
            "output {output_index} out of range for {} outputs",
            spec.n_outputs
        )));
    }
    let mut position = BTreeMap::new();
    for &(a, b) in pairs.same.iter().chain(&pairs.different) {
        for i in [a, b] {
            if i >= dataset.len() {
                return Err(Error::InvalidArgument(format!("pair index {i} out of range")));
            }
            position.insert(i, 0);
        }
    }
    let indices: Vec<usize> = position.keys().copied().collect();
    for (pos, i) in indices.iter().enumerate() {
        position.insert(*i, pos);
    }
    let inputs = dataset.images.select_rows(&indices);

    // logits[draw][position]
    let logits = super::per_draw(rng, n_draws, |_, draw_rng| {
        let params = sampler.draw(&draw_rng)?;
        let out = forward(spec, &params, &inputs)?;
        Ok((0..indices.len())
            .map(|p| out.row(p)[output_index])
            .collect::<Vec<f64>>())
    })?;
    let column = |i: usize| -> Vec<f64> { logits.iter().map(|d| d[position[&i]]).collect() };

    let correlate = |set: &[(usize, usize)]| -> Result<Vec<Option<f64>>> {
        set.iter()
            .map(|&(a, b)| match pearson(&column(a), &column(b)) {
                Ok(r) => Ok(Some(r)),
                Err(Error::ConstantSequence) => Ok(None),
                Err(e) => Err(e),
            })
            .collect()
    };
    let same = correlate(&pairs.same)?;
    let different = correlate(&pairs.different)?;
    let mean = |xs: &[Option<f64>]| {
        let kept: Vec<f64> = xs.iter().flatten().copied().collect();
        kept.iter().sum::<f64>() / kept.len() as f64
    };

    Ok(CorrelationReport {
        prior: sampler.prior.label(),
        prior_spec: sampler.prior,
        n_draws,
        n_pairs: pairs.same.len(),
        output_index,
        mean_same: mean(&same),
        mean_different: mean(&different),
        excluded_same: same.iter().filter(|r| r.is_none()).count(),
        excluded_different: different.iter().filter(|r| r.is_none()).count(),
        fingerprint: fingerprint(&Provenance {
            experiment: "correlation",
            spec,
            prior: &sampler.prior,
            seed: rng.seed(),
            stream: rng.label(),
            n_draws,
            output_index,
            pairs,
        })?,
        same_samples: retain_samples.then_some(same),
        different_samples: retain_samples.then_some(different),
    })
}

impl CsvTable for CorrelationReport {
    fn header(&self) -> Vec<String> {
        ["prior", "pair_type", "pair", "correlation"].map(String::from).to_vec()
    }

    /// One row per retained pair, or one summary row per pair type.
    fn rows(&self) -> Vec<Vec<String>> {
        let fmt = |r: &Option<f64>| r.map_or_else(String::new, |v| v.to_string());
        match (&self.same_samples, &self.different_samples) {
            (Some(s), Some(d)) => [("same", s), ("different", d)]
                .into_iter()
                .flat_map(|(kind, xs)| {
                    xs.iter()
                        .enumerate()
                        .map(move |(i, r)| vec![self.prior.clone(), kind.to_string(), i.to_string(), fmt(r)])
                })
                .collect(),
            _ => vec![
                vec![
                    self.prior.clone(),
                    "same".into(),
                    "mean".into(),
                    self.mean_same.to_string(),
                ],
                vec![
                    self.prior.clone(),
                    "different".into(),
                    "mean".into(),
                    self.mean_different.to_string(),
                ],
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    #[test]
    fn hand_values() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(pearson(&x, &x).unwrap(), 1.0);
        assert_eq!(pearson(&x, &[-1.0, -2.0, -3.0]).unwrap(), -1.0);
        assert!((pearson(&x, &[2.0, 2.0, 4.0]).unwrap() - 0.866025).abs() < 1e-6);
        assert!(matches!(pearson(&x, &[4.0; 3]), Err(Error::ConstantSequence)));
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn pairs_respect_class_relation() {
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let ds = Dataset::new(Tensor::zeros(&[30, 1, 1, 1]), labels, 3, "train").unwrap();
        let p = sample_pairs(&mut SeededRng::root(4), &ds, 200).unwrap();
        assert_eq!(p.same.len(), 200);
        for &(a, b) in &p.same {
            assert_ne!(a, b);
            assert_eq!(ds.labels[a], ds.labels[b]);
        }
        for &(a, b) in &p.different {
            assert_ne!(ds.labels[a], ds.labels[b]);
        }
    }
}

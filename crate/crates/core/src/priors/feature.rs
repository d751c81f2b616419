//! Final-layer prior conditioned on the already-sampled earlier layers.
//!
//! For each hidden node feeding the final layer, the mean activation over a
//! handful of exemplars of every class is recorded and centred across
//! classes. The weight from that node to output `j` is then Gaussian around
//! its relative activation for class `j`.

use crate::datasets::ClassExemplars;
use crate::error::{Error, Result};
use crate::nn::{forward_features, FeatureShape, NetworkSpec, ParameterSet};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

/// Centred per-class mean activations, shape (hidden, n_classes).
///
/// Only parameters of layers before the final dense layer are read.
pub fn feature_prior_means(spec: &NetworkSpec, params: &ParameterSet, exemplars: &ClassExemplars) -> Result<Tensor> {
    let final_idx = spec.final_layer_index();
    let n_classes = exemplars.n_classes();
    if n_classes != spec.n_outputs {
        return Err(Error::shape(
            final_idx,
            format!("{n_classes} exemplar classes for {} outputs", spec.n_outputs),
        ));
    }
    let hidden = match final_idx.checked_sub(1) {
        Some(i) => crate::nn::infer_shapes(spec)?[i],
        None => FeatureShape::Flat(spec.input_len()),
    }
    .len();

    let mut means = vec![0.0; hidden * n_classes];
    for (j, images) in exemplars.per_class.iter().enumerate() {
        let n = images.shape()[0];
        if n == 0 {
            return Err(Error::MissingExemplars);
        }
        let feats = forward_features(spec, params, images, final_idx)?;
        let mut sums = vec![0.0; hidden];
        for e in 0..n {
            for (s, v) in sums.iter_mut().zip(feats.row(e)) {
                *s += v;
            }
        }
        for (k, s) in sums.into_iter().enumerate() {
            means[k * n_classes + j] = s / n as f64;
        }
    }
    for row in means.chunks_exact_mut(n_classes) {
        let centre = row.iter().sum::<f64>() / n_classes as f64;
        for v in row.iter_mut() {
            *v -= centre;
        }
    }
    Tensor::new(vec![hidden, n_classes], means)
}

/// Independent N(means[k][j], weight_std²) draws, shape (hidden, n_classes).
pub fn sample_final_layer(rng: &mut SeededRng, means: &Tensor, weight_std: f64) -> Result<Tensor> {
    if !(weight_std > 0.0) {
        return Err(Error::InvalidPrior(format!("weight_std {weight_std} must be positive")));
    }
    let data = means
        .data()
        .iter()
        .map(|&m| m + weight_std * rng.standard_normal())
        .collect();
    Tensor::new(means.shape().to_vec(), data)
}

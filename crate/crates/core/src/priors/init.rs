use serde::{Deserialize, Serialize};

use super::feature::{feature_prior_means, sample_final_layer};
use super::gabor::{add_filter_noise, colorize, eval_gabor, sample_gabor_params, ColorMode, Coordinates, GaborParams};
use super::iid::{sample_iid_layer, standardize_layer};
use super::{LayerPrior, PriorSpec};
use crate::datasets::ClassExemplars;
use crate::error::{Error, Result};
use crate::nn::{NetworkSpec, ParamLayerInfo, ParameterSet};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

/// What was drawn for a Gabor-initialised layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaborLayerLog {
    pub layer_index: usize,
    pub coords: Coordinates,
    /// One draw per output filter.
    pub filters: Vec<GaborParams>,
    /// Filters before moment matching, shape (out, in, fw, fw).
    pub raw: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitOutput {
    pub params: ParameterSet,
    pub gabor: Option<GaborLayerLog>,
    /// Centred class activations used for the final layer, if any.
    pub feature_means: Option<Tensor>,
}

/// Sample a full parameter set. Biases are zero.
pub fn init_network(
    rng: &SeededRng,
    spec: &NetworkSpec,
    prior: &PriorSpec,
    exemplars: Option<&ClassExemplars>,
) -> Result<ParameterSet> {
    init_network_logged(rng, spec, prior, exemplars).map(|o| o.params)
}

/// [`init_network`] that also returns the intermediate draws.
///
/// Layer `i` draws from the child stream `layer{i}` of `rng`, so the weights
/// of one layer never depend on how many numbers another layer consumed.
pub fn init_network_logged(
    rng: &SeededRng,
    spec: &NetworkSpec,
    prior: &PriorSpec,
    exemplars: Option<&ClassExemplars>,
) -> Result<InitOutput> {
    prior.validate(spec)?;
    if prior.uses_features() && exemplars.is_none() {
        return Err(Error::MissingExemplars);
    }
    let infos = spec.param_layers()?;
    let mut params = ParameterSet::zeros(spec)?;
    let mut gabor = None;
    let mut feature_means = None;
    let last = infos.len() - 1;

    for (slot, info) in infos.iter().enumerate() {
        let layer_rng = rng.child_indexed("layer", info.layer_index);
        let assigned = match slot {
            0 => prior.first_layer,
            s if s == last => prior.final_layer,
            _ => LayerPrior::Iid,
        };
        let weights = match assigned {
            LayerPrior::Iid => sample_iid_layer(&mut layer_rng.child("iid"), info.weight_dims(), info.n_in)?,
            LayerPrior::Gabor { sigma_g, color, coords } => {
                let log = gabor_layer(&layer_rng, info, sigma_g, color, coords);
                let w = standardize_layer(&log.raw, info.n_in)?;
                gabor = Some(log);
                w
            }
            LayerPrior::FeatureSpecific { weight_std, .. } => {
                let ex = exemplars.ok_or(Error::MissingExemplars)?;
                let means = feature_prior_means(spec, &params, ex)?;
                let w = sample_final_layer(&mut layer_rng.child("feature"), &means, weight_std)?;
                feature_means = Some(means);
                w
            }
        };
        params.layers[slot].weights = weights;
    }
    Ok(InitOutput {
        params,
        gabor,
        feature_means,
    })
}

fn gabor_layer(
    layer_rng: &SeededRng,
    info: &ParamLayerInfo,
    sigma_g: f64,
    color: ColorMode,
    coords: Coordinates,
) -> GaborLayerLog {
    let [out, in_c, fw, _] = info.weight_shape;
    let mut filters = Vec::with_capacity(out);
    let mut raw = Vec::with_capacity(out * in_c * fw * fw);
    for o in 0..out {
        let p = sample_gabor_params(&mut layer_rng.child_indexed("gabor/filter", o), fw, color);
        let mono = eval_gabor(&p, fw, coords);
        let filter = match color {
            ColorMode::Grayscale => mono,
            ColorMode::Rgb => colorize(&p, &mono),
        };
        let filter = add_filter_noise(&mut layer_rng.child_indexed("gabor/noise", o), filter, sigma_g);
        raw.extend_from_slice(filter.data());
        filters.push(p);
    }
    GaborLayerLog {
        layer_index: info.layer_index,
        coords,
        filters,
        raw: Tensor::new(info.weight_dims().to_vec(), raw).expect("one filter per output channel"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::iid_variance;

    #[test]
    fn all_iid_layers_have_fan_in_variance() {
        let spec = NetworkSpec::cnn([28, 28, 1], &[16, 32], 10).unwrap();
        let p = init_network(&SeededRng::root(3), &spec, &PriorSpec::iid(), None).unwrap();
        for (lp, info) in p.layers.iter().zip(spec.param_layers().unwrap()) {
            let var = lp.weights.data().iter().map(|w| w * w).sum::<f64>() / lp.weights.len() as f64;
            let target = iid_variance(info.n_in);
            // 400+ samples per layer; generous relative band
            assert!(
                (var / target - 1.0).abs() < 0.2,
                "layer {}: {var} vs {target}",
                info.layer_index
            );
            assert!(lp.biases.data().iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn gabor_layer_is_moment_matched() {
        let spec = NetworkSpec::cnn([28, 28, 1], &[16], 10).unwrap();
        let out = init_network_logged(
            &SeededRng::root(9),
            &spec,
            &PriorSpec::gabor(ColorMode::Grayscale, 0.0),
            None,
        )
        .unwrap();
        let w = &out.params.layers[0].weights;
        assert!(w.mean().abs() < 1e-12);
        assert!((w.variance() - 2.0 / 25.0).abs() < 1e-12);
        let log = out.gabor.unwrap();
        assert_eq!(log.filters.len(), 16);
        for (o, p) in log.filters.iter().enumerate() {
            let f = eval_gabor(p, 5, log.coords);
            assert_eq!(&log.raw.data()[o * 25..(o + 1) * 25], f.data());
        }
    }

    #[test]
    fn rgb_gabor_channels_are_scaled_copies() {
        let spec = NetworkSpec::cnn([32, 32, 3], &[8], 10).unwrap();
        let prior = PriorSpec::gabor(ColorMode::Rgb, 0.0);
        let out = init_network_logged(&SeededRng::root(2), &spec, &prior, None).unwrap();
        let log = out.gabor.unwrap();
        for (o, p) in log.filters.iter().enumerate() {
            let mono = eval_gabor(p, 5, log.coords);
            for c in 0..3 {
                let ch = &log.raw.data()[(o * 3 + c) * 25..][..25];
                for (a, m) in ch.iter().zip(mono.data()) {
                    assert_eq!(*a, p.betas[c] * m);
                }
            }
        }
    }

    #[test]
    fn feature_prior_needs_exemplars() {
        let spec = NetworkSpec::cnn([8, 8, 1], &[2], 3).unwrap();
        assert!(matches!(
            init_network(&SeededRng::root(1), &spec, &PriorSpec::features(), None),
            Err(Error::MissingExemplars)
        ));
    }

    #[test]
    fn same_seed_same_parameters() {
        let spec = NetworkSpec::cnn([12, 12, 1], &[4, 8], 10).unwrap();
        let prior = PriorSpec::gabor(ColorMode::Grayscale, 0.3);
        let a = init_network(&SeededRng::root(77), &spec, &prior, None).unwrap();
        let b = init_network(&SeededRng::root(77), &spec, &prior, None).unwrap();
        assert_eq!(a, b);
        let c = init_network(&SeededRng::root(78), &spec, &prior, None).unwrap();
        assert_ne!(a, c);
    }
}

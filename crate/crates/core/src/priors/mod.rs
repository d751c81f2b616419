//! Weight priors and network initialisation.

mod export;
mod feature;
mod gabor;
mod iid;
mod init;

use serde::{Deserialize, Serialize};

pub use export::{write_filter_bank, write_params_log};
pub use feature::{feature_prior_means, sample_final_layer};
pub use gabor::{
    add_filter_noise, colorize, eval_gabor, sample_gabor_params, ColorMode, Coordinates, GaborParams, BW_PROBABILITY,
};
pub use iid::{iid_variance, sample_iid_layer, standardize_layer};
pub use init::{init_network, init_network_logged, GaborLayerLog, InitOutput};

use crate::error::{Error, Result};
use crate::nn::{LayerSpec, NetworkSpec};

/// Default exemplars drawn per class for the feature-specific prior.
pub const DEFAULT_EXEMPLARS_PER_CLASS: usize = 20;

/// Final-layer weight spread when the prior's `0.1 I` is read as a covariance.
pub fn default_feature_weight_std() -> f64 {
    0.1f64.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerPrior {
    /// N(0, 2 / n_in) per weight.
    Iid,
    /// Gabor filters plus N(0, sigma_g²) noise, then moment-matched to `Iid`.
    Gabor {
        sigma_g: f64,
        color: ColorMode,
        #[serde(default)]
        coords: Coordinates,
    },
    /// Gaussian around centred class-conditional activations.
    FeatureSpecific {
        exemplars_per_class: usize,
        weight_std: f64,
    },
}

/// Which prior initialises the first conv layer and the final dense layer.
/// Every other layer is i.i.d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub first_layer: LayerPrior,
    pub final_layer: LayerPrior,
}

impl PriorSpec {
    pub fn iid() -> Self {
        Self {
            first_layer: LayerPrior::Iid,
            final_layer: LayerPrior::Iid,
        }
    }

    pub fn gabor(color: ColorMode, sigma_g: f64) -> Self {
        Self {
            first_layer: LayerPrior::Gabor {
                sigma_g,
                color,
                coords: Coordinates::Centered,
            },
            final_layer: LayerPrior::Iid,
        }
    }

    pub fn features() -> Self {
        Self {
            first_layer: LayerPrior::Iid,
            final_layer: LayerPrior::FeatureSpecific {
                exemplars_per_class: DEFAULT_EXEMPLARS_PER_CLASS,
                weight_std: default_feature_weight_std(),
            },
        }
    }

    pub fn gabor_features(color: ColorMode, sigma_g: f64) -> Self {
        Self {
            final_layer: Self::features().final_layer,
            ..Self::gabor(color, sigma_g)
        }
    }

    /// Short tag such as `iid`, `gabor`, `feats` or `gabor+feats`.
    pub fn label(&self) -> String {
        match (self.is_gabor(), self.uses_features()) {
            (false, false) => "iid".into(),
            (true, false) => "gabor".into(),
            (false, true) => "feats".into(),
            (true, true) => "gabor+feats".into(),
        }
    }

    pub fn is_gabor(&self) -> bool {
        matches!(self.first_layer, LayerPrior::Gabor { .. })
    }

    pub fn uses_features(&self) -> bool {
        matches!(self.final_layer, LayerPrior::FeatureSpecific { .. })
    }

    pub fn exemplars_per_class(&self) -> Option<usize> {
        match self.final_layer {
            LayerPrior::FeatureSpecific {
                exemplars_per_class, ..
            } => Some(exemplars_per_class),
            _ => None,
        }
    }

    /// Check the assignment against a network.
    pub fn validate(&self, spec: &NetworkSpec) -> Result<()> {
        match self.first_layer {
            LayerPrior::Iid => {}
            LayerPrior::Gabor { sigma_g, color, .. } => {
                if !(sigma_g >= 0.0) || !sigma_g.is_finite() {
                    return Err(Error::InvalidPrior(format!(
                        "sigma_g {sigma_g} must be finite and >= 0"
                    )));
                }
                let first = spec.param_layers()?.into_iter().next();
                match first.map(|i| spec.layers[i.layer_index]) {
                    Some(LayerSpec::Conv2d { .. }) => {}
                    _ => {
                        return Err(Error::InvalidPrior(
                            "the Gabor prior needs a conv layer as the first parametric layer".into(),
                        ))
                    }
                }
                let c = spec.input_shape[2];
                if color.channels() != c {
                    return Err(Error::InvalidPrior(format!(
                        "{color:?} Gabor filters need {} input channels, network has {c}",
                        color.channels()
                    )));
                }
            }
            LayerPrior::FeatureSpecific { .. } => {
                return Err(Error::InvalidPrior(
                    "the feature-specific prior applies only to the final layer".into(),
                ))
            }
        }
        match self.final_layer {
            LayerPrior::Iid => Ok(()),
            LayerPrior::Gabor { .. } => Err(Error::InvalidPrior(
                "the Gabor prior applies only to the first conv layer".into(),
            )),
            LayerPrior::FeatureSpecific {
                exemplars_per_class,
                weight_std,
            } => {
                if exemplars_per_class == 0 {
                    return Err(Error::InvalidPrior("exemplars_per_class must be positive".into()));
                }
                if !(weight_std > 0.0) || !weight_std.is_finite() {
                    return Err(Error::InvalidPrior(format!("weight_std {weight_std} must be positive")));
                }
                if spec.param_layers()?.len() < 2 {
                    return Err(Error::InvalidPrior(
                        "the feature-specific prior needs at least one layer before the final layer".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

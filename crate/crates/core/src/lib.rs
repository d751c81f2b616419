//! Structured weight priors for convolutional networks.
//!
//! The crate is split into four layers:
//!
//! * [`nn`]: a small deterministic f64 tensor engine (conv / pool / dense
//!   forward pass, reverse-mode gradients, Adam, finite-difference oracle).
//! * [`priors`]: i.i.d. fan-in Gaussian, probabilistic Gabor first-layer and
//!   feature-specific final-layer weight samplers.
//! * [`datasets`]: IDX and CIFAR-10 binary parsers plus stratified sampling.
//! * [`eval`]: prior-predictive entropy, activation correlations, CAPPA and
//!   training curves.

pub mod datasets;
pub mod error;
pub mod eval;
pub mod nn;
pub mod priors;
pub mod rng;
pub mod tensor;

pub use datasets::{ClassExemplars, Dataset};
pub use error::{Error, Result};
pub use nn::{AdamConfig, AdamState, LayerSpec, NetworkSpec, Padding, ParameterSet};
pub use priors::{GaborParams, LayerPrior, PriorSpec};
pub use rng::SeededRng;
pub use tensor::Tensor;

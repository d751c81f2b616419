use serde::{Deserialize, Serialize};

use super::spec::NetworkSpec;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    /// Index of the owning layer in `NetworkSpec::layers`.
    pub layer_index: usize,
    /// Conv: (out, in, fw, fw). Dense: (in, out).
    pub weights: Tensor,
    pub biases: Tensor,
}

/// Weights and biases of every parametric layer, in network order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub layers: Vec<LayerParams>,
}

impl ParameterSet {
    pub fn zeros(spec: &NetworkSpec) -> Result<Self> {
        let layers = spec
            .param_layers()?
            .into_iter()
            .map(|info| LayerParams {
                layer_index: info.layer_index,
                weights: Tensor::zeros(info.weight_dims()),
                biases: Tensor::zeros(&[info.n_biases]),
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    layer_index: l.layer_index,
                    weights: Tensor::zeros(l.weights.shape()),
                    biases: Tensor::zeros(l.biases.shape()),
                })
                .collect(),
        }
    }

    /// Check that every tensor has exactly the shape the spec requires.
    pub fn check_against(&self, spec: &NetworkSpec) -> Result<()> {
        let infos = spec.param_layers()?;
        if infos.len() != self.layers.len() {
            return Err(Error::shape(
                0,
                format!(
                    "spec has {} parametric layers, parameter set has {}",
                    infos.len(),
                    self.layers.len()
                ),
            ));
        }
        for (info, p) in infos.iter().zip(&self.layers) {
            if p.layer_index != info.layer_index
                || p.weights.shape() != info.weight_dims()
                || p.biases.shape() != [info.n_biases]
            {
                return Err(Error::shape(
                    info.layer_index,
                    format!(
                        "expected weights {:?} / biases [{}], got {:?} / {:?}",
                        info.weight_dims(),
                        info.n_biases,
                        p.weights.shape(),
                        p.biases.shape()
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Parameters of the layer at `layer_index` in the spec.
    pub fn for_layer(&self, layer_index: usize) -> Option<&LayerParams> {
        self.layers.iter().find(|l| l.layer_index == layer_index)
    }

    pub fn for_layer_mut(&mut self, layer_index: usize) -> Option<&mut LayerParams> {
        self.layers.iter_mut().find(|l| l.layer_index == layer_index)
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// All tensors in a fixed order: w0, b0, w1, b1, ...
    pub fn tensors(&self) -> impl Iterator<Item = &Tensor> {
        self.layers.iter().flat_map(|l| [&l.weights, &l.biases])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weights, &mut l.biases])
    }

    /// Scalar at flat index `i` in `tensors()` order.
    pub fn get(&self, i: usize) -> f64 {
        let (t, j) = self.locate(i);
        self.tensors().nth(t).expect("index in range").data()[j]
    }

    pub fn set(&mut self, i: usize, value: f64) {
        let (t, j) = self.locate(i);
        self.tensors_mut().nth(t).expect("index in range").data_mut()[j] = value;
    }

    fn locate(&self, mut i: usize) -> (usize, usize) {
        for (t, tensor) in self.tensors().enumerate() {
            if i < tensor.len() {
                return (t, i);
            }
            i -= tensor.len();
        }
        panic!("parameter index out of range");
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().flat_map(|t| t.data().iter().copied()).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().all(|t| t.all_finite())
    }
}

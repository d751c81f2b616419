//! Deterministic f64 CNN engine: forward pass, reverse-mode gradients, Adam
//! and a finite-difference gradient oracle.

mod adam;
mod gemm;
mod net;
mod params;
mod spec;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use net::{central_difference, forward, forward_features, loss, loss_and_grad, numeric_grad, softmax, Network};
pub use params::{LayerParams, ParameterSet};
pub use spec::{infer_shapes, FeatureShape, LayerSpec, NetworkSpec, Padding, ParamLayerInfo};

/// Index of the largest value; the lowest index wins exact ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

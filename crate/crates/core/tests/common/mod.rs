#![allow(dead_code)]

use structprior::nn::{LayerSpec, NetworkSpec, Padding, ParameterSet};
use structprior::{SeededRng, Tensor};

/// Small networks that together exercise every layer kind and both paddings.
pub fn toy_spec(variant: usize) -> NetworkSpec {
    match variant % 3 {
        0 => NetworkSpec::new(
            [6, 6, 1],
            vec![
                LayerSpec::conv(2, 3, Padding::Valid),
                LayerSpec::Relu,
                LayerSpec::MaxPool2x2,
                LayerSpec::conv(2, 3, Padding::Same),
                LayerSpec::Relu,
                LayerSpec::Flatten,
                LayerSpec::dense(4),
                LayerSpec::Relu,
                LayerSpec::dense(3),
            ],
            3,
        ),
        1 => NetworkSpec::new(
            [4, 4, 2],
            vec![
                LayerSpec::conv(3, 1, Padding::Valid),
                LayerSpec::MaxPool2x2,
                LayerSpec::Flatten,
                LayerSpec::dense(3),
            ],
            3,
        ),
        _ => NetworkSpec::new(
            [5, 5, 1],
            vec![
                LayerSpec::conv(2, 5, Padding::Same),
                LayerSpec::Relu,
                LayerSpec::MaxPool2x2,
                LayerSpec::Flatten,
                LayerSpec::dense(3),
            ],
            3,
        ),
    }
    .expect("toy spec is valid")
}

/// Random parameters, a random batch and random labels for a toy network.
pub fn toy_problem(seed: u64, batch: usize) -> (NetworkSpec, ParameterSet, Tensor, Vec<usize>) {
    let spec = toy_spec(seed as usize);
    let mut rng = SeededRng::new(seed, "toy");
    let mut params = ParameterSet::zeros(&spec).unwrap();
    for i in 0..params.n_params() {
        params.set(i, 0.5 * rng.standard_normal());
    }
    let n = batch * spec.input_len();
    let mut shape = vec![batch];
    shape.extend_from_slice(&spec.input_shape);
    let x = Tensor::new(shape, (0..n).map(|_| rng.uniform(0.0, 1.0)).collect()).unwrap();
    let labels = (0..batch).map(|_| rng.below(spec.n_outputs)).collect();
    (spec, params, x, labels)
}

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor).
pub fn max_relative_error(analytic: &ParameterSet, numeric: &ParameterSet, floor: f64) -> (f64, usize) {
    let a = analytic.flatten();
    let n = numeric.flatten();
    a.iter()
        .zip(&n)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .enumerate()
        .fold((0.0, 0), |best, (i, e)| if e > best.0 { (e, i) } else { best })
}

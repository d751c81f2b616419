//! Shared fixtures for the benchmarks.

use structprior::{NetworkSpec, ParameterSet, PriorSpec, SeededRng, Tensor};

/// MNIST-shaped CNN with `depth` conv layers and an i.i.d. prior draw.
pub fn mnist_cnn(depth: usize) -> (NetworkSpec, ParameterSet) {
    let spec = NetworkSpec::cnn([28, 28, 1], &NetworkSpec::default_cnn_widths(depth), 10).expect("valid spec");
    let params =
        structprior::priors::init_network(&SeededRng::root(0), &spec, &PriorSpec::iid(), None).expect("iid init");
    (spec, params)
}

/// Uniform random images in [0, 1] and labels.
pub fn random_batch(spec: &NetworkSpec, n: usize) -> (Tensor, Vec<usize>) {
    let mut rng = SeededRng::root(1);
    let mut shape = vec![n];
    shape.extend_from_slice(&spec.input_shape);
    let data = (0..n * spec.input_len()).map(|_| rng.uniform(0.0, 1.0)).collect();
    let labels = (0..n).map(|_| rng.below(spec.n_outputs)).collect();
    (Tensor::new(shape, data).expect("shape matches data"), labels)
}

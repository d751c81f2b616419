use std::f64::consts::PI;

use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use structprior::datasets::ClassExemplars;
use structprior::eval::pearson;
use structprior::nn::NetworkSpec;
use structprior::priors::{
    add_filter_noise, feature_prior_means, init_network, sample_final_layer, sample_gabor_params, sample_iid_layer,
    standardize_layer, ColorMode,
};
use structprior::{PriorSpec, SeededRng, Tensor};

#[test]
fn orientation_mean_is_half_pi() {
    let mut rng = SeededRng::new(1, "theta");
    let n = 100_000;
    let mean = (0..n)
        .map(|_| sample_gabor_params(&mut rng, 5, ColorMode::Grayscale).theta_g)
        .sum::<f64>()
        / n as f64;
    assert!((mean - PI / 2.0).abs() < 0.01, "{mean}");
}

#[test]
fn black_and_white_fraction() {
    let mut rng = SeededRng::new(2, "bw");
    let n = 100_000;
    let bw = (0..n)
        .filter(|_| sample_gabor_params(&mut rng, 5, ColorMode::Rgb).bw_flag)
        .count();
    let frac = bw as f64 / n as f64;
    assert!((frac - 0.30).abs() < 0.01, "{frac}");
}

#[test]
fn every_draw_lies_in_the_hyperprior_box() {
    let mut rng = SeededRng::new(3, "support");
    for fw in [1, 3, 5, 7] {
        for color in [ColorMode::Grayscale, ColorMode::Rgb] {
            for _ in 0..5_000 {
                assert!(sample_gabor_params(&mut rng, fw, color).in_support(fw));
            }
        }
    }
}

#[test]
fn filter_noise_has_requested_spread_and_independent_streams() {
    let zero = Tensor::zeros(&[100, 100]);
    let a = add_filter_noise(&mut SeededRng::new(4, "noise/a"), zero.clone(), 0.3);
    let b = add_filter_noise(&mut SeededRng::new(4, "noise/b"), zero.clone(), 0.3);
    let std = a.variance().sqrt();
    assert!((std - 0.3).abs() < 0.01, "{std}");
    let r = pearson(a.data(), b.data()).unwrap();
    assert!(r.abs() < 0.05, "{r}");
    let same = add_filter_noise(&mut SeededRng::new(4, "noise/a"), zero.clone(), 0.0);
    assert_eq!(same, zero);
}

#[test]
fn iid_layer_matches_target_normal() {
    let n_in = 50;
    let w = sample_iid_layer(&mut SeededRng::new(5, "iid"), &[1_000_000], n_in).unwrap();
    assert!((w.variance() - 0.04).abs() < 0.001);
    assert!(w.mean().abs() < 0.001);

    let mut xs = w.data()[..100_000].to_vec();
    xs.sort_by(f64::total_cmp);
    let target = Normal::new(0.0, 0.04f64.sqrt()).unwrap();
    let n = xs.len() as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = target.cdf(x);
            (f - i as f64 / n).abs().max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "KS statistic {ks}");
}

#[test]
fn final_layer_draws_are_centred_on_the_means() {
    let means = Tensor::new(vec![2, 2], vec![1.0, -1.0, 0.25, -0.25]).unwrap();
    let n = 10_000;
    let mut rng = SeededRng::new(6, "final");
    let mut sums = [0.0; 4];
    let mut ordered = 0;
    for _ in 0..n {
        let w = sample_final_layer(&mut rng, &means, 0.1).unwrap();
        for (s, v) in sums.iter_mut().zip(w.data()) {
            *s += v;
        }
        if w.data()[0] > w.data()[1] {
            ordered += 1;
        }
    }
    for (s, m) in sums.iter().zip(means.data()) {
        assert!((s / n as f64 - m).abs() < 0.01);
    }
    assert!(ordered as f64 / n as f64 > 0.999);
}

fn exemplars(rng: &mut SeededRng, n_classes: usize, per_class: usize) -> ClassExemplars {
    let per_class = (0..n_classes)
        .map(|_| {
            let data = (0..per_class * 100).map(|_| rng.uniform(0.0, 1.0)).collect();
            Tensor::new(vec![per_class, 10, 10, 1], data).unwrap()
        })
        .collect();
    ClassExemplars {
        per_class,
        indices: vec![(0..3).collect(); n_classes],
    }
}

#[test]
fn final_layer_conditions_on_earlier_layers_only() {
    let spec = NetworkSpec::cnn([10, 10, 1], &[4], 3).unwrap();
    let ex = exemplars(&mut SeededRng::root(0), 3, 3);
    let prior = PriorSpec::gabor_features(ColorMode::Grayscale, 0.0);
    let a = init_network(&SeededRng::root(1), &spec, &prior, Some(&ex)).unwrap();
    let b = init_network(&SeededRng::root(2), &spec, &prior, Some(&ex)).unwrap();

    let means_a = feature_prior_means(&spec, &a, &ex).unwrap();
    assert_ne!(means_a, feature_prior_means(&spec, &b, &ex).unwrap());

    let mut resampled = a.clone();
    resampled.layers[1].weights = b.layers[1].weights.clone();
    assert_eq!(means_a, feature_prior_means(&spec, &resampled, &ex).unwrap());
    for row in 0..means_a.shape()[0] {
        assert!(means_a.row(row).iter().sum::<f64>().abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn standardization_is_an_increasing_affine_map(
        values in prop::collection::vec(-100.0f64..100.0, 2..200),
        n_in in 1usize..100,
    ) {
        prop_assume!(values.iter().any(|&v| v != values[0]));
        let t = Tensor::new(vec![values.len()], values.clone()).unwrap();
        let s = standardize_layer(&t, n_in).unwrap();
        prop_assert!(s.mean().abs() < 1e-12);
        prop_assert!((s.variance() - 2.0 / n_in as f64).abs() < 1e-12);
        for i in 0..values.len() {
            for j in 0..values.len() {
                if values[i] < values[j] {
                    prop_assert!(s.data()[i] < s.data()[j]);
                }
            }
        }
        let again = standardize_layer(&s, n_in).unwrap();
        for (x, y) in again.data().iter().zip(s.data()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}

mod common;

use proptest::prelude::*;
use structprior::nn::{forward, loss_and_grad, numeric_grad, softmax, LayerSpec, NetworkSpec, Padding, ParameterSet};
use structprior::{SeededRng, Tensor};

#[test]
fn gradients_match_finite_differences_on_toy_nets() {
    for seed in 0..20u64 {
        let (spec, p, x, y) = common::toy_problem(seed, 3);
        assert!(p.n_params() <= 200);
        let (_, analytic) = loss_and_grad(&spec, &p, &x, &y).unwrap();
        let numeric = numeric_grad(&spec, &p, &x, &y, 1e-4).unwrap();
        let (err, at) = common::max_relative_error(&analytic, &numeric, 1e-8);
        assert!(err < 1e-5, "seed {seed}: relative error {err:e} at parameter {at}");
    }
}

#[test]
fn linear_softmax_gradient_closed_form() {
    let spec = NetworkSpec::fcnn([1, 3, 1], 0, 0, 4).unwrap();
    let mut rng = SeededRng::new(5, "lin");
    let mut p = ParameterSet::zeros(&spec).unwrap();
    for i in 0..p.n_params() {
        p.set(i, rng.standard_normal());
    }
    let x = Tensor::new(vec![2, 1, 3, 1], (0..6).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
    let labels = [2, 0];
    let (_, g) = loss_and_grad(&spec, &p, &x, &labels).unwrap();

    // dW[i][j] = mean_b (p_bj - [j == y_b]) x_bi
    let probs = softmax(&forward(&spec, &p, &x).unwrap()).unwrap();
    for i in 0..3 {
        for j in 0..4 {
            let mut want = 0.0;
            for b in 0..2 {
                let r = probs.row(b)[j] - if labels[b] == j { 1.0 } else { 0.0 };
                want += r * x.row(b)[i] / 2.0;
            }
            let got = g.layers[0].weights.data()[i * 4 + j];
            assert!((got - want).abs() < 1e-12, "({i},{j}): {got} vs {want}");
        }
    }
}

fn random_batch(rng: &mut SeededRng, n: usize, shape: [usize; 3]) -> Tensor {
    let len = n * shape.iter().product::<usize>();
    Tensor::new(
        vec![n, shape[0], shape[1], shape[2]],
        (0..len).map(|_| rng.uniform(0.0, 1.0)).collect(),
    )
    .unwrap()
}

fn random_params(rng: &mut SeededRng, spec: &NetworkSpec) -> ParameterSet {
    let mut p = ParameterSet::zeros(spec).unwrap();
    for i in 0..p.n_params() {
        p.set(i, 0.3 * rng.standard_normal());
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn batch_forward_equals_per_example(seed in 0u64..1000, n in 1usize..150) {
        let spec = NetworkSpec::cnn([10, 10, 2], &[3, 4], 5).unwrap();
        let mut rng = SeededRng::new(seed, "batch");
        let p = random_params(&mut rng, &spec);
        let x = random_batch(&mut rng, n, [10, 10, 2]);
        let all = forward(&spec, &p, &x).unwrap();
        for i in 0..n {
            let one = forward(&spec, &p, &x.select_rows(&[i])).unwrap();
            prop_assert_eq!(one.data(), all.row(i));
        }
    }

    #[test]
    fn softmax_rows_are_distributions(logits in prop::collection::vec(-50.0f64..50.0, 1..40), c in 1usize..6) {
        let rows = logits.len() / c;
        prop_assume!(rows > 0);
        let t = Tensor::new(vec![rows, c], logits[..rows * c].to_vec()).unwrap();
        let s = softmax(&t).unwrap();
        for r in 0..rows {
            let row = s.row(r);
            prop_assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn maxpool_matches_brute_force(seed in 0u64..1000, h in 2usize..9, w in 2usize..9, c in 1usize..4) {
        // identity 1x1 conv exposes the pooled values through an identity dense layer
        let (oh, ow) = (h / 2, w / 2);
        let n_out = oh * ow * c;
        let spec = NetworkSpec::new(
            [h, w, c],
            vec![LayerSpec::MaxPool2x2, LayerSpec::Flatten, LayerSpec::dense(n_out)],
            n_out,
        ).unwrap();
        let mut p = ParameterSet::zeros(&spec).unwrap();
        for i in 0..n_out {
            p.layers[0].weights.data_mut()[i * n_out + i] = 1.0;
        }
        let mut rng = SeededRng::new(seed, "pool");
        let x = random_batch(&mut rng, 1, [h, w, c]);
        let y = forward(&spec, &p, &x).unwrap();
        let px = |yy: usize, xx: usize, ch: usize| x.data()[(yy * w + xx) * c + ch];
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let m = [px(2*oy, 2*ox, ch), px(2*oy, 2*ox+1, ch), px(2*oy+1, 2*ox, ch), px(2*oy+1, 2*ox+1, ch)]
                        .into_iter().fold(f64::NEG_INFINITY, f64::max);
                    prop_assert_eq!(y.data()[(oy * ow + ox) * c + ch], m);
                }
            }
        }
    }
}

#[test]
fn forward_and_grad_are_reproducible() {
    let (spec, p, x, y) = common::toy_problem(3, 5);
    let a = loss_and_grad(&spec, &p, &x, &y).unwrap();
    let b = loss_and_grad(&spec, &p, &x, &y).unwrap();
    assert_eq!(a.0.to_bits(), b.0.to_bits());
    assert_eq!(a.1, b.1);
    let from_threads: Vec<Tensor> = std::thread::scope(|s| {
        let hs: Vec<_> = (0..4).map(|_| s.spawn(|| forward(&spec, &p, &x).unwrap())).collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for t in &from_threads {
        assert_eq!(t, &from_threads[0]);
    }
}

#[test]
fn same_padding_keeps_spatial_size() {
    let spec = NetworkSpec::new(
        [7, 5, 1],
        vec![
            LayerSpec::conv(2, 3, Padding::Same),
            LayerSpec::Flatten,
            LayerSpec::dense(1),
        ],
        1,
    )
    .unwrap();
    let shapes = structprior::nn::infer_shapes(&spec).unwrap();
    assert_eq!(shapes[0].dims(), vec![7, 5, 2]);
}

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use structprior::nn::{forward, loss_and_grad};
use structprior_bench::{mnist_cnn, random_batch};

fn bench_forward(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward_128");
    for depth in [1, 2] {
        let (spec, params) = mnist_cnn(depth);
        let (x, _) = random_batch(&spec, 128);
        group.bench_with_input(BenchmarkId::from_parameter(depth), &depth, |b, _| {
            b.iter(|| forward(&spec, &params, black_box(&x)).unwrap())
        });
    }
    group.finish();
}

fn bench_loss_and_grad(c: &mut Criterion) {
    let (spec, params) = mnist_cnn(1);
    let (x, labels) = random_batch(&spec, 128);
    c.bench_function("loss_and_grad_128", |b| {
        b.iter(|| loss_and_grad(&spec, &params, black_box(&x), &labels).unwrap())
    });
}

criterion_group!(
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_forward, bench_loss_and_grad
);
criterion_main!(benches);

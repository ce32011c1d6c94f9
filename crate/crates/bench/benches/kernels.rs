use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stablefam_bench::{dense_polymat, smooth_fcarr};
use stablefam_core::interval::Interval;
use stablefam_core::polymat::{mul_bounded, op_norm_up};
use stablefam_core::seqspace::kernel::conv;
use stablefam_core::{FcBall, Prec};

fn convolution(c: &mut Criterion) {
    let mut g = c.benchmark_group("conv");
    for (n, k) in [(10, 5), (30, 20)] {
        let a = smooth_fcarr(n, k, 0.1);
        let b = smooth_fcarr(n, k, 0.7);
        g.bench_with_input(BenchmarkId::new("fast", format!("{n}x{k}")), &(), |bch, _| bch.iter(|| conv(&a, &b, Prec::Fast, 1.001)));
        g.bench_with_input(BenchmarkId::new("compensated", format!("{n}x{k}")), &(), |bch, _| bch.iter(|| conv(&a, &b, Prec::Compensated, 1.001)));
    }
    g.finish();
}

fn ball_product(c: &mut Criterion) {
    let a = FcBall { err: 1e-12, ..FcBall::exact(smooth_fcarr(30, 20, 0.3), 1.001) };
    let b = FcBall { err: 1e-12, ..FcBall::exact(smooth_fcarr(30, 20, 0.9), 1.001) };
    c.bench_function("ball mul_trunc 30x20", |bch| bch.iter(|| a.mul_trunc(&b, Prec::Compensated, 30, 20)));
}

fn polymat(c: &mut Criterion) {
    let a = dense_polymat(63, 63, 4, 0.2);
    let b = dense_polymat(63, 63, 4, 1.4);
    c.bench_function("mul_bounded 63x63 deg 4", |bch| bch.iter(|| mul_bounded(&a, &b, 1.001)));
    c.bench_function("op_norm_up 63x63 deg 4", |bch| bch.iter(|| op_norm_up(&a, 1.001)));
}

fn intervals(c: &mut Criterion) {
    let xs: Vec<Interval> = (0..1024).map(|i| Interval::new(i as f64 * 1e-3, i as f64 * 1e-3 + 1e-9)).collect();
    c.bench_function("interval mul-add x1024", |bch| bch.iter(|| xs.iter().fold(Interval::ZERO, |s, x| s + *x * *x)));
    c.bench_function("interval sin x1024", |bch| bch.iter(|| xs.iter().map(|x| x.sin().hi()).sum::<f64>()));
}

criterion_group!(benches, convolution, ball_product, polymat, intervals);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qfid_bench::{hermitian, pair, params};
use qfid_core::linalg::eig_hermitian;
use qfid_core::{build_sqrt_unitary, estimate_fidelity, fidelity_exact, qae_estimate, QaeMode, QaeParams, SimLevel, SqrtParams};

fn linalg(c: &mut Criterion) {
    let mut g = c.benchmark_group("eig_hermitian");
    for q in [3usize, 5, 7] {
        let m = hermitian(q, 1).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(1 << q), &m, |b, m| b.iter(|| eig_hermitian(m).unwrap()));
    }
    g.finish();
    let (pr, ps) = pair(3, 2, 4, 0).unwrap();
    let (rho, sigma) = (
        qfid_core::DensityOperator::new(pr.density_matrix().unwrap()).unwrap(),
        qfid_core::DensityOperator::new(ps.density_matrix().unwrap()).unwrap(),
    );
    c.bench_function("fidelity_exact/8", |b| b.iter(|| fidelity_exact(&rho, &sigma).unwrap()));
}

fn sqrt_stage(c: &mut Criterion) {
    let (pr, _) = pair(1, 2, 2, 0).unwrap();
    let mut g = c.benchmark_group("build_sqrt_unitary");
    g.sample_size(10);
    for t in [16u64, 64] {
        let p = SqrtParams::new(4.0, t, SimLevel::CircuitPe).unwrap();
        g.bench_with_input(BenchmarkId::new("circuit-pe", t), &p, |b, p| b.iter(|| build_sqrt_unitary(&pr, p, 14).unwrap()));
    }
    let p = SqrtParams::new(4.0, 4096, SimLevel::IdealSpectral).unwrap();
    g.bench_function("ideal-spectral", |b| b.iter(|| build_sqrt_unitary(&pr, &p, 14).unwrap()));
    g.finish();
}

fn end_to_end(c: &mut Criterion) {
    let (pr, ps) = pair(2, 1, 2, 0).unwrap();
    let p = params(SimLevel::IdealSpectral).unwrap();
    let mut g = c.benchmark_group("estimate_fidelity");
    g.sample_size(10);
    g.bench_function("ideal-spectral/n=2", |b| b.iter(|| estimate_fidelity(&pr, &ps, &p).unwrap()));
    g.finish();
    let q = QaeParams::new(1024, QaeMode::Sample, 3).unwrap();
    c.bench_function("qae_estimate/sample/1024", |b| b.iter(|| qae_estimate(0.3, &q).unwrap()));
}

criterion_group!(benches, linalg, sqrt_stage, end_to_end);
criterion_main!(benches);

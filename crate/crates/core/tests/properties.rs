use std::f64::consts::PI;

use proptest::prelude::*;
use qfid_core::block_encoding::{purification_to_unitary_be, top_left_block};
use qfid_core::linalg::{
    eig_hermitian, expm_i, matrix_func, operator_norm, partial_trace, project_zero, tensor, ComplexMatrix,
    RegisterLayout, SegmentRole, C64,
};
use qfid_core::pipeline::{estimate_fidelity, weyl_trace_bound_check, PipelineParams};
use qfid_core::qae::{qae_error_bound, qae_estimate, QaeMode, QaeParams};
use qfid_core::sqrt::{filter_f, SimLevel};
use qfid_core::state::{
    fidelity_exact, min_ancilla, purification_distance, purify, random_density, trace_distance,
};
use qfid_core::sweep::{instance_pair, run_sweep, standard_purification, SweepSpec};
use qfid_core::verify::{ideal_bound_ratio, lipschitz_ratio};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn hermitian(dim: usize, seed: u64) -> ComplexMatrix {
    gaussian(dim, dim, seed).hermitian_part()
}

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn tensor_is_associative(seed in any::<u64>(), ra in 1usize..4, rb in 1usize..4, rc in 1usize..4) {
        let a = gaussian(ra, 2, seed);
        let b = gaussian(rb, 3, seed ^ 1);
        let c = gaussian(rc, 2, seed ^ 2);
        let left = tensor(&tensor(&a, &b), &c);
        let right = tensor(&a, &tensor(&b, &c));
        prop_assert!(left.max_abs_diff(&right) <= 1e-12);
    }

    #[test]
    fn eig_reconstructs(seed in any::<u64>(), q in 0usize..6) {
        let m = hermitian(1 << q, seed);
        let e = eig_hermitian(&m).unwrap();
        let v = &e.vectors;
        let back = &(v * &ComplexMatrix::from_real_diag(&e.values)) * &v.adjoint();
        prop_assert!(operator_norm(&(&back - &m)) <= 1e-10);
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn matrix_func_identity(seed in any::<u64>(), q in 0usize..5) {
        let m = hermitian(1 << q, seed);
        let back = matrix_func(&m, |x| x, false).unwrap();
        prop_assert!(operator_norm(&(&back - &m)) <= 1e-10);
    }

    #[test]
    fn expm_i_is_unitary(seed in any::<u64>(), q in 0usize..5, s in -10.0f64..10.0) {
        let u = expm_i(&hermitian(1 << q, seed), s).unwrap();
        prop_assert!(u.unitarity_defect() <= 1e-10);
    }

    #[test]
    fn partial_trace_keeps_trace(seed in any::<u64>(), a in 1usize..3, b in 1usize..3, c in 0usize..2) {
        let layout = RegisterLayout::from_parts(&[
            ("a", a, SegmentRole::System),
            ("b", b, SegmentRole::Garbage),
            ("c", c, SegmentRole::Garbage),
        ]).unwrap();
        let g = gaussian(layout.dim(), layout.dim(), seed);
        let m = &g * &g.adjoint();
        let total = m.trace();
        for keep in [vec!["a"], vec!["b"], vec!["a", "c"], vec![]] {
            let r = partial_trace(&m, &layout, &keep).unwrap();
            prop_assert!((r.trace() - total).norm() <= 1e-10 * total.norm().max(1.0));
        }
    }

    #[test]
    fn purification_round_trip(seed in any::<u64>(), n in 1usize..4, rank_pick in 0usize..8, extra in 0usize..2) {
        let rank = 1 + rank_pick % (1 << n);
        let rho = random_density(n, rank, seed).unwrap();
        let p = purify(&rho, min_ancilla(&rho) + extra).unwrap();
        let back = p.density_matrix().unwrap();
        prop_assert!(operator_norm(&(&back - rho.matrix())) <= 1e-9);
    }

    #[test]
    fn norm_distance_below_purification_distance(seed in any::<u64>(), n in 1usize..4, ra in 0usize..8, rb in 0usize..8) {
        let d = 1 << n;
        let rho = random_density(n, 1 + ra % d, seed).unwrap();
        let sigma = random_density(n, 1 + rb % d, seed ^ 0x5a5a).unwrap();
        let a = min_ancilla(&rho).max(min_ancilla(&sigma));
        let (pr, ps) = (purify(&rho, a).unwrap(), purify(&sigma, a).unwrap());
        let lhs = operator_norm(&(rho.matrix() - sigma.matrix()));
        prop_assert!(lhs <= purification_distance(&pr, &ps).unwrap() + 1e-12);
    }

    #[test]
    fn fidelity_symmetric_and_bounded(seed in any::<u64>(), n in 1usize..4, ra in 0usize..8, rb in 0usize..8) {
        let d = 1 << n;
        let rho = random_density(n, 1 + ra % d, seed).unwrap();
        let sigma = random_density(n, 1 + rb % d, seed ^ 0xa5a5).unwrap();
        let f = fidelity_exact(&rho, &sigma).unwrap();
        prop_assert!((f - fidelity_exact(&sigma, &rho).unwrap()).abs() <= 1e-9);
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&f));
        prop_assert!((fidelity_exact(&rho, &rho).unwrap() - 1.0).abs() <= 1e-9);
        prop_assert!(trace_distance(&rho, &rho).unwrap() <= 1e-9);
        if trace_distance(&rho, &sigma).unwrap() > 1e-6 {
            prop_assert!(f < 1.0 - 1e-13);
        }
    }

    #[test]
    fn filter_scaled_is_flat(kappa in 1.0f64..1e4, u in 0.0f64..=1.0) {
        let lambda = 1.0 / kappa + u * (1.0 - 1.0 / kappa);
        let lhs = lambda.powf(0.25) * filter_f(lambda, kappa);
        prop_assert!((lhs - 0.5 * kappa.powf(-0.25)).abs() <= 1e-12);
    }

    #[test]
    fn filter_is_continuous(kappa in 1.0f64..1e3, x in -0.5f64..1.5) {
        let h = 1e-9;
        prop_assert!((filter_f(x + h, kappa) - filter_f(x, kappa)).abs() <= 2.0 * PI * kappa * h + 1e-12);
        for edge in [0.5 / kappa, 1.0 / kappa, 1.0] {
            prop_assert!((filter_f(edge + h, kappa) - filter_f(edge - h, kappa)).abs() <= 4.0 * PI * kappa * h + 1e-12);
        }
    }

    #[test]
    fn qae_sample_on_grid(x in 0.0f64..=1.0, log_m in 3u32..9, seed in any::<u64>()) {
        let m = 1u64 << log_m;
        let est = qae_estimate(x, &QaeParams::new(m, QaeMode::Sample, seed).unwrap()).unwrap();
        let on_grid = (0..m).any(|y| (est - (PI * y as f64 / m as f64).sin().powi(2)).abs() <= 1e-12);
        prop_assert!(on_grid);
    }

    #[test]
    fn qae_exact_within_bound(x in 0.0f64..=1.0, log_m in 3u32..11) {
        let m = 1u64 << log_m;
        let est = qae_estimate(x, &QaeParams::new(m, QaeMode::Exact, 0).unwrap()).unwrap();
        prop_assert!((est - x).abs() <= qae_error_bound(x, m) + 1e-12);
    }
}

proptest! {
    #![proptest_config(cfg(16))]

    #[test]
    fn swap_construction_is_exact(seed in any::<u64>(), n in 1usize..3, rank_pick in 0usize..4) {
        let rank = 1 + rank_pick % (1 << n);
        let rho = random_density(n, rank, seed).unwrap();
        let p = purify(&rho, min_ancilla(&rho)).unwrap();
        let be = purification_to_unitary_be(&p, 14).unwrap();
        prop_assert!(be.error() <= 1e-9);
    }

    #[test]
    fn top_left_block_matches_slicing(seed in any::<u64>(), n in 1usize..3, a in 1usize..3) {
        let layout = RegisterLayout::from_parts(&[("sys", n, SegmentRole::System), ("enc", a, SegmentRole::Encoding)]).unwrap();
        let m = gaussian(layout.dim(), layout.dim(), seed);
        let da = 1 << a;
        let sliced = ComplexMatrix::from_fn(1 << n, 1 << n, |i, j| m[(i * da, j * da)]);
        prop_assert!(top_left_block(&m, &layout).unwrap().max_abs_diff(&sliced) == 0.0);
        prop_assert!(project_zero(&m, &layout, &["enc"]).unwrap().max_abs_diff(&sliced) == 0.0);
    }

    #[test]
    fn weyl_bound_on_perturbations(seed in any::<u64>(), q in 1usize..4, scale in 1e-8f64..1e-1) {
        let d = 1 << q;
        let r = 1 + (seed as usize) % d;
        let target = random_density(q, r, seed).unwrap().matrix().scale_real(0.5);
        let noise = hermitian(d, seed ^ 7);
        let noise = noise.scale_real(scale / operator_norm(&noise));
        let check = weyl_trace_bound_check(&(&target + &noise), &target, d).unwrap();
        prop_assert!(check.holds, "{check:?}");
    }
}

#[test]
fn eig_reconstructs_at_256() {
    let m = hermitian(256, 99);
    let e = eig_hermitian(&m).unwrap();
    let back = &(&e.vectors * &ComplexMatrix::from_real_diag(&e.values)) * &e.vectors.adjoint();
    assert!(operator_norm(&(&back - &m)) <= 1e-10);
}

#[test]
fn lipschitz_and_ideal_bound() {
    for kappa in [1.5, 4.0, 50.0] {
        assert!(lipschitz_ratio(kappa, 2000, 5) <= 1.0 + 1e-6);
    }
    for kappa in [2.0, 16.0] {
        assert!(ideal_bound_ratio(kappa, 9, 21).unwrap() <= 1.0 + 1e-9);
    }
}

fn params(kappa_sigma: f64, t_sigma: u64, kappa: f64, t: u64, m: u64) -> PipelineParams {
    let qae = QaeParams::new(m, QaeMode::Exact, 0).unwrap();
    PipelineParams::new(kappa_sigma, t_sigma, kappa, t, qae, SimLevel::IdealSpectral).unwrap()
}

#[test]
fn equal_rank_swap_gives_same_report() {
    for seed in 0..4 {
        let (rho, sigma) = instance_pair(2, 2, 2, seed).unwrap();
        let (pr, ps) = (standard_purification(&rho).unwrap(), standard_purification(&sigma).unwrap());
        for level in [SimLevel::IdealSpectral, SimLevel::CircuitPe] {
            let p = PipelineParams::new(16.0, 256, 64.0, 4096, QaeParams::new(64, QaeMode::Sample, seed).unwrap(), level)
                .unwrap()
                .with_seed(seed);
            let a = estimate_fidelity(&pr, &ps, &p).unwrap();
            let mut b = estimate_fidelity(&ps, &pr, &p).unwrap();
            assert_ne!(a.roles_swapped, b.roles_swapped);
            b.roles_swapped = a.roles_swapped;
            assert_eq!(a, b);
        }
    }
}

#[test]
fn median_error_nonincreasing_under_doubling() {
    let instances: Vec<_> = (0..7)
        .map(|s| {
            let (rho, sigma) = instance_pair(2, 1, 2, s).unwrap();
            (standard_purification(&rho).unwrap(), standard_purification(&sigma).unwrap())
        })
        .collect();
    let mut medians = Vec::new();
    for d in 0..4u32 {
        let p = params(16.0, 4096, 256.0 * f64::from(1 << d), (1 << 14) << d, 1 << 24);
        let mut errs: Vec<f64> =
            instances.iter().map(|(pr, ps)| estimate_fidelity(pr, ps, &p).unwrap().abs_error).collect();
        errs.sort_by(f64::total_cmp);
        medians.push(errs[errs.len() / 2]);
    }
    assert!(medians.windows(2).all(|w| w[1] <= w[0]), "{medians:?}");
}

#[test]
fn sigma_queries_linear_in_t_sigma() {
    let (rho, sigma) = instance_pair(1, 1, 2, 3).unwrap();
    let (pr, ps) = (standard_purification(&rho).unwrap(), standard_purification(&sigma).unwrap());
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for l in 10..=18 {
        let ts = 1u64 << l;
        let q = estimate_fidelity(&pr, &ps, &params(16.0, ts, 64.0, 4096, 64)).unwrap().queries_sigma;
        lx.push((ts as f64).ln());
        ly.push((q as f64).ln());
    }
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = cov / var;
    assert!((0.8..=1.2).contains(&slope), "{slope}");
}

#[test]
fn sweep_cells_are_finite() {
    let spec = SweepSpec {
        n: 1,
        rank_rho: 1,
        rank_sigma: 2,
        instance_seed_start: 0,
        instances: 2,
        kappa_sigma: vec![16.0],
        t_sigma: vec![256],
        kappa: vec![16.0, 256.0],
        t: vec![4096],
        m: vec![16],
        qae_mode: QaeMode::Sample,
        sim_level: SimLevel::IdealSpectral,
        trials: 2,
        seed_base: 5,
        bound_constant: 1.0,
        qubit_budget: 14,
    };
    let mut out = Vec::new();
    let rows = run_sweep(&spec, 2, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), rows + 1);
    for line in text.lines().skip(1) {
        for cell in line.split(',') {
            if let Ok(v) = cell.parse::<f64>() {
                assert!(v.is_finite(), "{line}");
            }
        }
    }
}

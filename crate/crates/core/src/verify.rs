//! Numerical checks of the individual bounds the estimator relies on.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, operator_norm, ComplexMatrix, C64};
use crate::pipeline::weyl_trace_bound_check;
use crate::qae::{qae_error_bound, qae_estimate, QaeMode, QaeParams};
use crate::sqrt::{
    h_vector, ideal_sqrt_state, pe_amplitude_closed, pe_amplitude_direct, pe_coefficient, pe_coefficient_direct,
    pe_delta, pe_tail_bound, sine_state, SimLevel, SqrtParams,
};
use crate::state::{
    fidelity_exact, min_ancilla, purification_distance, purify, random_density, trace_distance, RANK_TOL,
};

pub const SUITES: &[&str] = &[
    "sine-state",
    "filter-lipschitz",
    "ideal-bound",
    "pe-coefficients",
    "tail-bound",
    "appendix-d",
    "weyl",
    "qae-bound",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `measured <= threshold`.
    pub fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Check { name: name.into(), measured, threshold, passed: measured <= threshold }
    }

    /// Passes when `measured >= threshold`.
    pub fn at_least(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Check { name: name.into(), measured, threshold, passed: measured >= threshold }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {}/{}: measured {:.6e}, threshold {:.6e}",
                if c.passed { "PASS" } else { "FAIL" },
                self.suite,
                c.name,
                c.measured,
                c.threshold
            )?;
        }
        Ok(())
    }
}

/// Runs one suite, or every suite for `"all"`.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<SuiteReport>> {
    if name == "all" {
        return SUITES.iter().map(|s| run_one(s, seed)).collect();
    }
    Ok(vec![run_one(name, seed)?])
}

fn run_one(name: &str, seed: u64) -> Result<SuiteReport> {
    let checks = match name {
        "sine-state" => sine_suite()?,
        "filter-lipschitz" => lipschitz_suite(seed),
        "ideal-bound" => ideal_bound_suite(seed)?,
        "pe-coefficients" => pe_suite(seed)?,
        "tail-bound" => tail_suite(seed),
        "appendix-d" => purification_distance_suite(seed)?,
        "weyl" => weyl_suite(seed)?,
        "qae-bound" => qae_suite(seed)?,
        other => {
            return Err(Error::UnknownSuite { name: other.into(), available: suites_list() });
        }
    };
    Ok(SuiteReport { suite: name.into(), checks })
}

fn suites_list() -> String {
    let mut v: Vec<&str> = SUITES.to_vec();
    v.push("all");
    v.join(", ")
}

fn sine_suite() -> Result<Vec<Check>> {
    let mut norm_dev = 0.0f64;
    let mut symmetry = 0.0f64;
    for l in 1..=12 {
        let v = sine_state(1 << l)?;
        let n: f64 = v.iter().map(|x| x * x).sum();
        norm_dev = norm_dev.max((n - 1.0).abs());
        for i in 0..v.len() {
            symmetry = symmetry.max((v[i] - v[v.len() - 1 - i]).abs());
        }
    }
    let two = sine_state(2)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ok(vec![
        Check::at_most("norm deviation, T = 2..4096", norm_dev, 1e-12),
        Check::at_most("mirror symmetry", symmetry, 1e-12),
        Check::at_most("T = 2 entries", (two[0] - h).abs().max((two[1] - h).abs()), 1e-15),
    ])
}

/// Largest `||h(a) - h(b)|| / |a - b|` over far and near pairs, relative to
/// `(pi/sqrt 3) kappa`.
pub fn lipschitz_ratio(kappa: f64, pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limit = PI / 3f64.sqrt() * kappa;
    let mut worst = 0.0f64;
    for i in 0..pairs {
        let a: f64 = rng.random();
        let b = if i % 2 == 0 {
            rng.random::<f64>()
        } else {
            let w = 10f64.powf(-rng.random_range(3.0..9.0));
            (a + w * rng.random_range(-1.0..1.0)).clamp(0.0, 1.0)
        };
        if a == b {
            continue;
        }
        let (ha, hb) = (h_vector(a, kappa), h_vector(b, kappa));
        let d = ((ha[0] - hb[0]).powi(2) + (ha[1] - hb[1]).powi(2)).sqrt();
        worst = worst.max(d / (a - b).abs() / limit);
    }
    worst
}

fn lipschitz_suite(seed: u64) -> Vec<Check> {
    [2.0, 8.0, 32.0]
        .iter()
        .map(|&k| Check::at_most(format!("quotient / (pi/sqrt3) kappa, kappa = {k}"), lipschitz_ratio(k, 10_000, seed), 1.0 + 1e-6))
        .collect()
}

/// Largest `4 kappa || <0|rho_check|0> - sqrt(A)/(4 sqrt kappa) ||` over
/// random density operators with `n <= 3`, ranks 1 to 4.
pub fn ideal_bound_ratio(kappa: f64, instances: u64, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..instances {
        let n = 1 + (i % 3) as usize;
        let rank = (1 + (i / 3) % 4).min(1 << n) as usize;
        let rho = random_density(n, rank, seed.wrapping_add(i))?;
        let p = purify(&rho, min_ancilla(&rho))?;
        let out = ideal_sqrt_state(&p, &SqrtParams::new(kappa, 64, SimLevel::IdealSpectral)?, 14)?;
        let alpha = 4.0 * kappa.sqrt();
        worst = worst.max(out.encoding.error() / alpha * 4.0 * kappa);
    }
    Ok(worst)
}

fn ideal_bound_suite(seed: u64) -> Result<Vec<Check>> {
    [1.0, 4.0, 16.0, 64.0]
        .iter()
        .map(|&k| Ok(Check::at_most(format!("be_error * 4 kappa, kappa = {k}"), ideal_bound_ratio(k, 24, seed)?, 1.0 + 1e-9)))
        .collect()
}

/// `(max |closed - direct|, max |sum |alpha|^2 - 1|)` over random eigenvalues.
pub fn pe_coefficient_deviation(big_t: u64, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let p = SqrtParams::new(4.0, big_t, SimLevel::CircuitPe)?;
    if p.big_t != big_t {
        return Err(Error::NotPowerOfTwo(big_t as usize));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut dev, mut norm) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let lambda: f64 = rng.random();
        let mut total = 0.0;
        for k in 0..big_t {
            let a = pe_coefficient(lambda, k, &p);
            dev = dev.max((a - pe_coefficient_direct(lambda, k, &p)).norm());
            total += a.norm_sqr();
        }
        norm = norm.max((total - 1.0).abs());
    }
    Ok((dev, norm))
}

fn pe_suite(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for big in [8u64, 16, 32] {
        let (dev, norm) = pe_coefficient_deviation(big, 100, seed)?;
        out.push(Check::at_most(format!("closed vs direct, T = {big}"), dev, 1e-10));
        out.push(Check::at_most(format!("normalization, T = {big}"), norm, 1e-10));
    }
    Ok(out)
}

/// Largest `|alpha(delta)| / (3 sqrt2 pi^3 / (T^2 delta^2))` over
/// `2 pi / T < |delta| <= pi`.
pub fn tail_ratio(big_t: u64, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = 2.0 * PI / big_t as f64;
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let mag = rng.random_range(lo..=PI);
        let delta = if rng.random::<bool>() { mag } else { -mag };
        if delta.abs() <= lo {
            continue;
        }
        let a = pe_amplitude_closed(delta, big_t).unwrap_or_else(|| pe_amplitude_direct(delta, big_t));
        worst = worst.max(a.norm() / pe_tail_bound(delta, big_t));
    }
    worst
}

fn tail_suite(seed: u64) -> Vec<Check> {
    [8u64, 16, 32, 256]
        .iter()
        .map(|&t| Check::at_most(format!("|alpha| / tail bound, T = {t}"), tail_ratio(t, 2000, seed), 1.0))
        .collect()
}

fn purification_distance_suite(seed: u64) -> Result<Vec<Check>> {
    let (mut fuchs, mut purif) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..100u64 {
        let n = 1 + (i % 3) as usize;
        let d = 1usize << n;
        let rho = random_density(n, 1 + (i as usize % d), seed.wrapping_add(2 * i))?;
        let sigma = random_density(n, 1 + (i as usize / 3) % d, seed.wrapping_add(2 * i + 1))?;
        let f = fidelity_exact(&rho, &sigma)?.min(1.0);
        fuchs = fuchs.max(trace_distance(&rho, &sigma)? - (1.0 - f * f).sqrt());
        let a = min_ancilla(&rho).max(min_ancilla(&sigma));
        let (pr, ps) = (purify(&rho, a)?, purify(&sigma, a)?);
        let lhs = operator_norm(&(rho.matrix() - sigma.matrix()));
        purif = purif.max(lhs - purification_distance(&pr, &ps)?);
    }
    Ok(vec![
        Check::at_most("D - sqrt(1 - F^2)", fuchs, 1e-9),
        Check::at_most("||rho - sigma|| - || |rho> - |sigma> ||", purif, 1e-9),
    ])
}

/// Random `(target, target + J, r)` with `target` PSD on at most 16
/// dimensions and `||J||` log-uniform in `[1e-6, 1e-1]`. Odd indices keep `J`
/// on the support of `target`; even indices let it act anywhere. `r` is the
/// larger numerical rank of the two operators after clamping.
pub fn weyl_instance(index: u64, seed: u64) -> Result<(ComplexMatrix, ComplexMatrix, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index));
    let n = rng.random_range(1..=4usize);
    let d = 1usize << n;
    let rank = rng.random_range(1..=d);
    let target = random_density(n, rank, rng.random())?.matrix().clone();
    let mut h = ComplexMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    h = h.hermitian_part();
    if index % 2 == 1 {
        let eig = eig_hermitian(&target)?;
        let proj = eig.map(|l| if l > RANK_TOL { 1.0 } else { 0.0 });
        h = &(&proj * &h) * &proj;
    }
    let size = 10f64.powf(rng.random_range(-6.0..-1.0));
    let j = h.scale_real(size / operator_norm(&h));
    let perturbed = &target + &j;
    let rank_of = |m: &ComplexMatrix| -> Result<usize> { Ok(eig_hermitian(m)?.rank_above(RANK_TOL)) };
    let r = rank_of(&target)?.max(rank_of(&perturbed)?);
    Ok((target, perturbed, r))
}

fn weyl_suite(seed: u64) -> Result<Vec<Check>> {
    let mut worst = 0.0f64;
    for i in 0..500 {
        let (target, perturbed, r) = weyl_instance(i, seed)?;
        let c = weyl_trace_bound_check(&perturbed, &target, r)?;
        worst = worst.max(c.difference / c.bound);
    }
    Ok(vec![Check::at_most("|tr sqrt difference| / (r sqrt(3||J||)), 500 pairs", worst, 1.0)])
}

/// Largest exact-mode error relative to the bound over an `x` grid.
pub fn qae_exact_ratio(m: u64, grid: usize) -> Result<f64> {
    let p = QaeParams::new(m, QaeMode::Exact, 0)?;
    let mut worst = 0.0f64;
    for i in 0..=grid {
        let x = i as f64 / grid as f64;
        worst = worst.max((qae_estimate(x, &p)? - x).abs() / qae_error_bound(x, m));
    }
    Ok(worst)
}

/// Fraction of sampled estimates within the bound, seeds `seed..seed + trials`.
pub fn qae_success_rate(x: f64, m: u64, trials: u64, seed: u64) -> Result<f64> {
    let bound = qae_error_bound(x, m);
    let mut hits = 0u64;
    for i in 0..trials {
        let p = QaeParams::new(m, QaeMode::Sample, seed.wrapping_add(i))?;
        if (qae_estimate(x, &p)? - x).abs() <= bound {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}

fn qae_suite(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut m = 8;
    while m <= 1024 {
        out.push(Check::at_most(format!("exact error / bound, M = {m}"), qae_exact_ratio(m, 10_000)?, 1.0));
        m *= 2;
    }
    out.push(Check::at_least(
        "sample success rate, x = 0.5, M = 64",
        qae_success_rate(0.5, 64, 1000, seed)?,
        8.0 / (PI * PI) - 0.03,
    ));
    Ok(out)
}

/// One row of the phase-estimation coefficient table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoeffRow {
    pub k: u64,
    pub delta: f64,
    pub closed: Option<C64>,
    pub direct: C64,
    pub difference: Option<f64>,
    /// `None` when `|delta| <= 2 pi / T`, where the tail bound does not apply.
    pub tail_bound: Option<f64>,
}

/// `alpha_{k|j}` for every grid index, with `delta` wrapped into `(-pi, pi]`.
pub fn coefficient_table(lambda: f64, big_t: u64, t: u64) -> Result<Vec<CoeffRow>> {
    let p = SqrtParams::new(1.0, t.max(6), SimLevel::CircuitPe)?;
    if !big_t.is_power_of_two() || big_t < 2 {
        return Err(Error::NotPowerOfTwo(big_t as usize));
    }
    let p = SqrtParams { t, big_t, l: big_t.trailing_zeros() as usize, ..p };
    Ok((0..big_t)
        .map(|k| {
            let raw = pe_delta(lambda, k, &p);
            let delta = raw - 2.0 * PI * ((raw + PI) / (2.0 * PI)).floor();
            let delta = if delta <= -PI { delta + 2.0 * PI } else { delta };
            let closed = pe_amplitude_closed(delta, big_t);
            let direct = pe_amplitude_direct(delta, big_t);
            let tail_bound = (delta.abs() > 2.0 * PI / big_t as f64).then(|| pe_tail_bound(delta, big_t));
            CoeffRow { k, delta, closed, direct, difference: closed.map(|c| (c - direct).norm()), tail_bound }
        })
        .collect())
}

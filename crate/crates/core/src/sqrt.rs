//! Square-root extraction: from a purification whose traced state encodes a
//! PSD operator `A`, prepare a state encoding `sqrt(A) / (4 sqrt(kappa))`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::block_encoding::{Carrier, EncodedOperator, EncodingKind};
use crate::circuit::{check_budget, dagger, embed, Fourier, Gate, Operator, Reflection, Select, Sequence};
use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, expm_i, operator_norm, ComplexMatrix, HermitianEigen, RegisterLayout, Segment, SegmentRole, C64,
    HERMITIAN_TOL,
};
use crate::state::Purification;

/// Default Hamiltonian-simulation accuracy used by the query model.
pub const DEFAULT_EPS_A: f64 = 1e-10;

/// How faithfully phase estimation is simulated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimLevel {
    /// The filter is applied to the exact spectrum; no phase register.
    IdealSpectral,
    /// Full circuit with exact controlled exponentials.
    CircuitPe,
    /// Circuit with each controlled exponential perturbed by a random unitary.
    CircuitPePerturbed,
}

impl SimLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            SimLevel::IdealSpectral => "ideal-spectral",
            SimLevel::CircuitPe => "circuit-pe",
            SimLevel::CircuitPePerturbed => "circuit-pe-perturbed",
        }
    }

    pub fn is_circuit(self) -> bool {
        self != SimLevel::IdealSpectral
    }
}

impl fmt::Display for SimLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal-spectral" => Ok(SimLevel::IdealSpectral),
            "circuit-pe" => Ok(SimLevel::CircuitPe),
            "circuit-pe-perturbed" => Ok(SimLevel::CircuitPePerturbed),
            other => Err(Error::InvalidParameter(format!(
                "unknown simulation level `{other}` (expected ideal-spectral, circuit-pe or circuit-pe-perturbed)"
            ))),
        }
    }
}

/// Condition number `kappa`, evolution time `t` and the derived phase grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqrtParams {
    pub kappa: f64,
    pub t: u64,
    /// `ceil(log2 t)`.
    pub l: usize,
    /// `2^l`.
    pub big_t: u64,
    pub sim_level: SimLevel,
    /// Operator-norm size of each modeled simulation error.
    pub perturbation: f64,
    pub perturbation_seed: u64,
    /// Hamiltonian-simulation accuracy charged by the query model.
    pub eps_a: f64,
}

impl SqrtParams {
    pub fn new(kappa: f64, t: u64, sim_level: SimLevel) -> Result<Self> {
        if !(kappa >= 1.0) || !kappa.is_finite() {
            return Err(Error::OutOfRange { what: "kappa must be at least 1", value: kappa });
        }
        if t < 6 {
            return Err(Error::OutOfRange { what: "t must be at least 6", value: t as f64 });
        }
        if t > 1 << 62 {
            return Err(Error::OutOfRange { what: "t too large", value: t as f64 });
        }
        let l = (64 - (t - 1).leading_zeros()) as usize;
        Ok(SqrtParams {
            kappa,
            t,
            l,
            big_t: 1 << l,
            sim_level,
            perturbation: 0.0,
            perturbation_seed: 0,
            eps_a: DEFAULT_EPS_A,
        })
    }

    pub fn with_perturbation(mut self, perturbation: f64, seed: u64) -> Result<Self> {
        if !(perturbation >= 0.0) {
            return Err(Error::OutOfRange { what: "perturbation must be nonnegative", value: perturbation });
        }
        self.perturbation = perturbation;
        self.perturbation_seed = seed;
        Ok(self)
    }

    pub fn with_level(mut self, sim_level: SimLevel) -> Self {
        self.sim_level = sim_level;
        self
    }

    /// Queries to the controlled block-encoding of `A` per phase-estimation
    /// pass: total evolution time `(T-1) t / (3T)` plus `log2(1/eps_A)`.
    pub fn simulation_queries(&self) -> u128 {
        let tt = self.big_t as f64;
        let time = ((tt - 1.0) * self.t as f64 / (3.0 * tt)).ceil() as u128;
        time + (1.0 / self.eps_a).log2().ceil().max(0.0) as u128
    }

    /// Preparer calls made by one application of the extraction circuit:
    /// one for the initial preparation, and two per block-encoding query in
    /// each of the forward and inverse phase estimations.
    pub fn preparer_calls(&self) -> u128 {
        1 + 4 * self.simulation_queries()
    }
}

/// `sqrt(2/T) sin(pi (tau + 1/2) / T)` for `tau < T`.
pub fn sine_state(big_t: usize) -> Result<Vec<f64>> {
    if big_t < 2 || !big_t.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(big_t));
    }
    let tt = big_t as f64;
    let s = (2.0 / tt).sqrt();
    Ok((0..big_t).map(|tau| s * (PI * (tau as f64 + 0.5) / tt).sin()).collect())
}

/// The filter `f(lambda)`: `kappa^{-1/4} lambda^{-1/4} / 2` on `[1/kappa, 1]`,
/// constant above 1, a half sine ramp on `[1/(2 kappa), 1/kappa)` and zero below.
pub fn filter_f(lambda: f64, kappa: f64) -> f64 {
    let scale = 0.5 * kappa.powf(-0.25);
    if lambda > 1.0 {
        scale
    } else if lambda >= 1.0 / kappa {
        scale * lambda.powf(-0.25)
    } else if lambda >= 0.5 / kappa {
        0.5 * (0.5 * PI * (lambda - 0.5 / kappa) / (0.5 / kappa)).sin()
    } else {
        0.0
    }
}

/// `|h(lambda)> = f |0> + sqrt(1 - f^2) |1>`.
pub fn h_vector(lambda: f64, kappa: f64) -> [f64; 2] {
    let f = filter_f(lambda, kappa);
    [f, (1.0 - f * f).max(0.0).sqrt()]
}

/// Real rotation with first column `h(lambda)`.
pub fn rotation_for(lambda: f64, kappa: f64) -> ComplexMatrix {
    let [c, s] = h_vector(lambda, kappa);
    ComplexMatrix::from_real_rows(&[&[c, -s], &[s, c]])
}

/// Eigenvalue estimate read from grid index `k`.
pub fn lambda_tilde(k: u64, params: &SqrtParams) -> f64 {
    let tt = params.big_t as f64;
    (3.0 * tt / params.t as f64) * (2.0 * PI * k as f64 / tt - 2.0 * PI / 3.0)
}

/// `R(k)` with `R(k)|0> = |h(lambda_tilde_k)>`.
pub fn rotation_gate(k: u64, params: &SqrtParams) -> Result<ComplexMatrix> {
    if k >= params.big_t {
        return Err(Error::IndexOutOfRange { index: k as usize, limit: params.big_t as usize });
    }
    Ok(rotation_for(lambda_tilde(k, params), params.kappa))
}

/// Phase offset `t lambda / (3T) + 2 pi / 3 - 2 pi k / T`.
pub fn pe_delta(lambda: f64, k: u64, params: &SqrtParams) -> f64 {
    let tt = params.big_t as f64;
    params.t as f64 / (3.0 * tt) * lambda + 2.0 * PI / 3.0 - 2.0 * PI * k as f64 / tt
}

/// `(sqrt(2)/T) sum_tau e^{i tau delta} sin(pi (tau + 1/2)/T)`.
pub fn pe_amplitude_direct(delta: f64, big_t: u64) -> C64 {
    let tt = big_t as f64;
    let mut acc = C64::new(0.0, 0.0);
    for tau in 0..big_t {
        let tau = tau as f64;
        acc += C64::from_polar((PI * (tau + 0.5) / tt).sin(), tau * delta);
    }
    acc * (2.0f64.sqrt() / tt)
}

/// Below this size of a denominator factor the closed form loses accuracy and
/// the direct sum is used instead.
const SINGULARITY_GUARD: f64 = 1e-3;

/// Closed-form amplitude, or `None` next to its removable singularities.
pub fn pe_amplitude_closed(delta: f64, big_t: u64) -> Option<C64> {
    let tt = big_t as f64;
    let h = PI / (2.0 * tt);
    let d1 = (delta / 2.0 + h).sin();
    let d2 = (delta / 2.0 - h).sin();
    if d1.abs() < SINGULARITY_GUARD || d2.abs() < SINGULARITY_GUARD {
        return None;
    }
    let lead = C64::from_polar(2.0f64.sqrt() * (tt * delta / 2.0).cos() / tt, delta * (tt - 1.0) / 2.0);
    Some(-lead * ((delta / 2.0).cos() * h.sin() / (d1 * d2)))
}

/// `alpha_{k|j}`: amplitude of grid index `k` after phase estimation of an
/// eigenvalue `lambda_j`.
pub fn pe_coefficient(lambda_j: f64, k: u64, params: &SqrtParams) -> C64 {
    let delta = pe_delta(lambda_j, k, params);
    pe_amplitude_closed(delta, params.big_t).unwrap_or_else(|| pe_amplitude_direct(delta, params.big_t))
}

/// Direct-sum evaluation of `alpha_{k|j}`.
pub fn pe_coefficient_direct(lambda_j: f64, k: u64, params: &SqrtParams) -> C64 {
    pe_amplitude_direct(pe_delta(lambda_j, k, params), params.big_t)
}

/// `3 sqrt(2) pi^3 / (T^2 delta^2)`, valid when `|delta| > 2 pi / T`.
pub fn pe_tail_bound(delta: f64, big_t: u64) -> f64 {
    let tt = big_t as f64;
    3.0 * 2.0f64.sqrt() * PI.powi(3) / (tt * tt * delta * delta)
}

/// `g(lambda) = sum_k |alpha_{k|j}|^2 f(lambda_tilde_k)`, the effective filter
/// of the imperfect phase estimation.
pub fn effective_filter(lambda: f64, params: &SqrtParams) -> f64 {
    (0..params.big_t)
        .map(|k| pe_coefficient(lambda, k, params).norm_sqr() * filter_f(lambda_tilde(k, params), params.kappa))
        .sum()
}

/// Block the extraction produces when the phase register is exact:
/// `sum_j lambda_j f(lambda_j)^2 |u_j><u_j|`.
pub fn ideal_block(eig: &HermitianEigen, kappa: f64) -> ComplexMatrix {
    eig.map(|l| {
        let f = filter_f(l, kappa);
        l * f * f
    })
}

/// Block the full circuit produces: `A g(A)^2`, with `g` the effective filter.
pub fn circuit_block(eig: &HermitianEigen, params: &SqrtParams) -> ComplexMatrix {
    eig.map(|l| {
        let g = effective_filter(l, params);
        l * g * g
    })
}

/// Result of a square-root extraction.
#[derive(Clone, Debug)]
pub struct SqrtOutput {
    /// Preparer and layout of `|varrho>`.
    pub purification: Purification,
    /// `varrho` read as a `(4 sqrt(kappa), a+l+1, measured)` encoding of `sqrt(A)`.
    pub encoding: EncodedOperator,
    pub params: SqrtParams,
    pub level: SimLevel,
    /// The encoded operator `A` read off the input purification.
    pub a: ComplexMatrix,
    pub a_eigen: HermitianEigen,
    /// Names of the segments added by the extraction.
    pub pe_segment: String,
    pub flag_segment: String,
}

impl SqrtOutput {
    pub fn state(&self) -> &[C64] {
        self.purification.state()
    }

    pub fn layout(&self) -> &RegisterLayout {
        self.purification.layout()
    }

    /// `x = || <0|_{enc} |varrho> ||^2` over every encoding segment.
    pub fn success_amplitude(&self) -> Result<f64> {
        crate::qae::exact_amplitude_vector(
            self.state(),
            self.layout(),
            &self.layout().names_with_role(SegmentRole::Encoding),
        )
    }
}

fn fresh_name(layout: &RegisterLayout, base: &str) -> String {
    if !layout.contains(base) {
        return base.to_string();
    }
    (2..).map(|i| format!("{base}{i}")).find(|n| !layout.contains(n)).expect("unbounded search")
}

/// Reads `A` off the purification and checks its spectrum lies in `[0, 1]`.
pub fn encoded_operator(p: &Purification) -> Result<(ComplexMatrix, HermitianEigen)> {
    let a = p.encoded_block()?.hermitian_part();
    let eig = eig_hermitian(&a)?;
    for &v in &eig.values {
        if !(-HERMITIAN_TOL..=1.0 + HERMITIAN_TOL).contains(&v) {
            return Err(Error::SpectrumOutOfRange { value: v });
        }
    }
    Ok((a, eig))
}

fn sqrt_target(eig: &HermitianEigen) -> ComplexMatrix {
    eig.map(|l| l.max(0.0).sqrt())
}

/// `sum_j |u_j><u_j| (x) R(lambda_j)` on `[system, flag]`.
fn ideal_rotation(eig: &HermitianEigen, kappa: f64) -> ComplexMatrix {
    let d = eig.dim();
    let blocks: Vec<Vec<ComplexMatrix>> = (0..2)
        .map(|r| {
            (0..2)
                .map(|c| {
                    eig.map(|l| {
                        let rot = rotation_for(l, kappa);
                        rot[(r, c)].re
                    })
                })
                .collect()
        })
        .collect();
    ComplexMatrix::from_fn(2 * d, 2 * d, |i, j| blocks[i % 2][j % 2][(i / 2, j / 2)])
}

fn extended_layout(p: &Purification, pe_qubits: usize) -> Result<(RegisterLayout, String, String)> {
    let mut layout = p.layout().clone();
    let pe = fresh_name(&layout, "pe");
    layout.push(Segment::new(pe.clone(), pe_qubits, SegmentRole::Encoding))?;
    let flag = fresh_name(&layout, "flag");
    layout.push(Segment::new(flag.clone(), 1, SegmentRole::Encoding))?;
    Ok((layout, pe, flag))
}

fn finish(
    preparer: Operator,
    layout: RegisterLayout,
    p: &Purification,
    params: SqrtParams,
    level: SimLevel,
    a: ComplexMatrix,
    a_eigen: HermitianEigen,
    names: (String, String),
    budget: usize,
) -> Result<SqrtOutput> {
    let purification = Purification::new(preparer, layout.clone())?.with_cost(p.cost() * params.preparer_calls());
    let target = sqrt_target(&a_eigen);
    let encoding = EncodedOperator::measured(
        Carrier::PureState(purification.state().to_vec()),
        EncodingKind::State,
        layout,
        4.0 * params.kappa.sqrt(),
        target,
        budget,
    )?;
    Ok(SqrtOutput { purification, encoding, params, level, a, a_eigen, pe_segment: names.0, flag_segment: names.1 })
}

/// The state the extraction would prepare with perfect phase estimation:
/// `(R(A) (x) I) |rho> |0>_flag`, with a zero-width phase register.
pub fn ideal_sqrt_state(p: &Purification, params: &SqrtParams, budget: usize) -> Result<SqrtOutput> {
    let (a, eig) = encoded_operator(p)?;
    let (layout, pe, flag) = extended_layout(p, 0)?;
    check_budget(layout.total_qubits(), budget)?;
    let total = layout.total_qubits();
    let prep = embed(total, &(0..p.total_qubits()).collect::<Vec<_>>(), p.preparer().clone())?;
    let sys = layout.names_with_role(SegmentRole::System);
    let mut targets = layout.positions(&sys)?;
    targets.extend(layout.positions(&[flag.as_str()])?);
    let rot = embed(total, &targets, Gate::op(ideal_rotation(&eig, params.kappa))?)?;
    let preparer = Sequence::op(vec![prep, rot])?;
    finish(preparer, layout, p, *params, SimLevel::IdealSpectral, a, eig, (pe, flag), budget)
}

fn random_unit_hermitian(d: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    let h = (&g + &g.adjoint()).scale_real(0.5);
    let n = operator_norm(&h);
    if n > 0.0 {
        h.scale_real(1.0 / n)
    } else {
        h
    }
}

/// Phase-estimation circuit `U2^dag U3^dag U4 U3 U2 U1` on
/// `[input segments, pe (l qubits), flag]`.
pub fn build_sqrt_unitary(p: &Purification, params: &SqrtParams, budget: usize) -> Result<SqrtOutput> {
    if !params.sim_level.is_circuit() {
        return ideal_sqrt_state(p, params, budget);
    }
    let (layout, pe, flag) = extended_layout(p, params.l)?;
    check_budget(layout.total_qubits(), budget)?;
    let (a, eig) = encoded_operator(p)?;
    let total = layout.total_qubits();
    let big_t = params.big_t as usize;
    let pe_pos = layout.positions(&[pe.as_str()])?;
    let flag_pos = layout.positions(&[flag.as_str()])?;
    let sys_pos = layout.positions(&layout.names_with_role(SegmentRole::System))?;

    let u1 = embed(total, &(0..p.total_qubits()).collect::<Vec<_>>(), p.preparer().clone())?;

    let psi: Vec<C64> = sine_state(big_t)?.into_iter().map(|x| C64::new(x, 0.0)).collect();
    let u2 = embed(total, &pe_pos, Reflection::preparing(&psi)?)?;

    let step = params.t as f64 / (3.0 * params.big_t as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(params.perturbation_seed);
    let mut branches: Vec<Operator> = Vec::with_capacity(big_t);
    for tau in 0..big_t {
        let tau_f = tau as f64;
        let mut u = eig.map_complex(|l| C64::from_polar(1.0, 2.0 * PI / 3.0 * tau_f + l * tau_f * step));
        if params.sim_level == SimLevel::CircuitPePerturbed && params.perturbation > 0.0 {
            let h = random_unit_hermitian(eig.dim(), &mut rng);
            u = &expm_i(&h, params.perturbation)? * &u;
        }
        branches.push(Gate::op(u)?);
    }
    let controlled = Select::op(total, &pe_pos, &sys_pos, branches)?;
    let inverse_ft = embed(total, &pe_pos, Fourier::op(params.l, true))?;
    let u3 = Sequence::op(vec![controlled, inverse_ft])?;

    let rotations = (0..params.big_t)
        .map(|k| Gate::op(rotation_gate(k, params)?))
        .collect::<Result<Vec<_>>>()?;
    let u4 = Select::op(total, &pe_pos, &flag_pos, rotations)?;

    let preparer = Sequence::op(vec![u1, u2.clone(), u3.clone(), u4, dagger(&u3), dagger(&u2)])?;
    finish(preparer, layout, p, *params, params.sim_level, a, eig, (pe, flag), budget)
}

/// The ideal state embedded in the circuit output's register, with the phase
/// register at `|0>`.
pub fn pad_ideal_to(ideal: &SqrtOutput, circuit: &SqrtOutput) -> Result<Vec<C64>> {
    if ideal.pe_segment != circuit.pe_segment || ideal.flag_segment != circuit.flag_segment {
        return Err(Error::InvalidLayout("outputs use different segment names".into()));
    }
    let small = ideal.layout().without(&[ideal.pe_segment.as_str()])?;
    crate::linalg::pad_with_zeros(ideal.state(), &small, circuit.layout())
}

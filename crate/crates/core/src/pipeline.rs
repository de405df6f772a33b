//! End-to-end fidelity estimation: `sqrt(sigma)` encoding, the state `eta`
//! encoding `sqrt(sigma) rho sqrt(sigma) / (16 kappa_sigma)`, a second square
//! root and amplitude estimation of its trace.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::block_encoding::{swap_circuit, Carrier, EncodedOperator, EncodingKind, DEFAULT_QUBIT_BUDGET};
use crate::circuit::{check_budget, embed, Operator, Sequence};
use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, operator_norm, ComplexMatrix, RegisterLayout, Segment, SegmentRole, C64,
};
use crate::qae::{qae_error_bound, qae_estimate, QaeMode, QaeParams};
use crate::sqrt::{build_sqrt_unitary, filter_f, ideal_block, SimLevel, SqrtOutput, SqrtParams};
use crate::state::{fidelity_exact, DensityOperator, OracleCost, Purification};

/// Largest `t` accepted for circuit-level phase estimation.
pub const CIRCUIT_T_CEILING: u64 = 1 << 20;
/// Largest `t` accepted when only the spectrum is simulated.
pub const IDEAL_T_CEILING: u64 = 1 << 30;

pub fn t_ceiling(level: SimLevel) -> u64 {
    if level.is_circuit() {
        CIRCUIT_T_CEILING
    } else {
        IDEAL_T_CEILING
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub kappa_sigma: f64,
    pub t_sigma: u64,
    pub kappa: f64,
    pub t: u64,
    pub qae: QaeParams,
    /// Requested level; stages that do not fit the budget run ideal-spectral.
    pub sim_level: SimLevel,
    /// Calibrated constant multiplying the analytic error bound.
    pub bound_constant: f64,
    pub qubit_budget: usize,
    /// Simulation-error size for `circuit-pe-perturbed`.
    pub perturbation: f64,
}

impl PipelineParams {
    pub fn new(kappa_sigma: f64, t_sigma: u64, kappa: f64, t: u64, qae: QaeParams, sim_level: SimLevel) -> Result<Self> {
        SqrtParams::new(kappa_sigma, t_sigma, sim_level)?;
        SqrtParams::new(kappa, t, sim_level)?;
        Ok(PipelineParams {
            kappa_sigma,
            t_sigma,
            kappa,
            t,
            qae,
            sim_level,
            bound_constant: 1.0,
            qubit_budget: DEFAULT_QUBIT_BUDGET,
            perturbation: 0.0,
        })
    }

    pub fn with_bound_constant(mut self, c: f64) -> Self {
        self.bound_constant = c;
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.qubit_budget = budget;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.qae.seed = seed;
        self
    }

    pub fn sigma_sqrt_params(&self, level: SimLevel) -> Result<SqrtParams> {
        SqrtParams::new(self.kappa_sigma, self.t_sigma, level)?.with_perturbation(self.perturbation, self.qae.seed)
    }

    pub fn eta_sqrt_params(&self, level: SimLevel) -> Result<SqrtParams> {
        SqrtParams::new(self.kappa, self.t, level)?
            .with_perturbation(self.perturbation, self.qae.seed ^ 0x9e37_79b9_7f4a_7c15)
    }

    /// `sqrt(kappa kappa_sigma) (delta + r/kappa + kappa/t)
    ///  + r sqrt(kappa_sigma^{-1/2} + kappa_sigma^{3/2}/t_sigma)`, times the
    /// bound constant, with `delta` the amplitude-estimation error at `x`.
    pub fn analytic_bound(&self, x: f64, r: usize) -> f64 {
        let r = r as f64;
        let delta = qae_error_bound(x, self.qae.m);
        let ks = self.kappa_sigma;
        let first = (self.kappa * ks).sqrt() * (delta + r / self.kappa + self.kappa / self.t as f64);
        let second = r * (ks.powf(-0.5) + ks.powf(1.5) / self.t_sigma as f64).sqrt();
        self.bound_constant * (first + second)
    }

    /// Oracle calls made by the whole algorithm.
    pub fn query_counts(&self) -> Result<OracleCost> {
        let v_sigma = OracleCost::SIGMA * self.sigma_sqrt_params(SimLevel::IdealSpectral)?.preparer_calls();
        let u_eta = v_sigma * 2 + OracleCost::RHO;
        let v_eta = u_eta * self.eta_sqrt_params(SimLevel::IdealSpectral)?.preparer_calls();
        Ok(v_eta * self.qae.preparer_calls())
    }
}

/// How a stage was actually simulated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageLevel {
    #[serde(rename = "circuit-pe")]
    CircuitPe,
    #[serde(rename = "circuit-pe-perturbed")]
    CircuitPePerturbed,
    /// Ideal filter applied on simulated state vectors.
    #[serde(rename = "ideal-spectral")]
    IdealSpectral,
    /// Ideal filter applied to operators only; no register is simulated.
    #[serde(rename = "ideal-spectral/operator")]
    IdealOperator,
}

impl StageLevel {
    fn from_sim(level: SimLevel) -> Self {
        match level {
            SimLevel::CircuitPe => StageLevel::CircuitPe,
            SimLevel::CircuitPePerturbed => StageLevel::CircuitPePerturbed,
            SimLevel::IdealSpectral => StageLevel::IdealSpectral,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StageLevel::CircuitPe => "circuit-pe",
            StageLevel::CircuitPePerturbed => "circuit-pe-perturbed",
            StageLevel::IdealSpectral => "ideal-spectral",
            StageLevel::IdealOperator => "ideal-spectral/operator",
        }
    }
}

impl fmt::Display for StageLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `W_sigma`: a unitary encoding `sqrt(sigma)` with scale `4 sqrt(kappa_sigma)`.
#[derive(Clone, Debug)]
pub struct WSigma {
    pub encoding: EncodedOperator,
    pub sqrt: SqrtOutput,
    pub level: SimLevel,
    /// Oracle calls per application of `W_sigma` (two calls to `V_sigma`).
    pub cost: OracleCost,
}

/// Register size of `W_sigma` built on a `sigma` purification.
pub fn w_sigma_qubits(sigma_prep: &Purification, l_sigma: usize) -> usize {
    let v = sigma_prep.total_qubits() + l_sigma + 1;
    let front = v - sigma_prep.garbage_qubits();
    front + v
}

/// Builds `W_sigma` at the requested level, or ideal-spectral when the
/// circuit register does not fit the budget.
pub fn build_w_sigma(sigma_prep: &Purification, params: &PipelineParams) -> Result<WSigma> {
    let l = params.sigma_sqrt_params(params.sim_level)?.l;
    let level = if params.sim_level.is_circuit() && w_sigma_qubits(sigma_prep, l) <= params.qubit_budget {
        params.sim_level
    } else {
        SimLevel::IdealSpectral
    };
    build_w_sigma_at(sigma_prep, params, level)
}

pub fn build_w_sigma_at(sigma_prep: &Purification, params: &PipelineParams, level: SimLevel) -> Result<WSigma> {
    let sp = params.sigma_sqrt_params(level)?;
    let sqrt = build_sqrt_unitary(sigma_prep, &sp, params.qubit_budget)?;
    let v = &sqrt.purification;
    let (op, layout) = swap_circuit(v)?;
    check_budget(layout.total_qubits(), params.qubit_budget)?;
    let front_enc = v.layout().names_with_role(SegmentRole::Encoding);
    let layout = layout.with_role(&front_enc, SegmentRole::Encoding)?;
    let target = sqrt.a_eigen.map(|l| l.max(0.0).sqrt());
    let encoding = EncodedOperator::measured(
        Carrier::Circuit(op),
        EncodingKind::Unitary,
        layout,
        4.0 * params.kappa_sigma.sqrt(),
        target,
        params.qubit_budget,
    )?;
    let cost = v.cost() * 2;
    Ok(WSigma { encoding, sqrt, level, cost })
}

/// `U_eta = (W_sigma (x) I) (O_rho (x) I)` and its encoded block.
#[derive(Clone, Debug)]
pub struct EtaStage {
    /// Layout `[system, rho.* (garbage), sigma.* (encoding)]`.
    pub purification: Purification,
    /// `<0|_a eta |0>_a`.
    pub block: ComplexMatrix,
}

impl EtaStage {
    /// The full `eta = tr_rho(|eta><eta|)`; its size grows with the encoding
    /// register, so the budget applies.
    pub fn density(&self, budget: usize) -> Result<DensityOperator> {
        let kept = self.purification.traced_layout().total_qubits();
        check_budget(2 * kept, budget.saturating_mul(2).min(2 * 12))?;
        DensityOperator::new(self.purification.density_matrix()?.hermitian_part())
    }
}

fn place(
    source: &RegisterLayout,
    system_positions: &[usize],
    renamed: impl Fn(&Segment) -> String,
    target: &RegisterLayout,
) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    let mut cursor = 0;
    for s in source.segments() {
        if s.role == SegmentRole::System {
            out.extend_from_slice(&system_positions[cursor..cursor + s.qubits]);
            cursor += s.qubits;
        } else {
            out.extend(target.positions(&[renamed(s).as_str()])?);
        }
    }
    Ok(out)
}

pub fn build_eta(rho_prep: &Purification, w: &WSigma, budget: usize) -> Result<EtaStage> {
    let n = rho_prep.system_qubits();
    let w_layout = w.encoding.layout();
    if w_layout.qubits_with_role(SegmentRole::System) != n {
        return Err(Error::DimensionMismatch(format!(
            "rho has {n} system qubits, W_sigma acts on {}",
            w_layout.qubits_with_role(SegmentRole::System)
        )));
    }
    let rho_name = |s: &Segment| format!("rho.{}", s.name);
    let sigma_name = |s: &Segment| format!("sigma.{}", s.name);
    let mut segs = vec![Segment::new("system", n, SegmentRole::System)];
    for s in rho_prep.layout().segments().iter().filter(|s| s.role != SegmentRole::System) {
        segs.push(Segment::new(rho_name(s), s.qubits, SegmentRole::Garbage));
    }
    for s in w_layout.segments().iter().filter(|s| s.role != SegmentRole::System) {
        segs.push(Segment::new(sigma_name(s), s.qubits, SegmentRole::Encoding));
    }
    let layout = RegisterLayout::new(segs)?;
    check_budget(layout.total_qubits(), budget)?;
    let total = layout.total_qubits();
    let sys_pos: Vec<usize> = (0..n).collect();
    let rho_pos = place(rho_prep.layout(), &sys_pos, rho_name, &layout)?;
    let w_pos = place(w_layout, &sys_pos, sigma_name, &layout)?;
    let w_op: Operator = w.encoding.operator().expect("W_sigma is a circuit").clone();
    let u = Sequence::op(vec![embed(total, &rho_pos, rho_prep.preparer().clone())?, embed(total, &w_pos, w_op)?])?;
    let purification = Purification::new(u, layout)?.with_cost(w.cost + rho_prep.cost());
    let block = purification.encoded_block()?.hermitian_part();
    Ok(EtaStage { purification, block })
}

/// `|| <0|eta|0> - sqrt(sigma) rho sqrt(sigma) / (16 kappa_sigma) ||`.
pub fn eta_block_deviation(block: &ComplexMatrix, rho: &DensityOperator, sigma: &DensityOperator, kappa_sigma: f64) -> f64 {
    let s = sigma.sqrt();
    let target = (&(&s * rho.matrix()) * &s).scale_real(1.0 / (16.0 * kappa_sigma));
    operator_norm(&(block - &target))
}

/// Flat record of one estimation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub estimate: f64,
    pub exact_fidelity: f64,
    pub abs_error: f64,
    /// Bound with `delta` evaluated at the measured amplitude `x`.
    pub analytic_bound: f64,
    /// Same bound with `delta` evaluated at the estimate `x_tilde`.
    pub analytic_bound_at_estimate: f64,
    pub x_tilde: f64,
    pub x: f64,
    pub rank_r: usize,
    pub queries_rho: u128,
    pub queries_sigma: u128,
    pub kappa_sigma: f64,
    pub t_sigma: u64,
    pub kappa: f64,
    pub t: u64,
    pub qae_m: u64,
    pub qae_mode: QaeMode,
    pub sim_level: SimLevel,
    pub sigma_stage_level: StageLevel,
    pub eta_stage_level: StageLevel,
    pub bound_constant: f64,
    pub qubit_budget: usize,
    /// `|| 4 sqrt(kappa_sigma) <0|W_sigma|0> - sqrt(sigma) ||`.
    pub sigma_be_error: f64,
    /// `|| <0|eta|0> - sqrt(sigma) rho sqrt(sigma) / (16 kappa_sigma) ||`.
    pub eta_block_error: f64,
    pub roles_swapped: bool,
    pub seed: u64,
}

impl EstimationReport {
    pub fn within_bound(&self) -> bool {
        self.abs_error <= self.analytic_bound
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn canonical_cmp(a: &DensityOperator, b: &DensityOperator) -> Ordering {
    for (x, y) in a.matrix().as_slice().iter().zip(b.matrix().as_slice()) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Whether `(rho, sigma)` should be exchanged so that `rho` has the lower rank;
/// equal ranks are ordered canonically so the computation is symmetric.
pub fn should_swap(rho: &DensityOperator, sigma: &DensityOperator) -> bool {
    match rho.rank().cmp(&sigma.rank()) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => canonical_cmp(rho, sigma) == Ordering::Greater,
    }
}

/// Ideal-spectral pipeline on operators alone. Returns `(x, <0|eta|0>, sigma block)`.
pub fn operator_pipeline(
    rho: &ComplexMatrix,
    sigma: &DensityOperator,
    kappa_sigma: f64,
    kappa: f64,
) -> Result<(f64, ComplexMatrix, ComplexMatrix)> {
    let b = ideal_block(sigma.eigen(), kappa_sigma);
    let eta_block = (&(&b * rho) * &b).hermitian_part();
    let x = ideal_amplitude(&eta_block, kappa)?;
    Ok((x, eta_block, b))
}

/// `tr(A f(A)^2)`: the success amplitude of an ideal extraction on `A`.
pub fn ideal_amplitude(a: &ComplexMatrix, kappa: f64) -> Result<f64> {
    let eig = eig_hermitian(a)?;
    Ok(eig
        .values
        .iter()
        .map(|&l| {
            let l = l.max(0.0);
            let f = filter_f(l, kappa);
            l * f * f
        })
        .sum())
}

/// Which level each stage will run at for these register sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StagePlan {
    pub sigma: StageLevel,
    pub eta: StageLevel,
}

pub fn plan_stages(rho_prep: &Purification, sigma_prep: &Purification, params: &PipelineParams) -> Result<StagePlan> {
    let budget = params.qubit_budget;
    let l_sigma = params.sigma_sqrt_params(params.sim_level)?.l;
    let l = params.eta_sqrt_params(params.sim_level)?.l;
    let eta_qubits = |ls: usize| w_sigma_qubits(sigma_prep, ls) + rho_prep.garbage_qubits();
    let sigma = if params.sim_level.is_circuit() && eta_qubits(l_sigma) <= budget {
        StageLevel::from_sim(params.sim_level)
    } else if eta_qubits(0) <= budget {
        StageLevel::IdealSpectral
    } else {
        StageLevel::IdealOperator
    };
    let q_eta = match sigma {
        StageLevel::IdealOperator => None,
        StageLevel::IdealSpectral => Some(eta_qubits(0)),
        _ => Some(eta_qubits(l_sigma)),
    };
    let eta = match q_eta {
        Some(q) if params.sim_level.is_circuit() && q + l < budget => StageLevel::from_sim(params.sim_level),
        Some(q) if q < budget => StageLevel::IdealSpectral,
        _ => StageLevel::IdealOperator,
    };
    Ok(StagePlan { sigma, eta })
}

fn to_sim(level: StageLevel) -> SimLevel {
    match level {
        StageLevel::CircuitPe => SimLevel::CircuitPe,
        StageLevel::CircuitPePerturbed => SimLevel::CircuitPePerturbed,
        _ => SimLevel::IdealSpectral,
    }
}

/// Runs the estimator on two purifications and compares with the exact fidelity.
pub fn estimate_fidelity(
    rho_prep: &Purification,
    sigma_prep: &Purification,
    params: &PipelineParams,
) -> Result<EstimationReport> {
    let rho_in = DensityOperator::new(rho_prep.density_matrix()?.hermitian_part())?;
    let sigma_in = DensityOperator::new(sigma_prep.density_matrix()?.hermitian_part())?;
    if rho_in.qubits() != sigma_in.qubits() {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit rho and {}-qubit sigma",
            rho_in.qubits(),
            sigma_in.qubits()
        )));
    }
    let swapped = should_swap(&rho_in, &sigma_in);
    let (rho_prep, sigma_prep, rho, sigma) = if swapped {
        (sigma_prep, rho_prep, sigma_in, rho_in)
    } else {
        (rho_prep, sigma_prep, rho_in, sigma_in)
    };
    let rho_prep = rho_prep.clone().with_cost(OracleCost::RHO);
    let sigma_prep = sigma_prep.clone().with_cost(OracleCost::SIGMA);
    let plan = plan_stages(&rho_prep, &sigma_prep, params)?;
    let budget = params.qubit_budget;

    let (x, eta_block, sigma_be_error, queries) = match plan.sigma {
        StageLevel::IdealOperator => {
            let (x, eta_block, b) = operator_pipeline(rho.matrix(), &sigma, params.kappa_sigma, params.kappa)?;
            let err = operator_norm(&(&b.scale_real(4.0 * params.kappa_sigma.sqrt()) - &sigma.sqrt()));
            (x, eta_block, err, params.query_counts()?)
        }
        sigma_level => {
            let w = build_w_sigma_at(&sigma_prep, params, to_sim(sigma_level))?;
            let eta = build_eta(&rho_prep, &w, budget)?;
            match plan.eta {
                StageLevel::IdealOperator => {
                    let x = ideal_amplitude(&eta.block, params.kappa)?;
                    (x, eta.block, w.encoding.error(), params.query_counts()?)
                }
                eta_level => {
                    let sp = params.eta_sqrt_params(to_sim(eta_level))?;
                    let out = build_sqrt_unitary(&eta.purification, &sp, budget)?;
                    let x = out.success_amplitude()?;
                    let per_call = out.purification.cost();
                    (x, eta.block, w.encoding.error(), per_call * params.qae.preparer_calls())
                }
            }
        }
    };

    let x = x.clamp(0.0, 1.0);
    let x_tilde = qae_estimate(x, &params.qae)?;
    let scale = 16.0 * (params.kappa * params.kappa_sigma).sqrt();
    let estimate = scale * x_tilde;
    let exact = fidelity_exact(&rho, &sigma)?;
    let r = rho.rank();
    for (name, v) in [("x", x), ("estimate", estimate), ("exact_fidelity", exact)] {
        if !v.is_finite() {
            return Err(Error::NonFinite(name.into()));
        }
    }
    Ok(EstimationReport {
        estimate,
        exact_fidelity: exact,
        abs_error: (estimate - exact).abs(),
        analytic_bound: params.analytic_bound(x, r),
        analytic_bound_at_estimate: params.analytic_bound(x_tilde, r),
        x_tilde,
        x,
        rank_r: r,
        queries_rho: queries.rho,
        queries_sigma: queries.sigma,
        kappa_sigma: params.kappa_sigma,
        t_sigma: params.t_sigma,
        kappa: params.kappa,
        t: params.t,
        qae_m: params.qae.m,
        qae_mode: params.qae.mode,
        sim_level: params.sim_level,
        sigma_stage_level: plan.sigma,
        eta_stage_level: plan.eta,
        bound_constant: params.bound_constant,
        qubit_budget: budget,
        sigma_be_error,
        eta_block_error: eta_block_deviation(&eta_block, &rho, &sigma, params.kappa_sigma),
        roles_swapped: swapped,
        seed: params.qae.seed,
    })
}

/// How `select_params` chooses parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectMode {
    /// Literal asymptotic settings with unit constants.
    Paper,
    /// Geometric search against measured stage errors.
    Practical,
}

impl FromStr for SelectMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(SelectMode::Paper),
            "practical" => Ok(SelectMode::Practical),
            other => Err(Error::InvalidParameter(format!("unknown mode `{other}` (expected paper or practical)"))),
        }
    }
}

fn ceil_u64(x: f64, what: &str, ceiling: u64) -> Result<u64> {
    if !x.is_finite() || x > ceiling as f64 {
        return Err(Error::InfeasibleParams(format!("{what} = {x:.3e} exceeds the ceiling {ceiling}")));
    }
    Ok((x - 1e-9).ceil().max(6.0) as u64)
}

/// Parameters for rank `r` and target accuracy `eps`.
///
/// Paper mode: `kappa_sigma = r^4/eps^4`, `t_sigma = r^8/eps^8`,
/// `kappa = r^6/eps^6`, `t = r^11/eps^12`, `M = r^2.5/eps^3.5` rounded up to a
/// power of two. Practical mode: see [`select_practical`].
pub fn select_params(r: usize, eps: f64, mode: SelectMode, level: SimLevel) -> Result<PipelineParams> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange { what: "eps must lie in (0, 1)", value: eps });
    }
    if r == 0 {
        return Err(Error::InvalidParameter("rank must be at least 1".into()));
    }
    let ceiling = t_ceiling(level);
    match mode {
        SelectMode::Paper => {
            let rf = r as f64;
            let kappa_sigma = rf.powi(4) / eps.powi(4);
            let t_sigma = ceil_u64(rf.powi(8) / eps.powi(8), "t_sigma", ceiling)?;
            let kappa = rf.powi(6) / eps.powi(6);
            let t = ceil_u64(rf.powi(11) / eps.powi(12), "t", ceiling)?;
            let m = (rf.powf(2.5) / eps.powf(3.5) - 1e-9).ceil().max(2.0) as u64;
            let qae = QaeParams::new(m.next_power_of_two(), QaeMode::Exact, 0)?;
            PipelineParams::new(kappa_sigma, t_sigma, kappa, t, qae, level)
        }
        SelectMode::Practical => select_practical(r, eps, level),
    }
}

/// Probe pairs for rank `r` on `d >= r + 1` dimensions: `(I_r/r, I_r/r)`,
/// `(|0><0|, I_r/r)`, and `(I_r/r, lambda I_r + (1 - r lambda)|r><r|)` for
/// `lambda` log-spaced in `[1e-8, 1/r]`. The last family puts the spectrum
/// of `sqrt(sigma) rho sqrt(sigma)` at every scale, so each filter cutoff is
/// crossed by some probe.
fn probes(r: usize) -> Result<Vec<(DensityOperator, DensityOperator)>> {
    let d = (r + 1).next_power_of_two();
    let qubits = d.trailing_zeros() as usize;
    let uniform = |w: f64, extra: f64| {
        let mut diag = vec![0.0; d];
        for v in diag.iter_mut().take(r) {
            *v = w;
        }
        diag[r] = extra;
        DensityOperator::new(ComplexMatrix::from_real_diag(&diag))
    };
    let mixed = uniform(1.0 / r as f64, 0.0)?;
    let mut out = vec![(mixed.clone(), mixed.clone()), (DensityOperator::basis(qubits, 0)?, mixed.clone())];
    let steps = 48;
    for i in 0..=steps {
        let lambda = (1e-8f64).powf(1.0 - i as f64 / steps as f64) / r as f64;
        out.push((mixed.clone(), uniform(lambda, (1.0 - r as f64 * lambda).max(0.0))?));
    }
    Ok(out)
}

/// Stage errors of the ideal pipeline at the given parameters, maximised over
/// the probe pairs: `(sigma stage, eta stage, amplitude estimation)`.
pub fn stage_errors(r: usize, kappa_sigma: f64, kappa: f64, m: u64) -> Result<(f64, f64, f64)> {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for (rho, sigma) in probes(r)? {
        let f = fidelity_exact(&rho, &sigma)?;
        let (x, eta_block, _) = operator_pipeline(rho.matrix(), &sigma, kappa_sigma, kappa)?;
        let tr_sqrt_eta = crate::linalg::trace_sqrt_clamped(&eta_block)?;
        let e_sigma = (4.0 * kappa_sigma.sqrt() * tr_sqrt_eta - f).abs();
        let scale = 16.0 * (kappa * kappa_sigma).sqrt();
        let e_eta = scale * (x - tr_sqrt_eta / (4.0 * kappa.sqrt())).abs();
        let e_qae = scale * qae_error_bound(x, m);
        worst = (worst.0.max(e_sigma), worst.1.max(e_eta), worst.2.max(e_qae));
    }
    Ok(worst)
}

/// Geometric search: grow `kappa_sigma` by 4 until the sigma-stage error is at
/// most `eps/3`, then `kappa` (starting at `16 kappa_sigma`) by 4 until the
/// eta-stage error is, then `M` by 2 until the amplitude-estimation term is.
/// Then `t_sigma` is the power of two at or above `max(32 kappa_sigma,
/// kappa_sigma^2)` and `t` the one at or above `max(32 kappa,
/// 3 kappa sqrt(kappa kappa_sigma) / eps)`, which keeps the `t` terms of the
/// analytic bound no larger than the others. Both are capped at the ceiling,
/// and the `kappa` searches stop rather than exceed it.
pub fn select_practical(r: usize, eps: f64, level: SimLevel) -> Result<PipelineParams> {
    let ceiling = t_ceiling(level);
    let target = eps / 3.0;
    let t_for = |k: f64| ((32.0 * k).ceil() as u64).next_power_of_two().clamp(8, ceiling);
    let fits = |k: f64| 32.0 * k <= ceiling as f64;

    let mut kappa_sigma = 4.0;
    while stage_errors(r, kappa_sigma, 16.0 * kappa_sigma, 1 << 20)?.0 > target && fits(4.0 * kappa_sigma) {
        kappa_sigma *= 4.0;
    }
    let mut kappa = 16.0 * kappa_sigma;
    while stage_errors(r, kappa_sigma, kappa, 1 << 20)?.1 > target && fits(4.0 * kappa) {
        kappa *= 4.0;
    }
    let mut m = 16u64;
    while stage_errors(r, kappa_sigma, kappa, m)?.2 > target && m < 1 << 20 {
        m *= 2;
    }
    let qae = QaeParams::new(m, QaeMode::Exact, 0)?;
    let t_sigma = t_for(kappa_sigma.max(kappa_sigma * kappa_sigma / 32.0));
    let t = t_for(kappa.max(3.0 * kappa * (kappa * kappa_sigma).sqrt() / eps / 32.0));
    PipelineParams::new(kappa_sigma, t_sigma, kappa, t, qae, level)
}

/// Result of comparing `tr sqrt` of two PSD operators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylCheck {
    pub difference: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `|tr sqrt(eta_block) - tr sqrt(target)|` against `r sqrt(3 ||eta_block - target||)`.
pub fn weyl_trace_bound_check(eta_block: &ComplexMatrix, target: &ComplexMatrix, r: usize) -> Result<WeylCheck> {
    if eta_block.rows() != target.rows() || eta_block.cols() != target.cols() {
        return Err(Error::DimensionMismatch("operators of different size".into()));
    }
    let a = crate::linalg::trace_sqrt_clamped(&eta_block.hermitian_part())?;
    let b = crate::linalg::trace_sqrt_clamped(&target.hermitian_part())?;
    let j = operator_norm(&(eta_block - target));
    let difference = (a - b).abs();
    let bound = r as f64 * (3.0 * j).sqrt();
    Ok(WeylCheck { difference, bound, holds: difference <= bound + 1e-12 })
}

/// Complex-valued helper used by tests: `|| a - b ||` for vectors.
pub fn state_distance(a: &[C64], b: &[C64]) -> f64 {
    crate::linalg::vector_distance(a, b)
}

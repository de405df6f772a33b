//! Density operators, purifications and the exact fidelity oracle.

use std::fmt;
use std::ops::{Add, Mul};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::circuit::{apply_to_zero, Gate, Operator};
use crate::error::{Error, Result};
use crate::linalg::{
    complete_unitary, eig_hermitian, inner, project_zero_vector, qubits_for_dim, reduced_density, trace_norm,
    vector_distance, vector_norm, ComplexMatrix, HermitianEigen, RegisterLayout, Segment,
    SegmentRole, C64, HERMITIAN_TOL, ZERO,
};

/// Eigenvalues above this count towards the numerical rank.
pub const RANK_TOL: f64 = 1e-9;
/// Eigenvalues at or below this are rounding noise of an exact zero.
pub const NULL_EIGENVALUE: f64 = 1e-14;

/// Smallest normalised nonzero eigenvalue `random_density` will emit, so that
/// the requested rank survives the rank threshold with room to spare.
const MIN_RANDOM_EIGENVALUE: f64 = 1e-6;

/// Hermitian, positive semidefinite, unit-trace matrix with its spectrum cached.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "DensityRecord", into = "DensityRecord")]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    qubits: usize,
    rank: usize,
    eigen: HermitianEigen,
}

/// Serialized form: dimension and row-major `[re, im]` entries.
#[derive(Serialize, Deserialize)]
struct DensityRecord {
    dimension: usize,
    entries: Vec<[f64; 2]>,
}

impl TryFrom<DensityRecord> for DensityOperator {
    type Error = Error;

    fn try_from(r: DensityRecord) -> Result<Self> {
        let data = r.entries.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        DensityOperator::new(ComplexMatrix::from_vec(r.dimension, r.dimension, data)?)
    }
}

impl From<DensityOperator> for DensityRecord {
    fn from(d: DensityOperator) -> Self {
        DensityRecord {
            dimension: d.matrix.rows(),
            entries: d.matrix.as_slice().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl fmt::Debug for DensityOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityOperator")
            .field("qubits", &self.qubits)
            .field("rank", &self.rank)
            .field("matrix", &self.matrix)
            .finish()
    }
}

impl PartialEq for DensityOperator {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl DensityOperator {
    /// Validates Hermiticity, positivity and unit trace (all at 1e-9).
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!("density operator must be square, got {}x{}", matrix.rows(), matrix.cols())));
        }
        let qubits = qubits_for_dim(matrix.rows())?;
        let eigen = eig_hermitian(&matrix)?;
        if let Some(&lowest) = eigen.values.last() {
            if lowest < -HERMITIAN_TOL {
                return Err(Error::NegativeEigenvalue { value: lowest });
            }
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::OutOfRange { what: "trace of a density operator", value: tr.re });
        }
        let rank = eigen.rank_above(RANK_TOL);
        Ok(DensityOperator { matrix, qubits, rank, eigen })
    }

    /// `|psi><psi|` for a unit vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let n = vector_norm(psi);
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("pure state must be normalised (norm {n})")));
        }
        Self::new(ComplexMatrix::outer(psi).hermitian_part())
    }

    /// `I / 2^qubits`.
    pub fn maximally_mixed(qubits: usize) -> Self {
        let d = 1usize << qubits;
        Self::new(ComplexMatrix::identity(d).scale_real(1.0 / d as f64)).expect("maximally mixed state is valid")
    }

    /// Computational basis state `|index><index|`.
    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        let d = 1usize << qubits;
        if index >= d {
            return Err(Error::IndexOutOfRange { index, limit: d });
        }
        Self::pure(&crate::linalg::basis_vector(d, index))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }

    /// `sqrt(rho)` from the cached spectrum, with eigenvalues at rounding
    /// level treated as zero.
    pub fn sqrt(&self) -> ComplexMatrix {
        self.eigen.map(|l| if l > NULL_EIGENVALUE { l.sqrt() } else { 0.0 })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Number of calls to the two state-preparation oracles made by one
/// application of a circuit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCost {
    pub rho: u128,
    pub sigma: u128,
}

impl OracleCost {
    pub const RHO: OracleCost = OracleCost { rho: 1, sigma: 0 };
    pub const SIGMA: OracleCost = OracleCost { rho: 0, sigma: 1 };
}

impl Add for OracleCost {
    type Output = OracleCost;

    fn add(self, o: OracleCost) -> OracleCost {
        OracleCost { rho: self.rho + o.rho, sigma: self.sigma + o.sigma }
    }
}

impl Mul<u128> for OracleCost {
    type Output = OracleCost;

    fn mul(self, k: u128) -> OracleCost {
        OracleCost { rho: self.rho * k, sigma: self.sigma * k }
    }
}

/// A unitary preparer together with the roles of its qubits. Tracing the
/// garbage segments of `preparer |0>` gives the prepared density operator;
/// projecting its encoding segments onto `|0>` gives the encoded block.
#[derive(Clone)]
pub struct Purification {
    preparer: Operator,
    layout: RegisterLayout,
    state: Vec<C64>,
    cost: OracleCost,
}

impl fmt::Debug for Purification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Purification")
            .field("layout", &self.layout)
            .field("preparer", &self.preparer)
            .field("cost", &self.cost)
            .finish()
    }
}

impl Purification {
    pub fn new(preparer: Operator, layout: RegisterLayout) -> Result<Self> {
        if preparer.qubits() != layout.total_qubits() {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit preparer for a {}-qubit layout",
                preparer.qubits(),
                layout.total_qubits()
            )));
        }
        let state = apply_to_zero(preparer.as_ref());
        Ok(Purification { preparer, layout, state, cost: OracleCost::default() })
    }

    /// Same purification with a different per-application oracle cost.
    pub fn with_cost(mut self, cost: OracleCost) -> Self {
        self.cost = cost;
        self
    }

    pub fn with_layout(mut self, layout: RegisterLayout) -> Result<Self> {
        if layout.total_qubits() != self.layout.total_qubits() {
            return Err(Error::DimensionMismatch("relabelled layout changes the register size".into()));
        }
        self.layout = layout;
        Ok(self)
    }

    pub fn preparer(&self) -> &Operator {
        &self.preparer
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn state(&self) -> &[C64] {
        &self.state
    }

    pub fn cost(&self) -> OracleCost {
        self.cost
    }

    pub fn total_qubits(&self) -> usize {
        self.layout.total_qubits()
    }

    /// Names of the segments that survive the partial trace.
    pub fn kept_names(&self) -> Vec<&str> {
        self.layout
            .segments()
            .iter()
            .filter(|s| s.role != SegmentRole::Garbage)
            .map(|s| s.name.as_str())
            .collect()
    }

    /// Layout of the traced state (garbage removed).
    pub fn traced_layout(&self) -> RegisterLayout {
        self.layout.restrict(&self.kept_names()).expect("kept names come from the layout")
    }

    /// The prepared density matrix on the system and encoding segments.
    pub fn density_matrix(&self) -> Result<ComplexMatrix> {
        reduced_density(&self.state, &self.layout, &self.kept_names())
    }

    /// `<0|_enc tr_garbage(|psi><psi|) |0>_enc`, computed without forming the
    /// full reduced density operator.
    pub fn encoded_block(&self) -> Result<ComplexMatrix> {
        let enc = self.layout.names_with_role(SegmentRole::Encoding);
        let v = project_zero_vector(&self.state, &self.layout, &enc)?;
        let rest = self.layout.without(&enc)?;
        reduced_density(&v, &rest, &rest.names_with_role(SegmentRole::System))
    }

    pub fn system_qubits(&self) -> usize {
        self.layout.qubits_with_role(SegmentRole::System)
    }

    pub fn encoding_qubits(&self) -> usize {
        self.layout.qubits_with_role(SegmentRole::Encoding)
    }

    pub fn garbage_qubits(&self) -> usize {
        self.layout.qubits_with_role(SegmentRole::Garbage)
    }

    /// Serialized form: layout plus state vector. The preparer is rebuilt from
    /// the state on load.
    pub fn to_json(&self) -> Result<String> {
        let rec = PurificationRecord {
            layout: self.layout.clone(),
            state: self.state.iter().map(|z| [z.re, z.im]).collect(),
        };
        Ok(serde_json::to_string_pretty(&rec)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: PurificationRecord = serde_json::from_str(s)?;
        let state: Vec<C64> = rec.state.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        if state.len() != rec.layout.dim() {
            return Err(Error::DimensionMismatch("state length does not match layout".into()));
        }
        Purification::new(Gate::op(complete_unitary(&state)?)?, rec.layout)
    }
}

#[derive(Serialize, Deserialize)]
struct PurificationRecord {
    layout: RegisterLayout,
    state: Vec<[f64; 2]>,
}

fn gaussian_unitary(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    // Gram-Schmidt on the columns of a complex Gaussian matrix
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<C64> = (0..d)
            .map(|_| C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
            .collect();
        for _ in 0..2 {
            for c in &cols {
                let p = inner(c, &v);
                for (x, &y) in v.iter_mut().zip(c) {
                    *x -= p * y;
                }
            }
        }
        let n = vector_norm(&v);
        if n > 1e-8 {
            cols.push(v.iter().map(|z| z / n).collect());
        }
    }
    let mut u = ComplexMatrix::zeros(d, d);
    for (j, c) in cols.iter().enumerate() {
        u.set_column(j, c);
    }
    u
}

/// Random `qubits`-qubit density operator of numerical rank `rank`,
/// deterministic in `seed`.
pub fn random_density(qubits: usize, rank: usize, seed: u64) -> Result<DensityOperator> {
    let d = 1usize << qubits;
    if rank < 1 || rank > d {
        return Err(Error::RankOutOfRange { qubits, rank });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = gaussian_unitary(&mut rng, d);
    let spectrum = loop {
        let w: Vec<f64> = (0..rank).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / total).collect();
        if w.iter().all(|&x| x >= MIN_RANDOM_EIGENVALUE) {
            break w;
        }
    };
    let mut m = ComplexMatrix::zeros(d, d);
    for (j, &l) in spectrum.iter().enumerate() {
        let c = u.column(j);
        for a in 0..d {
            let x = c[a] * l;
            for b in 0..d {
                m[(a, b)] += x * c[b].conj();
            }
        }
    }
    DensityOperator::new(m.hermitian_part())
}

/// Schmidt-form purification `sum_j sqrt(lambda_j) |u_j>|j>` on
/// `[system, ancilla]`, with the preparer completed from its first column.
pub fn purify(rho: &DensityOperator, ancilla_qubits: usize) -> Result<Purification> {
    let rank = rho.rank();
    if ancilla_qubits >= usize::BITS as usize || rank > 1usize << ancilla_qubits {
        return Err(Error::InsufficientAncilla { ancilla: ancilla_qubits, rank });
    }
    let d = rho.dim();
    let da = 1usize << ancilla_qubits;
    let eig = rho.eigen();
    let mut state = vec![ZERO; d * da];
    for j in 0..rank {
        let w = eig.values[j].max(0.0).sqrt();
        for (i, u) in eig.vectors.column(j).iter().enumerate() {
            state[i * da + j] = u * w;
        }
    }
    let norm = vector_norm(&state);
    for z in state.iter_mut() {
        *z /= norm;
    }
    let layout = RegisterLayout::new(vec![
        Segment::new("system", rho.qubits(), SegmentRole::System),
        Segment::new("ancilla", ancilla_qubits, SegmentRole::Garbage),
    ])?;
    Purification::new(Gate::op(complete_unitary(&state)?)?, layout)
}

/// Smallest ancilla count that can purify `rho`.
pub fn min_ancilla(rho: &DensityOperator) -> usize {
    rho.rank().next_power_of_two().trailing_zeros() as usize
}

fn same_size(rho: &DensityOperator, sigma: &DensityOperator) -> Result<()> {
    if rho.qubits() != sigma.qubits() {
        return Err(Error::DimensionMismatch(format!("{}-qubit and {}-qubit states", rho.qubits(), sigma.qubits())));
    }
    Ok(())
}

/// `tr sqrt(sqrt(sigma) rho sqrt(sigma))`.
pub fn fidelity_exact(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_size(rho, sigma)?;
    // |sqrt(rho) sqrt(sigma)| = sqrt(sqrt(sigma) rho sqrt(sigma))
    Ok(trace_norm(&(&rho.sqrt() * &sigma.sqrt())))
}

/// `1/2 tr |rho - sigma|`.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_size(rho, sigma)?;
    Ok(0.5 * trace_norm(&(rho.matrix() - sigma.matrix())))
}

/// `|| |a> - |b> ||` between two purified states on equal-size registers.
pub fn purification_distance(a: &Purification, b: &Purification) -> Result<f64> {
    if a.state().len() != b.state().len() {
        return Err(Error::DimensionMismatch("purifications on different register sizes".into()));
    }
    Ok(vector_distance(a.state(), b.state()))
}

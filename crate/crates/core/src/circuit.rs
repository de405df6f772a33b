//! State-vector simulation of register operators.
//!
//! Operators act in place on amplitude vectors so that nested constructions
//! (a preparer inside a block-encoding inside another preparer) never need a
//! dense unitary of the full register.

use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::{basis_vector, index_offsets, ComplexMatrix, C64, ZERO};

/// Unitary acting on a fixed number of qubits.
pub trait RegisterOp: Send + Sync + fmt::Debug {
    fn qubits(&self) -> usize;
    fn apply(&self, state: &mut [C64]);
    fn apply_adjoint(&self, state: &mut [C64]);

    fn dim(&self) -> usize {
        1 << self.qubits()
    }
}

pub type Operator = Arc<dyn RegisterOp>;

/// Fails with `RegisterTooLarge` when `qubits` exceeds `budget`.
pub fn check_budget(qubits: usize, budget: usize) -> Result<()> {
    if qubits > budget {
        return Err(Error::RegisterTooLarge { qubits, budget });
    }
    Ok(())
}

/// A dense unitary on its whole register.
pub struct Gate {
    matrix: ComplexMatrix,
    qubits: usize,
}

impl Gate {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let qubits = crate::linalg::qubits_for_dim(matrix.rows())?;
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!("gate must be square, got {}x{}", matrix.rows(), matrix.cols())));
        }
        Ok(Gate { matrix, qubits })
    }

    pub fn op(matrix: ComplexMatrix) -> Result<Operator> {
        Ok(Arc::new(Self::new(matrix)?))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

impl fmt::Debug for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gate({} qubits)", self.qubits)
    }
}

impl RegisterOp for Gate {
    fn qubits(&self) -> usize {
        self.qubits
    }

    fn apply(&self, state: &mut [C64]) {
        let out = self.matrix.mat_vec(state).expect("gate dimension checked at construction");
        state.copy_from_slice(&out);
    }

    fn apply_adjoint(&self, state: &mut [C64]) {
        let n = self.matrix.rows();
        let mut out = vec![ZERO; n];
        for i in 0..n {
            let a = state[i];
            if a == ZERO {
                continue;
            }
            for (o, m) in out.iter_mut().zip(self.matrix.row(i)) {
                *o += m.conj() * a;
            }
        }
        state.copy_from_slice(&out);
    }
}

/// `sum_c |c><c|_control (x) branches[c]` with the branches acting on `targets`.
/// With no control qubits this is a single operator embedded at arbitrary
/// qubit positions of a larger register.
pub struct Select {
    total: usize,
    control_offsets: Vec<usize>,
    target_offsets: Vec<usize>,
    rest_offsets: Vec<usize>,
    branches: Vec<Operator>,
}

impl Select {
    /// Positions count from the most significant qubit; `branches.len()` must
    /// be `2^controls.len()` and each branch must act on `targets.len()` qubits.
    pub fn new(total: usize, controls: &[usize], targets: &[usize], branches: Vec<Operator>) -> Result<Self> {
        let mut used = vec![false; total];
        for &p in controls.iter().chain(targets) {
            if p >= total || used[p] {
                return Err(Error::InvalidLayout(format!("qubit position {p} repeated or outside a {total}-qubit register")));
            }
            used[p] = true;
        }
        if branches.len() != 1 << controls.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} branches for {} control qubits",
                branches.len(),
                controls.len()
            )));
        }
        if let Some(b) = branches.iter().find(|b| b.qubits() != targets.len()) {
            return Err(Error::DimensionMismatch(format!(
                "branch acts on {} qubits, target has {}",
                b.qubits(),
                targets.len()
            )));
        }
        let rest: Vec<usize> = (0..total).filter(|&p| !used[p]).collect();
        Ok(Select {
            total,
            control_offsets: index_offsets(total, controls),
            target_offsets: index_offsets(total, targets),
            rest_offsets: index_offsets(total, &rest),
            branches,
        })
    }

    pub fn op(total: usize, controls: &[usize], targets: &[usize], branches: Vec<Operator>) -> Result<Operator> {
        Ok(Arc::new(Self::new(total, controls, targets, branches)?))
    }

    fn run(&self, state: &mut [C64], adjoint: bool) {
        let mut buf = vec![ZERO; self.target_offsets.len()];
        for (c, branch) in self.branches.iter().enumerate() {
            let base_c = self.control_offsets[c];
            for &r in &self.rest_offsets {
                let base = base_c | r;
                for (b, &t) in buf.iter_mut().zip(&self.target_offsets) {
                    *b = state[base | t];
                }
                if buf.iter().all(|z| *z == ZERO) {
                    continue;
                }
                if adjoint {
                    branch.apply_adjoint(&mut buf);
                } else {
                    branch.apply(&mut buf);
                }
                for (b, &t) in buf.iter().zip(&self.target_offsets) {
                    state[base | t] = *b;
                }
            }
        }
    }
}

impl fmt::Debug for Select {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Select({} branches on {} qubits)", self.branches.len(), self.total)
    }
}

impl RegisterOp for Select {
    fn qubits(&self) -> usize {
        self.total
    }

    fn apply(&self, state: &mut [C64]) {
        self.run(state, false)
    }

    fn apply_adjoint(&self, state: &mut [C64]) {
        self.run(state, true)
    }
}

/// Places `op` on the given qubit positions of a `total`-qubit register.
pub fn embed(total: usize, targets: &[usize], op: Operator) -> Result<Operator> {
    Select::op(total, &[], targets, vec![op])
}

/// Places `op` on the contiguous qubits starting at `offset`.
pub fn embed_at(total: usize, offset: usize, op: Operator) -> Result<Operator> {
    let targets: Vec<usize> = (offset..offset + op.qubits()).collect();
    embed(total, &targets, op)
}

/// Exchanges qubit `a[i]` with qubit `b[i]` for every `i`.
pub struct QubitSwap {
    total: usize,
    pairs: Vec<(usize, usize)>,
}

impl QubitSwap {
    pub fn new(total: usize, a: &[usize], b: &[usize]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch(format!("swapping {} qubits with {}", a.len(), b.len())));
        }
        let mut used = vec![false; total];
        for &p in a.iter().chain(b) {
            if p >= total || used[p] {
                return Err(Error::InvalidLayout(format!("qubit position {p} repeated or outside a {total}-qubit register")));
            }
            used[p] = true;
        }
        let pairs = a.iter().zip(b).map(|(&x, &y)| (total - 1 - x, total - 1 - y)).collect();
        Ok(QubitSwap { total, pairs })
    }

    pub fn op(total: usize, a: &[usize], b: &[usize]) -> Result<Operator> {
        Ok(Arc::new(Self::new(total, a, b)?))
    }

    fn permute(&self, i: usize) -> usize {
        let mut j = i;
        for &(x, y) in &self.pairs {
            let bx = (i >> x) & 1;
            let by = (i >> y) & 1;
            if bx != by {
                j ^= (1 << x) | (1 << y);
            }
        }
        j
    }
}

impl fmt::Debug for QubitSwap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QubitSwap({} pairs on {} qubits)", self.pairs.len(), self.total)
    }
}

impl RegisterOp for QubitSwap {
    fn qubits(&self) -> usize {
        self.total
    }

    fn apply(&self, state: &mut [C64]) {
        for i in 0..state.len() {
            let j = self.permute(i);
            if j > i {
                state.swap(i, j);
            }
        }
    }

    fn apply_adjoint(&self, state: &mut [C64]) {
        self.apply(state)
    }
}

/// Applies its parts in order, first element first.
#[derive(Debug)]
pub struct Sequence {
    qubits: usize,
    parts: Vec<Operator>,
}

impl Sequence {
    pub fn new(parts: Vec<Operator>) -> Result<Self> {
        let qubits = parts.first().map(|p| p.qubits()).unwrap_or(0);
        if parts.iter().any(|p| p.qubits() != qubits) {
            return Err(Error::DimensionMismatch("sequence parts act on different registers".into()));
        }
        Ok(Sequence { qubits, parts })
    }

    pub fn op(parts: Vec<Operator>) -> Result<Operator> {
        Ok(Arc::new(Self::new(parts)?))
    }
}

impl RegisterOp for Sequence {
    fn qubits(&self) -> usize {
        self.qubits
    }

    fn apply(&self, state: &mut [C64]) {
        for p in &self.parts {
            p.apply(state);
        }
    }

    fn apply_adjoint(&self, state: &mut [C64]) {
        for p in self.parts.iter().rev() {
            p.apply_adjoint(state);
        }
    }
}

#[derive(Debug)]
pub struct Dagger(pub Operator);

impl RegisterOp for Dagger {
    fn qubits(&self) -> usize {
        self.0.qubits()
    }

    fn apply(&self, state: &mut [C64]) {
        self.0.apply_adjoint(state)
    }

    fn apply_adjoint(&self, state: &mut [C64]) {
        self.0.apply(state)
    }
}

pub fn dagger(op: &Operator) -> Operator {
    Arc::new(Dagger(op.clone()))
}

/// Identity on `qubits` qubits.
#[derive(Debug)]
pub struct Identity(pub usize);

impl RegisterOp for Identity {
    fn qubits(&self) -> usize {
        self.0
    }

    fn apply(&self, _state: &mut [C64]) {}

    fn apply_adjoint(&self, _state: &mut [C64]) {}
}

/// The register Fourier transform `FT = T^{-1/2} sum_{j,k} e^{2 pi i jk/T} |k><j|`
/// (or its inverse), applied with an FFT.
pub struct Fourier {
    qubits: usize,
    inverse: bool,
    plus: Arc<dyn Fft<f64>>,
    minus: Arc<dyn Fft<f64>>,
}

impl Fourier {
    pub fn new(qubits: usize, inverse: bool) -> Self {
        let mut planner = FftPlanner::new();
        let n = 1usize << qubits;
        // rustfft's forward transform uses e^{-2 pi i jk/n}
        let plus = planner.plan_fft_inverse(n);
        let minus = planner.plan_fft_forward(n);
        Fourier { qubits, inverse, plus, minus }
    }

    pub fn op(qubits: usize, inverse: bool) -> Operator {
        Arc::new(Self::new(qubits, inverse))
    }

    fn run(&self, state: &mut [C64], positive: bool) {
        if positive {
            self.plus.process(state);
        } else {
            self.minus.process(state);
        }
        let s = 1.0 / (state.len() as f64).sqrt();
        for z in state.iter_mut() {
            *z *= s;
        }
    }
}

impl fmt::Debug for Fourier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fourier({} qubits, inverse: {})", self.qubits, self.inverse)
    }
}

impl RegisterOp for Fourier {
    fn qubits(&self) -> usize {
        self.qubits
    }

    fn apply(&self, state: &mut [C64]) {
        self.run(state, !self.inverse)
    }

    fn apply_adjoint(&self, state: &mut [C64]) {
        self.run(state, self.inverse)
    }
}

/// Householder reflection `I - 2 |v><v| / <v|v>`.
#[derive(Debug)]
pub struct Reflection {
    qubits: usize,
    v: Vec<C64>,
    norm_sqr: f64,
}

impl Reflection {
    pub fn new(v: Vec<C64>) -> Result<Self> {
        let qubits = crate::linalg::qubits_for_dim(v.len())?;
        let norm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        Ok(Reflection { qubits, v, norm_sqr })
    }

    /// Real unitary mapping `|0>` to the unit vector `target`.
    pub fn preparing(target: &[C64]) -> Result<Operator> {
        let mut v: Vec<C64> = target.iter().map(|z| -z).collect();
        v[0] += C64::new(1.0, 0.0);
        if v.iter().map(|z| z.norm_sqr()).sum::<f64>() < 1e-24 {
            return Ok(Arc::new(Identity(crate::linalg::qubits_for_dim(target.len())?)));
        }
        Ok(Arc::new(Self::new(v)?))
    }
}

impl RegisterOp for Reflection {
    fn qubits(&self) -> usize {
        self.qubits
    }

    fn apply(&self, state: &mut [C64]) {
        let p = crate::linalg::inner(&self.v, state) * (2.0 / self.norm_sqr);
        for (x, &y) in state.iter_mut().zip(&self.v) {
            *x -= p * y;
        }
    }

    fn apply_adjoint(&self, state: &mut [C64]) {
        self.apply(state)
    }
}

/// `op |v>` as a new vector.
pub fn apply_to(op: &dyn RegisterOp, v: &[C64]) -> Result<Vec<C64>> {
    if v.len() != op.dim() {
        return Err(Error::DimensionMismatch(format!("vector of length {} for a {}-qubit operator", v.len(), op.qubits())));
    }
    let mut s = v.to_vec();
    op.apply(&mut s);
    Ok(s)
}

/// `op |0...0>`.
pub fn apply_to_zero(op: &dyn RegisterOp) -> Vec<C64> {
    let mut s = basis_vector(op.dim(), 0);
    op.apply(&mut s);
    s
}

/// Dense matrix of `op`, one column per basis state.
pub fn materialize(op: &dyn RegisterOp, budget: usize) -> Result<ComplexMatrix> {
    check_budget(op.qubits(), budget)?;
    let d = op.dim();
    let mut m = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        let mut s = basis_vector(d, j);
        op.apply(&mut s);
        m.set_column(j, &s);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{tensor, ONE};

    fn x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn h() -> ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]])
    }

    #[test]
    fn embedding_matches_kronecker() {
        let g = Gate::op(h()).unwrap();
        let m = materialize(embed_at(3, 1, g.clone()).unwrap().as_ref(), 14).unwrap();
        let expect = tensor(&tensor(&ComplexMatrix::identity(2), &h()), &ComplexMatrix::identity(2));
        assert!(m.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn controlled_not() {
        let cx = Select::op(2, &[0], &[1], vec![Arc::new(Identity(1)), Gate::op(x()).unwrap()]).unwrap();
        let m = materialize(cx.as_ref(), 14).unwrap();
        let expect = ComplexMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]);
        assert_eq!(m, expect);
        // control below the target
        let xc = Select::op(2, &[1], &[0], vec![Arc::new(Identity(1)), Gate::op(x()).unwrap()]).unwrap();
        let v = apply_to(xc.as_ref(), &basis_vector(4, 1)).unwrap();
        assert_eq!(v, basis_vector(4, 3));
    }

    #[test]
    fn swap_and_inverse() {
        let s = QubitSwap::op(2, &[0], &[1]).unwrap();
        assert_eq!(apply_to(s.as_ref(), &basis_vector(4, 1)).unwrap(), basis_vector(4, 2));
        let seq = Sequence::op(vec![s.clone(), s]).unwrap();
        assert!(materialize(seq.as_ref(), 14).unwrap().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn dagger_inverts() {
        let phase = ComplexMatrix::from_diag(&[ONE, C64::new(0.0, 1.0)]);
        let g = Gate::op(tensor(&phase, &h())).unwrap();
        let seq = Sequence::op(vec![g.clone(), dagger(&g)]).unwrap();
        assert!(materialize(seq.as_ref(), 14).unwrap().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-14);
    }

    #[test]
    fn fourier_matches_definition() {
        let t = 8usize;
        let ft = materialize(&Fourier::new(3, false), 14).unwrap();
        let s = 1.0 / (t as f64).sqrt();
        let expect = ComplexMatrix::from_fn(t, t, |k, j| {
            C64::from_polar(s, 2.0 * std::f64::consts::PI * (j * k) as f64 / t as f64)
        });
        assert!(ft.max_abs_diff(&expect) < 1e-14);
        let inv = materialize(&Fourier::new(3, true), 14).unwrap();
        assert!(inv.max_abs_diff(&expect.adjoint()) < 1e-14);
    }

    #[test]
    fn reflection_prepares_target() {
        let target: Vec<C64> = [0.5, 0.5, -0.5, 0.5].iter().map(|&x| C64::new(x, 0.0)).collect();
        let r = Reflection::preparing(&target).unwrap();
        let out = apply_to_zero(r.as_ref());
        assert!(crate::linalg::vector_distance(&out, &target) < 1e-15);
        let m = materialize(r.as_ref(), 14).unwrap();
        assert!(m.unitarity_defect() < 1e-14);
    }

    #[test]
    fn budget_enforced() {
        let op = Identity(5);
        assert_eq!(materialize(&op, 4), Err(Error::RegisterTooLarge { qubits: 5, budget: 4 }));
    }
}

//! Block-encodings: descriptors, verification and the purification to unitary
//! construction.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circuit::{apply_to, check_budget, embed, materialize, Operator, QubitSwap, Sequence};
use crate::error::{Error, Result};
use crate::linalg::{
    operator_norm, project_zero, project_zero_vector, reduced_density, ComplexMatrix, RegisterLayout, Segment,
    SegmentRole, C64, ZERO,
};
use crate::state::Purification;

/// Default cap on simulated register size.
pub const DEFAULT_QUBIT_BUDGET: usize = 14;

/// Slack allowed between a measured block error and the claimed one.
pub const ENCODING_SLACK: f64 = 1e-9;

/// `(alpha, a, epsilon)`: `|| alpha <0|B|0>_a - A || <= epsilon`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockEncodingSpec {
    pub alpha: f64,
    pub ancilla_qubits: usize,
    pub epsilon: f64,
}

impl BlockEncodingSpec {
    pub fn new(alpha: f64, ancilla_qubits: usize, epsilon: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::OutOfRange { what: "block-encoding scale alpha must be positive", value: alpha });
        }
        if !(epsilon >= 0.0) {
            return Err(Error::OutOfRange { what: "block-encoding error must be nonnegative", value: epsilon });
        }
        Ok(BlockEncodingSpec { alpha, ancilla_qubits, epsilon })
    }
}

/// Whether the carrier is read as a unitary or as a quantum state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncodingKind {
    Unitary,
    State,
}

/// Concrete representation of an encoding operator.
#[derive(Clone)]
pub enum Carrier {
    /// Dense unitary or density matrix on system and encoding segments.
    Matrix(ComplexMatrix),
    /// Unitary given as a circuit on system and encoding segments.
    Circuit(Operator),
    /// Purified state; the layout's garbage segments are traced out.
    PureState(Vec<C64>),
}

impl fmt::Debug for Carrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Carrier::Matrix(m) => write!(f, "Matrix({}x{})", m.rows(), m.cols()),
            Carrier::Circuit(op) => write!(f, "Circuit({op:?})"),
            Carrier::PureState(v) => write!(f, "PureState(len {})", v.len()),
        }
    }
}

/// `<0|_enc m |0>_enc` for a dense carrier whose layout has no garbage.
pub fn top_left_block(m: &ComplexMatrix, layout: &RegisterLayout) -> Result<ComplexMatrix> {
    if layout.qubits_with_role(SegmentRole::Garbage) > 0 {
        return Err(Error::InvalidLayout("dense carriers cannot have garbage segments; trace them first".into()));
    }
    project_zero(m, layout, &layout.names_with_role(SegmentRole::Encoding))
}

/// `|| alpha <0|_enc carrier |0>_enc - target ||`.
pub fn be_error(carrier: &ComplexMatrix, layout: &RegisterLayout, target: &ComplexMatrix, alpha: f64) -> Result<f64> {
    let block = top_left_block(carrier, layout)?;
    block_error(&block, target, alpha)
}

fn block_error(block: &ComplexMatrix, target: &ComplexMatrix, alpha: f64) -> Result<f64> {
    if block.rows() != target.rows() || block.cols() != target.cols() {
        return Err(Error::DimensionMismatch(format!(
            "block is {}x{}, target is {}x{}",
            block.rows(),
            block.cols(),
            target.rows(),
            target.cols()
        )));
    }
    Ok(operator_norm(&(&block.scale_real(alpha) - target)))
}

/// Block of a circuit carrier, one simulated column per system basis state.
fn circuit_block(op: &Operator, layout: &RegisterLayout, budget: usize) -> Result<ComplexMatrix> {
    check_budget(op.qubits(), budget)?;
    if op.qubits() != layout.total_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit circuit for a {}-qubit layout",
            op.qubits(),
            layout.total_qubits()
        )));
    }
    if layout.qubits_with_role(SegmentRole::Garbage) > 0 {
        return Err(Error::InvalidLayout("unitary carriers cannot have garbage segments".into()));
    }
    let sys = layout.names_with_role(SegmentRole::System);
    let enc = layout.names_with_role(SegmentRole::Encoding);
    let split = layout.split(&sys)?;
    let d = split.kept_dim();
    let mut block = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        let mut input = vec![ZERO; layout.dim()];
        input[split.index(j, 0)] = C64::new(1.0, 0.0);
        let out = apply_to(op.as_ref(), &input)?;
        block.set_column(j, &project_zero_vector(&out, layout, &enc)?);
    }
    Ok(block)
}

fn state_block(v: &[C64], layout: &RegisterLayout) -> Result<ComplexMatrix> {
    let enc = layout.names_with_role(SegmentRole::Encoding);
    let projected = project_zero_vector(v, layout, &enc)?;
    let rest = layout.without(&enc)?;
    reduced_density(&projected, &rest, &rest.names_with_role(SegmentRole::System))
}

/// Block of any carrier under the given interpretation.
pub fn carrier_block(carrier: &Carrier, layout: &RegisterLayout, budget: usize) -> Result<ComplexMatrix> {
    match carrier {
        Carrier::Matrix(m) => top_left_block(m, layout),
        Carrier::Circuit(op) => circuit_block(op, layout, budget),
        Carrier::PureState(v) => state_block(v, layout),
    }
}

/// A carrier that block-encodes `target` as described by `spec`.
#[derive(Clone, Debug)]
pub struct EncodedOperator {
    carrier: Carrier,
    kind: EncodingKind,
    layout: RegisterLayout,
    spec: BlockEncodingSpec,
    target: ComplexMatrix,
    block: ComplexMatrix,
    measured: f64,
}

impl EncodedOperator {
    /// Checks the claimed error against the measured one.
    pub fn new(
        carrier: Carrier,
        kind: EncodingKind,
        layout: RegisterLayout,
        spec: BlockEncodingSpec,
        target: ComplexMatrix,
        budget: usize,
    ) -> Result<Self> {
        let block = carrier_block(&carrier, &layout, budget)?;
        let measured = block_error(&block, &target, spec.alpha)?;
        if measured > spec.epsilon + ENCODING_SLACK {
            return Err(Error::EncodingViolated { measured, claimed: spec.epsilon });
        }
        Ok(EncodedOperator { carrier, kind, layout, spec, target, block, measured })
    }

    /// Builds an encoding whose claimed error is the measured one.
    pub fn measured(
        carrier: Carrier,
        kind: EncodingKind,
        layout: RegisterLayout,
        alpha: f64,
        target: ComplexMatrix,
        budget: usize,
    ) -> Result<Self> {
        let block = carrier_block(&carrier, &layout, budget)?;
        let measured = block_error(&block, &target, alpha)?;
        let spec = BlockEncodingSpec::new(alpha, layout.qubits_with_role(SegmentRole::Encoding), measured)?;
        Ok(EncodedOperator { carrier, kind, layout, spec, target, block, measured })
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn kind(&self) -> EncodingKind {
        self.kind
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn spec(&self) -> &BlockEncodingSpec {
        &self.spec
    }

    pub fn target(&self) -> &ComplexMatrix {
        &self.target
    }

    /// `<0|_enc carrier |0>_enc`, unscaled.
    pub fn block(&self) -> &ComplexMatrix {
        &self.block
    }

    /// `|| alpha * block - target ||` as measured at construction.
    pub fn error(&self) -> f64 {
        self.measured
    }

    /// The carrier as an operator, when it is a circuit.
    pub fn operator(&self) -> Option<&Operator> {
        match &self.carrier {
            Carrier::Circuit(op) => Some(op),
            _ => None,
        }
    }
}

/// The unitary `(I (x) V^dag) SWAP (I (x) V)` built from a purification's
/// preparer `V`. The leading copy of the non-garbage segments is the system;
/// the trailing `prep.*` register holds `V` and is the encoding. Its block is
/// the prepared density operator exactly.
pub fn purification_to_unitary_be(p: &Purification, budget: usize) -> Result<EncodedOperator> {
    let (op, layout) = swap_circuit(p)?;
    check_budget(layout.total_qubits(), budget)?;
    let target = p.density_matrix()?;
    let spec = BlockEncodingSpec::new(1.0, p.total_qubits(), 0.0)?;
    EncodedOperator::new(Carrier::Circuit(op), EncodingKind::Unitary, layout, spec, target, budget)
}

/// Prefix for the preparer register inside the swap construction.
pub const PREP_PREFIX: &str = "prep.";

/// Circuit and layout of the swap construction without any verification.
pub fn swap_circuit(p: &Purification) -> Result<(Operator, RegisterLayout)> {
    let kept: Vec<Segment> = p
        .layout()
        .segments()
        .iter()
        .filter(|s| s.role != SegmentRole::Garbage)
        .map(|s| Segment::new(s.name.clone(), s.qubits, SegmentRole::System))
        .collect();
    let front = RegisterLayout::new(kept)?;
    let prep = RegisterLayout::new(
        p.layout()
            .segments()
            .iter()
            .map(|s| Segment::new(format!("{PREP_PREFIX}{}", s.name), s.qubits, SegmentRole::Encoding))
            .collect(),
    )?;
    let layout = front.concat(&prep)?;
    let total = layout.total_qubits();
    let m = front.total_qubits();
    let prep_positions: Vec<usize> = (m..total).collect();
    let front_positions: Vec<usize> = (0..m).collect();
    let kept_names: Vec<String> =
        p.kept_names().iter().map(|n| format!("{PREP_PREFIX}{n}")).collect();
    let kept_refs: Vec<&str> = kept_names.iter().map(String::as_str).collect();
    let prep_kept_positions = layout.positions(&kept_refs)?;
    let v = embed(total, &prep_positions, p.preparer().clone())?;
    let swap = QubitSwap::op(total, &front_positions, &prep_kept_positions)?;
    let vdag = crate::circuit::dagger(&v);
    Ok((Sequence::op(vec![v, swap, vdag])?, layout))
}

/// Dense `SWAP` exchanging two `m`-qubit registers.
pub fn swap_registers(m_qubits: usize, budget: usize) -> Result<ComplexMatrix> {
    if m_qubits == 0 {
        return Err(Error::InvalidParameter("swap needs at least one qubit per register".into()));
    }
    check_budget(2 * m_qubits, budget)?;
    let a: Vec<usize> = (0..m_qubits).collect();
    let b: Vec<usize> = (m_qubits..2 * m_qubits).collect();
    materialize(&QubitSwap::new(2 * m_qubits, &a, &b)?, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::basis_vector;
    use crate::state::{purify, random_density, DensityOperator};
    use SegmentRole::*;

    #[test]
    fn density_encodes_itself() {
        let sigma = random_density(2, 3, 1).unwrap();
        let l = RegisterLayout::from_parts(&[("s", 2, System)]).unwrap();
        assert!(be_error(sigma.matrix(), &l, sigma.matrix(), 1.0).unwrap() < 1e-15);
    }

    #[test]
    fn identity_block() {
        let l = RegisterLayout::from_parts(&[("s", 1, System), ("a", 1, Encoding)]).unwrap();
        let e = be_error(&ComplexMatrix::identity(4), &l, &ComplexMatrix::identity(2), 1.0).unwrap();
        assert!(e < 1e-15);
    }

    #[test]
    fn swap_examples() {
        let s = swap_registers(1, 14).unwrap();
        assert_eq!(s.mat_vec(&basis_vector(4, 1)).unwrap(), basis_vector(4, 2));
        let expect = ComplexMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]);
        assert_eq!(s, expect);
        let s2 = swap_registers(2, 14).unwrap();
        assert_eq!(&s2 * &s2, ComplexMatrix::identity(16));
        assert!(matches!(swap_registers(8, 14), Err(Error::RegisterTooLarge { .. })));
    }

    #[test]
    fn swap_construction_pure_and_mixed() {
        let pure = purify(&DensityOperator::basis(1, 0).unwrap(), 1).unwrap();
        let e = purification_to_unitary_be(&pure, 14).unwrap();
        assert!(e.block().max_abs_diff(&ComplexMatrix::from_real_diag(&[1.0, 0.0])) < 1e-12);
        let mixed = purify(&DensityOperator::maximally_mixed(1), 1).unwrap();
        let e = purification_to_unitary_be(&mixed, 14).unwrap();
        assert!(e.block().max_abs_diff(&ComplexMatrix::from_real_diag(&[0.5, 0.5])) < 1e-10);
        let u = materialize(e.operator().unwrap().as_ref(), 14).unwrap();
        assert!(u.unitarity_defect() < 1e-10);
    }

    #[test]
    fn swap_construction_matches_dense_slicing() {
        let rho = random_density(2, 2, 4).unwrap();
        let p = purify(&rho, 1).unwrap();
        let e = purification_to_unitary_be(&p, 14).unwrap();
        assert!(e.error() < 1e-9);
        let dense = materialize(e.operator().unwrap().as_ref(), 14).unwrap();
        // rows/cols with the trailing 3-qubit register at zero are multiples of 8
        let sliced = ComplexMatrix::from_fn(4, 4, |i, j| dense[(i * 8, j * 8)]);
        assert!(sliced.max_abs_diff(e.block()) < 1e-12);
        assert!(be_error(&dense, e.layout(), rho.matrix(), 1.0).unwrap() < 1e-9);
    }

    #[test]
    fn violated_claim_is_an_error() {
        let l = RegisterLayout::from_parts(&[("s", 1, System)]).unwrap();
        let spec = BlockEncodingSpec::new(1.0, 0, 0.0).unwrap();
        let r = EncodedOperator::new(
            Carrier::Matrix(ComplexMatrix::identity(2)),
            EncodingKind::Unitary,
            l,
            spec,
            ComplexMatrix::zeros(2, 2),
            14,
        );
        assert!(matches!(r, Err(Error::EncodingViolated { .. })));
    }
}

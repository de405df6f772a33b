//! Dense complex linear algebra on qubit registers.

mod eigen;
mod layout;
mod matrix;

pub use eigen::{
    eig_hermitian, expm_i, matrix_func, operator_norm, sqrtm_psd, trace_norm, trace_sqrt_clamped, HermitianEigen,
    EIGEN_TOL, HERMITIAN_TOL,
};
pub use layout::{
    index_offsets, pad_with_zeros, partial_trace, project_zero, project_zero_vector, reduced_density,
    RegisterLayout, Segment, SegmentRole, Split,
};
pub use matrix::{
    basis_vector, complete_unitary, inner, is_power_of_two, qubits_for_dim, vector_distance, vector_norm,
    ComplexMatrix, C64, ONE, ZERO,
};

/// Kronecker product; `a` acts on the leading (more significant) qubits.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Kronecker product of several factors, left to right.
pub fn tensor_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    factors.iter().fold(ComplexMatrix::identity(1), |acc, f| acc.kron(f))
}

/// Kronecker product of vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        out.extend(b.iter().map(|&y| x * y));
    }
    out
}

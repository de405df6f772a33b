use nalgebra::linalg::SymmetricEigen;

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Entrywise tolerance for accepting a matrix as Hermitian. Also the clamping
/// threshold for slightly negative eigenvalues of PSD operators.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Operator-norm tolerance on eigen reconstruction and unitarity.
pub const EIGEN_TOL: f64 = 1e-10;

/// Spectral decomposition `m = V diag(values) V^H` with descending eigenvalues.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `j` pairs with `values[j]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvector(&self, j: usize) -> Vec<C64> {
        self.vectors.column(j)
    }

    /// `V diag(f(lambda)) V^H` for a complex-valued spectral function.
    pub fn map_complex(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.dim();
        let weights: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &w) in weights.iter().enumerate() {
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..n {
                let a = v[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += a * v[(j, k)].conj();
                }
            }
        }
        out
    }

    /// `V diag(f(lambda)) V^H`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        self.map_complex(|l| C64::new(f(l), 0.0))
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|l| l)
    }

    pub fn reconstruction_error(&self, original: &ComplexMatrix) -> f64 {
        operator_norm(&(&self.reconstruct() - original))
    }

    pub fn orthonormality_defect(&self) -> f64 {
        self.vectors.unitarity_defect()
    }

    /// Number of eigenvalues strictly above `threshold`.
    pub fn rank_above(&self, threshold: f64) -> usize {
        self.values.iter().filter(|&&l| l > threshold).count()
    }
}

/// Hermitian eigendecomposition; rejects inputs whose Hermiticity defect
/// exceeds [`HERMITIAN_TOL`].
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("eigendecomposition of {}x{} matrix", m.rows(), m.cols())));
    }
    let defect = m.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian { defect });
    }
    let n = m.rows();
    if n == 0 {
        return Ok(HermitianEigen { values: vec![], vectors: ComplexMatrix::zeros(0, 0) });
    }
    let eig = SymmetricEigen::new(m.hermitian_part().to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_nalgebra(&eig.eigenvectors.select_columns(order.iter()));
    Ok(HermitianEigen { values, vectors })
}

/// Applies a real spectral function to a Hermitian matrix.
///
/// With `clamp_negative`, the spectrum is treated as nonnegative: eigenvalues in
/// `[-HERMITIAN_TOL, 0)` become `0` before `f` is applied and anything below
/// `-HERMITIAN_TOL` is a [`Error::NegativeEigenvalue`].
pub fn matrix_func(m: &ComplexMatrix, f: impl Fn(f64) -> f64, clamp_negative: bool) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(m)?;
    if clamp_negative {
        if let Some(&lowest) = eig.values.last() {
            if lowest < -HERMITIAN_TOL {
                return Err(Error::NegativeEigenvalue { value: lowest });
            }
        }
        Ok(eig.map(|l| f(l.max(0.0))))
    } else {
        Ok(eig.map(f))
    }
}

/// Principal square root of a PSD matrix.
pub fn sqrtm_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    matrix_func(m, f64::sqrt, true)
}

/// `exp(i s m)` for Hermitian `m`.
pub fn expm_i(m: &ComplexMatrix, s: f64) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(m)?;
    Ok(eig.map_complex(|l| C64::from_polar(1.0, s * l)))
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    if m.rows() == 0 || m.cols() == 0 {
        return 0.0;
    }
    m.to_nalgebra().singular_values().iter().fold(0.0, |a: f64, &b| a.max(b))
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    if m.rows() == 0 || m.cols() == 0 {
        return 0.0;
    }
    m.to_nalgebra().singular_values().iter().sum()
}

/// `tr sqrt(m)` of a Hermitian matrix after clamping its negative eigenvalues to zero.
pub fn trace_sqrt_clamped(m: &ComplexMatrix) -> Result<f64> {
    let eig = eig_hermitian(m)?;
    Ok(eig.values.iter().map(|&l| l.max(0.0).sqrt()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::ONE;

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    #[test]
    fn diagonal_input_is_already_decomposed() {
        let e = eig_hermitian(&ComplexMatrix::from_real_diag(&[2.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![2.0, 1.0]);
        assert!(e.vectors.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn pauli_x_spectrum() {
        let e = eig_hermitian(&pauli_x()).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        assert!((e.values[1] + 1.0).abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = e.eigenvector(0);
        let minus = e.eigenvector(1);
        // compare up to a global phase
        let ov_plus = plus[0].conj() * s + plus[1].conj() * s;
        let ov_minus = minus[0].conj() * s - minus[1].conj() * s;
        assert!((ov_plus.norm() - 1.0).abs() < 1e-12);
        assert!((ov_minus.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn sqrt_closed_forms() {
        assert!(sqrtm_psd(&ComplexMatrix::identity(4)).unwrap().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        let r = sqrtm_psd(&ComplexMatrix::from_real_diag(&[4.0, 9.0])).unwrap();
        assert!(r.max_abs_diff(&ComplexMatrix::from_real_diag(&[2.0, 3.0])) < 1e-12);
    }

    #[test]
    fn sqrt_of_fidelity_kernel_for_pure_and_mixed() {
        // rho = |0><0|, sigma = I/2: sqrt(sigma) rho sqrt(sigma) = rho / 2
        let rho = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        let sigma = ComplexMatrix::from_real_diag(&[0.5, 0.5]);
        let rs = sqrtm_psd(&sigma).unwrap();
        let inner = &(&rs * &rho) * &rs;
        let tr = sqrtm_psd(&inner).unwrap().trace();
        assert!((tr.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn clamping_and_negative_errors() {
        let m = ComplexMatrix::from_real_diag(&[1.0, -5e-10]);
        let r = matrix_func(&m, f64::sqrt, true).unwrap();
        assert_eq!(r[(1, 1)], C64::new(0.0, 0.0));
        let bad = ComplexMatrix::from_real_diag(&[1.0, -1e-6]);
        assert!(matches!(matrix_func(&bad, f64::sqrt, true), Err(Error::NegativeEigenvalue { .. })));
    }

    #[test]
    fn expm_i_closed_forms() {
        let a = pauli_x();
        assert!(expm_i(&a, 0.0).unwrap().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
        let z = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
        let u = expm_i(&z, std::f64::consts::PI).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(2).scale(-ONE)) < 1e-12);
        let prod = &expm_i(&a, 0.7).unwrap() * &expm_i(&a, -0.7).unwrap();
        assert!(prod.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-10);
    }

    #[test]
    fn norms() {
        assert!((operator_norm(&ComplexMatrix::identity(4)) - 1.0).abs() < 1e-12);
        assert!((trace_norm(&ComplexMatrix::from_real_diag(&[1.0, -2.0])) - 3.0).abs() < 1e-12);
    }
}

//! Fixtures shared by the benchmarks.

use qfid_core::pipeline::PipelineParams;
use qfid_core::qae::{QaeMode, QaeParams};
use qfid_core::sqrt::SimLevel;
use qfid_core::sweep::{instance_pair, standard_purification};
use qfid_core::{ComplexMatrix, Purification, Result};

/// Purifications of the sweep instance `(n, rank_rho, rank_sigma, seed)`.
pub fn pair(n: usize, rank_rho: usize, rank_sigma: usize, seed: u64) -> Result<(Purification, Purification)> {
    let (rho, sigma) = instance_pair(n, rank_rho, rank_sigma, seed)?;
    Ok((standard_purification(&rho)?, standard_purification(&sigma)?))
}

/// A Hermitian matrix of dimension `2^qubits` with a spread spectrum.
pub fn hermitian(qubits: usize, seed: u64) -> Result<ComplexMatrix> {
    let rho = qfid_core::random_density(qubits, 1 << qubits, seed)?;
    let shift = ComplexMatrix::identity(1 << qubits).scale_real(0.5 / (1 << qubits) as f64);
    Ok(rho.matrix() - &shift)
}

pub fn params(level: SimLevel) -> Result<PipelineParams> {
    PipelineParams::new(16.0, 256, 64.0, 4096, QaeParams::new(64, QaeMode::Exact, 0)?, level)
}

//! Parameter sweeps written as CSV.
//!
//! Columns, in order:
//!
//! `instance_seed, trial, seed, n, rank_rho, rank_sigma, kappa_sigma, t_sigma,
//! kappa, t, qae_m, qae_mode, sim_level, sigma_stage_level, eta_stage_level,
//! x, x_tilde, estimate, exact_fidelity, abs_error, analytic_bound,
//! analytic_bound_at_estimate, rank_r, queries_rho, queries_sigma,
//! roles_swapped, sigma_be_error, eta_block_error, bound_constant`
//!
//! Floats use 17 significant digits. `rho` and `sigma` for instance seed `s`
//! are drawn with seeds `2s` and `2s + 1`; trial `i` uses QAE seed
//! `seed_base + i`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{estimate_fidelity, EstimationReport, PipelineParams};
use crate::qae::{QaeMode, QaeParams};
use crate::sqrt::SimLevel;
use crate::state::{min_ancilla, purify, random_density, DensityOperator, Purification};

pub const CSV_HEADER: [&str; 29] = [
    "instance_seed",
    "trial",
    "seed",
    "n",
    "rank_rho",
    "rank_sigma",
    "kappa_sigma",
    "t_sigma",
    "kappa",
    "t",
    "qae_m",
    "qae_mode",
    "sim_level",
    "sigma_stage_level",
    "eta_stage_level",
    "x",
    "x_tilde",
    "estimate",
    "exact_fidelity",
    "abs_error",
    "analytic_bound",
    "analytic_bound_at_estimate",
    "rank_r",
    "queries_rho",
    "queries_sigma",
    "roles_swapped",
    "sigma_be_error",
    "eta_block_error",
    "bound_constant",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n: usize,
    pub rank_rho: usize,
    pub rank_sigma: usize,
    /// Instance seeds `instance_seed_start..instance_seed_start + instances`.
    pub instance_seed_start: u64,
    pub instances: u64,
    pub kappa_sigma: Vec<f64>,
    pub t_sigma: Vec<u64>,
    pub kappa: Vec<f64>,
    pub t: Vec<u64>,
    pub m: Vec<u64>,
    pub qae_mode: QaeMode,
    pub sim_level: SimLevel,
    pub trials: u64,
    pub seed_base: u64,
    pub bound_constant: f64,
    pub qubit_budget: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("kappa_sigma", self.kappa_sigma.len()),
            ("t_sigma", self.t_sigma.len()),
            ("kappa", self.kappa.len()),
            ("t", self.t.len()),
            ("m", self.m.len()),
        ];
        for (name, len) in lists {
            if len == 0 {
                return Err(Error::InvalidParameter(format!("sweep grid `{name}` is empty")));
            }
        }
        if self.instances == 0 {
            return Err(Error::InvalidParameter("sweep needs at least one instance".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        Ok(())
    }

    /// Grid cells in output order: instance, then `kappa_sigma`, `t_sigma`,
    /// `kappa`, `t`, `M`.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        self.validate()?;
        let mut out = Vec::new();
        for i in 0..self.instances {
            for &ks in &self.kappa_sigma {
                for &ts in &self.t_sigma {
                    for &k in &self.kappa {
                        for &t in &self.t {
                            for &m in &self.m {
                                let qae = QaeParams::new(m, self.qae_mode, self.seed_base)?;
                                let params = PipelineParams::new(ks, ts, k, t, qae, self.sim_level)?
                                    .with_bound_constant(self.bound_constant)
                                    .with_budget(self.qubit_budget);
                                out.push(Cell { instance_seed: self.instance_seed_start + i, params });
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub instance_seed: u64,
    pub params: PipelineParams,
}

/// The `(rho, sigma)` pair for an instance seed.
pub fn instance_pair(n: usize, rank_rho: usize, rank_sigma: usize, seed: u64) -> Result<(DensityOperator, DensityOperator)> {
    let rho = random_density(n, rank_rho, seed.wrapping_mul(2))?;
    let sigma = random_density(n, rank_sigma, seed.wrapping_mul(2).wrapping_add(1))?;
    Ok((rho, sigma))
}

/// Purification with the fewest ancilla qubits.
pub fn standard_purification(rho: &DensityOperator) -> Result<Purification> {
    purify(rho, min_ancilla(rho))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub instance_seed: u64,
    pub trial: u64,
    pub n: usize,
    pub rank_rho: usize,
    pub rank_sigma: usize,
    pub report: EstimationReport,
}

impl SweepRow {
    pub fn record(&self) -> Result<Vec<String>> {
        let r = &self.report;
        let floats = [
            ("kappa_sigma", r.kappa_sigma),
            ("kappa", r.kappa),
            ("x", r.x),
            ("x_tilde", r.x_tilde),
            ("estimate", r.estimate),
            ("exact_fidelity", r.exact_fidelity),
            ("abs_error", r.abs_error),
            ("analytic_bound", r.analytic_bound),
            ("analytic_bound_at_estimate", r.analytic_bound_at_estimate),
            ("sigma_be_error", r.sigma_be_error),
            ("eta_block_error", r.eta_block_error),
            ("bound_constant", r.bound_constant),
        ];
        for (name, v) in floats {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("{name} in instance {} trial {}", self.instance_seed, self.trial)));
            }
        }
        let f = |v: f64| format!("{v:.16e}");
        Ok(vec![
            self.instance_seed.to_string(),
            self.trial.to_string(),
            r.seed.to_string(),
            self.n.to_string(),
            self.rank_rho.to_string(),
            self.rank_sigma.to_string(),
            f(r.kappa_sigma),
            r.t_sigma.to_string(),
            f(r.kappa),
            r.t.to_string(),
            r.qae_m.to_string(),
            r.qae_mode.to_string(),
            r.sim_level.to_string(),
            r.sigma_stage_level.to_string(),
            r.eta_stage_level.to_string(),
            f(r.x),
            f(r.x_tilde),
            f(r.estimate),
            f(r.exact_fidelity),
            f(r.abs_error),
            f(r.analytic_bound),
            f(r.analytic_bound_at_estimate),
            r.rank_r.to_string(),
            r.queries_rho.to_string(),
            r.queries_sigma.to_string(),
            r.roles_swapped.to_string(),
            f(r.sigma_be_error),
            f(r.eta_block_error),
            f(r.bound_constant),
        ])
    }
}

fn run_cell(spec: &SweepSpec, cell: &Cell) -> Result<Vec<SweepRow>> {
    let (rho, sigma) = instance_pair(spec.n, spec.rank_rho, spec.rank_sigma, cell.instance_seed)?;
    let (pr, ps) = (standard_purification(&rho)?, standard_purification(&sigma)?);
    (0..spec.trials)
        .map(|trial| {
            let params = cell.params.with_seed(spec.seed_base.wrapping_add(trial));
            Ok(SweepRow {
                instance_seed: cell.instance_seed,
                trial,
                n: spec.n,
                rank_rho: spec.rank_rho,
                rank_sigma: spec.rank_sigma,
                report: estimate_fidelity(&pr, &ps, &params)?,
            })
        })
        .collect()
}

/// Runs every cell on `jobs` worker threads and writes rows in cell order.
/// If a cell fails, the rows of all earlier cells are written and flushed
/// before the error is returned.
pub fn run_sweep<W: Write>(spec: &SweepSpec, jobs: usize, out: W) -> Result<usize> {
    let cells = spec.cells()?;
    write_cells(&cells, |c| run_cell(spec, c), jobs, out)
}

fn write_cells<W: Write>(
    cells: &[Cell],
    run: impl Fn(&Cell) -> Result<Vec<SweepRow>> + Sync,
    jobs: usize,
    out: W,
) -> Result<usize> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let results: Vec<Result<Vec<SweepRow>>> = pool.install(|| cells.par_iter().map(&run).collect());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let mut written = 0;
    for result in results {
        let rows = match result.and_then(|rows| rows.iter().map(|r| r.record()).collect::<Result<Vec<_>>>()) {
            Ok(rows) => rows,
            Err(e) => {
                w.flush()?;
                return Err(e);
            }
        };
        for r in rows {
            w.write_record(&r)?;
            written += 1;
        }
    }
    w.flush()?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SweepSpec {
        SweepSpec {
            n: 1,
            rank_rho: 1,
            rank_sigma: 2,
            instance_seed_start: 0,
            instances: 2,
            kappa_sigma: vec![16.0],
            t_sigma: vec![256],
            kappa: vec![64.0, 256.0],
            t: vec![4096],
            m: vec![64],
            qae_mode: QaeMode::Sample,
            sim_level: SimLevel::IdealSpectral,
            trials: 2,
            seed_base: 5,
            bound_constant: 1.0,
            qubit_budget: 14,
        }
    }

    #[test]
    fn deterministic_and_ordered() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        assert_eq!(run_sweep(&spec(), 1, &mut a).unwrap(), 8);
        run_sweep(&spec(), 4, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with(&CSV_HEADER.join(",")));
        let seeds: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
        assert_eq!(seeds, ["5", "6", "5", "6", "5", "6", "5", "6"]);
    }

    #[test]
    fn empty_grid_rejected() {
        let mut s = spec();
        s.kappa.clear();
        assert!(run_sweep(&s, 1, Vec::new()).is_err());
        let mut s = spec();
        s.trials = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn partial_rows_flushed() {
        let s = spec();
        let cells = s.cells().unwrap();
        let mut out = Vec::new();
        let r = write_cells(
            &cells,
            |c| {
                if c.params.kappa > 100.0 {
                    Err(Error::NonFinite("x".into()))
                } else {
                    run_cell(&s, c)
                }
            },
            3,
            &mut out,
        );
        assert!(matches!(r, Err(Error::NonFinite(_))));
        // header plus the two trials of the first cell
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 3);
    }
}

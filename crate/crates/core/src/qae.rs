//! Amplitude estimation on a known amplitude.
//!
//! The canonical estimator's outcome distribution depends only on `x`, so it is
//! sampled analytically instead of simulating the Grover iterate.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{project_zero_vector, ComplexMatrix, RegisterLayout, C64};

/// Slack on `x` outside `[0, 1]` that is clamped rather than rejected.
const AMPLITUDE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QaeMode {
    /// Nearest grid point to the true amplitude.
    Exact,
    /// One draw from the phase-estimation outcome distribution.
    Sample,
}

impl QaeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            QaeMode::Exact => "exact",
            QaeMode::Sample => "sample",
        }
    }
}

impl fmt::Display for QaeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QaeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(QaeMode::Exact),
            "sample" => Ok(QaeMode::Sample),
            other => Err(Error::InvalidParameter(format!("unknown QAE mode `{other}` (expected exact or sample)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaeParams {
    /// Grid size, equal to the number of Grover-iterate applications.
    pub m: u64,
    pub mode: QaeMode,
    pub seed: u64,
}

impl QaeParams {
    pub fn new(m: u64, mode: QaeMode, seed: u64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!("QAE grid size must be at least 2, got {m}")));
        }
        if mode == QaeMode::Sample && !m.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(m as usize));
        }
        Ok(QaeParams { m, mode, seed })
    }

    /// Calls to the state preparer: `M - 1` Grover iterates, each using it
    /// twice, plus the initial preparation.
    pub fn preparer_calls(&self) -> u128 {
        2 * self.m as u128 - 1
    }
}

/// Probability that the named segments of a state are all `|0>`. `state` is a
/// density matrix or a single-column state vector.
pub fn exact_amplitude(state: &ComplexMatrix, layout: &RegisterLayout, zero: &[&str]) -> Result<f64> {
    if state.cols() == 1 {
        return exact_amplitude_vector(state.as_slice(), layout, zero);
    }
    let block = crate::linalg::project_zero(state, layout, zero)?;
    Ok(block.trace().re)
}

/// `|| (<0| on the named segments) |v> ||^2`.
pub fn exact_amplitude_vector(v: &[C64], layout: &RegisterLayout, zero: &[&str]) -> Result<f64> {
    Ok(project_zero_vector(v, layout, zero)?.iter().map(|z| z.norm_sqr()).sum())
}

/// `2 pi sqrt(x(1-x)) / M + pi^2 / M^2`.
pub fn qae_error_bound(x: f64, m: u64) -> f64 {
    let m = m as f64;
    let x = x.clamp(0.0, 1.0);
    2.0 * PI * (x * (1.0 - x)).sqrt() / m + PI * PI / (m * m)
}

/// `sin^2(M pi d) / (M^2 sin^2(pi d))`, equal to 1 at integer `d`.
fn fejer(m: f64, d: f64) -> f64 {
    let s = (PI * d).sin();
    if s.abs() < 1e-12 {
        return 1.0;
    }
    let num = (m * PI * d).sin();
    (num * num) / (m * m * s * s)
}

/// Probability of reading grid index `y` when estimating `theta = asin(sqrt x)`.
pub fn outcome_probability(y: u64, theta: f64, m: u64) -> f64 {
    let mf = m as f64;
    let yf = y as f64 / mf;
    let w = theta / PI;
    0.5 * (fejer(mf, yf - w) + fejer(mf, yf + w))
}

/// Grid estimate of `x` using `params.m` queries.
pub fn qae_estimate(x: f64, params: &QaeParams) -> Result<f64> {
    if !(-AMPLITUDE_SLACK..=1.0 + AMPLITUDE_SLACK).contains(&x) {
        return Err(Error::OutOfRange { what: "amplitude must lie in [0, 1]", value: x });
    }
    let x = x.clamp(0.0, 1.0);
    let theta = x.sqrt().asin();
    let m = params.m;
    let y = match params.mode {
        QaeMode::Exact => (m as f64 * theta / PI).round() as u64,
        QaeMode::Sample => {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = m - 1;
            for y in 0..m {
                acc += outcome_probability(y, theta, m);
                if u < acc {
                    pick = y;
                    break;
                }
            }
            pick
        }
    };
    let s = (PI * y as f64 / m as f64).sin();
    Ok(s * s)
}

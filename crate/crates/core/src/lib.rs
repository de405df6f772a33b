//! Fidelity estimation between low-rank quantum states by square-root
//! extraction and amplitude estimation, simulated on dense state vectors.
//!
//! Qubit ordering is big-endian: the first segment of a [`RegisterLayout`]
//! holds the most significant bits of a basis index.

pub mod block_encoding;
pub mod circuit;
pub mod error;
pub mod linalg;
pub mod pipeline;
pub mod qae;
pub mod sqrt;
pub mod state;
pub mod sweep;
pub mod verify;

pub use block_encoding::{
    be_error, purification_to_unitary_be, BlockEncodingSpec, Carrier, EncodedOperator, EncodingKind,
    DEFAULT_QUBIT_BUDGET,
};
pub use circuit::{Operator, RegisterOp};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, RegisterLayout, Segment, SegmentRole, C64};
pub use pipeline::{
    build_eta, build_w_sigma, estimate_fidelity, select_params, weyl_trace_bound_check, EstimationReport,
    PipelineParams, SelectMode, StageLevel,
};
pub use qae::{qae_estimate, QaeMode, QaeParams};
pub use sqrt::{build_sqrt_unitary, SimLevel, SqrtOutput, SqrtParams};
pub use state::{
    fidelity_exact, purify, random_density, trace_distance, DensityOperator, OracleCost, Purification,
};
pub use sweep::{run_sweep, SweepSpec};
pub use verify::{run_suite, SuiteReport};

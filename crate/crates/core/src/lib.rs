//! Sparse recovery by Subspace Pursuit and CoSaMP, with exhaustive
//! restricted-isometry certification, closed-form convergence bounds and
//! per-iteration audits of the inequalities behind them.
//!
//! ```
//! use pursuitlab::{make_instance, subspace_pursuit, SignalKind, StoppingRule};
//!
//! let inst = make_instance(SignalKind::ExactSparse, 32, 64, 3, 0.0, 7).unwrap();
//! let out = subspace_pursuit(&inst.phi, &inst.y, 3, &StoppingRule::default(), None).unwrap();
//! assert!(out.converged);
//! ```

pub mod audit;
pub mod bounds;
pub mod error;
pub mod linalg;
pub mod recovery;
pub mod ric;
pub mod seed;
pub mod signal;
pub mod support;

pub use audit::{audit_iteration, audit_run, count_violations, InequalityCheck, IterationAudit};
pub use bounds::{
    bounds, cosamp_bounds, delta_for_rho, dm_sp_bounds, error_envelope, lbj_sp_bounds, sp_bounds,
    sp_tail_metric_bounds, BoundReport, Family,
};
pub use error::{Error, Result};
pub use linalg::{
    columns_submatrix, least_squares_on_support, spectral_norm_symmetric, DenseMatrix, Vector,
};
pub use recovery::{
    cosamp, recover, subspace_pursuit, Algorithm, IterationRecord, RecoveryResult, StoppingRule,
    TraceLevel,
};
pub use ric::{
    exact_ric, exact_ric_with_budget, rip_sandwich_check, sampled_ric_lower_bound, RicEstimate,
    RicMode,
};
pub use signal::{
    best_s_term, instance_for_matrix, make_instance, near_isometry_matrix, restrict,
    top_k_magnitude, SignalKind, SparseInstance,
};
pub use support::SupportSet;

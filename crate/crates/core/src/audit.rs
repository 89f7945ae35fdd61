//! Per-iteration checks of the inequalities that the SP and CoSaMP
//! convergence proofs establish, evaluated on an instrumented run with a
//! certified restricted isometry constant.
//!
//! All RIC-dependent bounds use the single certified `δ` (of order `3s` for
//! SP, `4s` for CoSaMP); every lower order appearing in the proofs is
//! dominated by it. The checks are proved consequences of `δ < 1`, so a
//! violation points at a bug rather than an unlucky instance.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::bounds::{self, Family};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::recovery::{Algorithm, IterationRecord, RecoveryResult};
use crate::ric::RicEstimate;
use crate::signal::{restricted_norm, SparseInstance};
use crate::support::SupportSet;

/// Relative slack for floating-point comparison of RIC-based bounds,
/// scaled by `max(‖x_S‖₂, ‖y‖₂, ‖e′‖₂)`.
pub const AUDIT_RELATIVE_SLACK: f64 = 1e-9;

/// Tolerance factor for least-squares residual orthogonality, scaled by
/// `‖Φ‖_F ‖y‖₂`.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationAudit {
    pub n: usize,
    pub checks: Vec<InequalityCheck>,
}

impl IterationAudit {
    pub fn violations(&self) -> impl Iterator<Item = &InequalityCheck> {
        self.checks.iter().filter(|c| !c.holds)
    }
}

struct Checks {
    slack: f64,
    out: Vec<InequalityCheck>,
}

impl Checks {
    fn bound(&mut self, name: &str, lhs: f64, rhs: f64) {
        self.out.push(InequalityCheck {
            name: name.to_string(),
            lhs,
            rhs,
            holds: lhs <= rhs + self.slack,
        });
    }

    fn exact(&mut self, name: &str, lhs: f64, rhs: f64) {
        self.out.push(InequalityCheck {
            name: name.to_string(),
            lhs,
            rhs,
            holds: lhs <= rhs,
        });
    }
}

fn vectors(record: &IterationRecord) -> Result<(&Vector, &Vector)> {
    match (&record.intermediate, &record.estimate) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::arg(format!(
            "iteration {} was recorded without vectors; rerun with full tracing",
            record.n
        ))),
    }
}

/// `‖(Φ*(y − Φz))_T‖∞`.
fn gradient_on_support(instance: &SparseInstance, z: &[f64], t: &SupportSet) -> f64 {
    let r = instance.y.sub(&instance.phi.mul_vec(z));
    let g = instance.phi.tr_mul_vec(&r);
    t.iter().fold(0.0f64, |m, i| m.max(g[i].abs()))
}

/// Evaluates every checkable inequality at one iteration. `prev` is the
/// previous record, or `None` for the first iteration (`x⁰ = 0`, `S⁰ = ∅`).
pub fn audit_iteration(
    record: &IterationRecord,
    prev: Option<&IterationRecord>,
    instance: &SparseInstance,
    delta: &RicEstimate,
    algorithm: Algorithm,
) -> Result<Vec<InequalityCheck>> {
    let s = instance.s;
    let order = algorithm.ric_order_multiple() * s;
    if !delta.is_exact() {
        return Err(Error::arg("audits need an exactly certified RIC"));
    }
    if delta.s < order {
        return Err(Error::arg(format!(
            "{algorithm} audits need a RIC of order at least {order}, got {}",
            delta.s
        )));
    }
    let d = delta.value;
    if d.is_nan() || d >= 1.0 {
        return Err(Error::Domain(format!(
            "certified RIC {d} is not below 1; the RIP-based bounds do not apply"
        )));
    }
    let n_cols = instance.phi.cols();
    let (x_tilde, x_n) = vectors(record)?;
    let (x_prev, s_prev) = match prev {
        Some(p) => (vectors(p)?.1.clone(), p.pruned_support.clone()),
        None => {
            if record.n != 1 {
                return Err(Error::arg(
                    "a previous record is required after the first iteration",
                ));
            }
            (Vector::zeros(n_cols), SupportSet::empty(n_cols))
        }
    };

    let xs = instance.x_s();
    let ep = instance.e_prime_norm;
    let scale = xs.norm2().max(instance.y.norm2()).max(ep);
    let mut c = Checks {
        slack: AUDIT_RELATIVE_SLACK * scale,
        out: Vec::new(),
    };

    let merged = &record.merged_support;
    let pruned = &record.pruned_support;
    let err_prev = xs.sub(&x_prev).norm2();
    let diff_tilde = xs.sub(x_tilde);
    let err_tilde = diff_tilde.norm2();
    let diff_n = xs.sub(x_n);
    let err_n = diff_n.norm2();
    let tail_merged = restricted_norm(&xs, &merged.complement());
    let tail_n = restricted_norm(&xs, &pruned.complement());
    let tail_prev = restricted_norm(&xs, &s_prev.complement());

    let sq = |v: f64| v.sqrt();
    let tau1 = (sq(2.0 * (1.0 - d)) + sq(1.0 + d)) / (1.0 - d);
    let tau2 = sq(1.0 + d);

    // least-squares orthogonality of the residual on the solve support
    let ortho_tol = ORTHOGONALITY_TOLERANCE * instance.phi.frobenius_norm() * instance.y.norm2();
    c.exact(
        "orthogonality-merged",
        gradient_on_support(instance, x_tilde, merged),
        ortho_tol,
    );
    if algorithm == Algorithm::Sp {
        c.exact(
            "orthogonality-pruned",
            gradient_on_support(instance, x_n, pruned),
            ortho_tol,
        );
    }

    c.bound(
        "identification",
        tail_merged,
        SQRT_2 * d * err_prev + sq(2.0 * (1.0 + d)) * ep,
    );

    c.bound(
        "debias-merged",
        restricted_norm(&diff_tilde, merged),
        d * err_tilde + tau2 * ep,
    );
    c.bound(
        "metric-merged",
        err_tilde,
        sq(1.0 / (1.0 - d * d)) * tail_merged + tau2 / (1.0 - d) * ep,
    );
    c.bound(
        "merged-error",
        err_tilde,
        sq(2.0 * d * d / (1.0 - d * d)) * err_prev + tau1 * ep,
    );

    let dropped = merged.difference(pruned);
    if merged.len() > s {
        let dropped_mass = restricted_norm(&xs, &dropped);
        c.bound(
            "pruning-debias",
            dropped_mass,
            SQRT_2 * restricted_norm(&diff_tilde, merged),
        );
        c.bound(
            "pruning",
            dropped_mass,
            SQRT_2 * d * err_tilde + sq(2.0 * (1.0 + d)) * ep,
        );
    }
    c.bound(
        "tail-after-pruning",
        tail_n,
        sq(2.0 * d * d * (1.0 + d * d) / (1.0 - d * d)) * err_prev
            + SQRT_2 * (d * tau1 + 2.0 * tau2) * ep,
    );

    match algorithm {
        Algorithm::Sp => {
            c.bound(
                "debias-pruned",
                restricted_norm(&diff_n, pruned),
                d * err_n + tau2 * ep,
            );
            c.bound(
                "metric-pruned",
                err_n,
                sq(1.0 / (1.0 - d * d)) * tail_n + tau2 / (1.0 - d) * ep,
            );
        }
        Algorithm::Cosamp => {
            c.bound(
                "kept-entries",
                restricted_norm(&diff_n, pruned),
                sq(2.0 * d.powi(4) / (1.0 - d * d)) * err_prev + (d * tau1 + tau2) * ep,
            );
        }
    }

    let family = match algorithm {
        Algorithm::Sp => Family::Sp,
        Algorithm::Cosamp => Family::Cosamp,
    };
    let report = bounds::bounds(family, d)?;
    c.bound("contraction", err_n, report.one_step(err_prev, ep));
    if report.valid {
        let env = bounds::error_envelope(&report, record.n as u32, xs.norm2(), ep)?;
        c.bound("envelope", err_n, env);
    }
    if algorithm == Algorithm::Sp {
        let tail = bounds::bounds(Family::SpTailMetric, d)?;
        c.bound("tail-contraction", tail_n, tail.one_step(tail_prev, ep));
        if tail.valid {
            let env = bounds::error_envelope(&tail, record.n as u32, xs.norm2(), ep)?;
            c.bound("tail-envelope", tail_n, env);
        }
    }
    Ok(c.out)
}

/// Audits every iteration of `result` against `instance` and `delta`.
pub fn audit_run(
    result: &RecoveryResult,
    instance: &SparseInstance,
    delta: &RicEstimate,
) -> Result<Vec<IterationAudit>> {
    let mut prev: Option<&IterationRecord> = None;
    let mut out = Vec::with_capacity(result.iterations.len());
    for rec in &result.iterations {
        let checks = audit_iteration(rec, prev, instance, delta, result.algorithm)?;
        out.push(IterationAudit { n: rec.n, checks });
        prev = Some(rec);
    }
    Ok(out)
}

pub fn count_violations(audits: &[IterationAudit]) -> usize {
    audits.iter().map(|a| a.violations().count()).sum()
}

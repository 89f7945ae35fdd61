//! Convergence rates `ρ` and error coefficients `τ` for Subspace Pursuit
//! and CoSaMP as functions of a single restricted isometry constant, plus
//! the two earlier SP bounds they are compared against.
//!
//! Every family has the one-step form
//! `err(n) ≤ ρ err(n−1) + (1−ρ) τ ‖e′‖₂`, and when `ρ < 1` unrolling it gives
//! `err(n) ≤ ρⁿ ‖x_S‖₂ + τ ‖e′‖₂`. The error measure is `‖x_S − xⁿ‖₂` for
//! [`Family::Sp`], [`Family::Cosamp`] and [`Family::SpLbj`], and the tail
//! energy `‖(x_S)_{S̄ⁿ}‖₂` for [`Family::SpTailMetric`] and [`Family::SpDm`].

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// SP in terms of `δ_{3s}`, signal-error metric.
    Sp,
    /// SP in terms of `δ_{3s}`, tail-energy metric. Same `ρ` as [`Family::Sp`].
    #[serde(rename = "sp-tail")]
    SpTailMetric,
    /// CoSaMP in terms of `δ_{4s}`.
    Cosamp,
    /// An earlier, looser SP bound with every RIC order raised to `δ_{3s}`.
    SpLbj,
    /// The original SP bound, stated in the tail-energy metric.
    SpDm,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Sp,
        Family::SpTailMetric,
        Family::Cosamp,
        Family::SpLbj,
        Family::SpDm,
    ];

    /// The SP families, in the order used by side-by-side tables.
    pub const SP_FAMILIES: [Family; 4] = [
        Family::Sp,
        Family::SpTailMetric,
        Family::SpLbj,
        Family::SpDm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Sp => "sp",
            Family::SpTailMetric => "sp-tail",
            Family::Cosamp => "cosamp",
            Family::SpLbj => "sp-lbj",
            Family::SpDm => "sp-dm",
        }
    }

    /// Multiple of `s` whose RIC the family is stated in.
    pub fn ric_order_multiple(self) -> usize {
        match self {
            Family::Cosamp => 4,
            _ => 3,
        }
    }

    /// `ρ(δ)`.
    pub fn rho(self, d: f64) -> f64 {
        let d2 = d * d;
        match self {
            Family::Sp | Family::SpTailMetric => (2.0 * d2 * (1.0 + d2)).sqrt() / (1.0 - d2),
            Family::Cosamp => (2.0 * d2 * (1.0 + 2.0 * d2) / (1.0 - d2)).sqrt(),
            Family::SpLbj => d * (1.0 + d).sqrt() / (1.0 - d).sqrt() * lbj_max_term(d),
            Family::SpDm => 2.0 * d * (1.0 + d) / (1.0 - d).powi(3),
        }
    }

    /// `(1 − ρ) τ`, the per-iteration multiplier of `‖e′‖₂`.
    pub fn noise_coefficient(self, d: f64) -> f64 {
        let d2 = d * d;
        let sp_tau1 = ((2.0 * (1.0 - d)).sqrt() + (1.0 + d).sqrt()) / (1.0 - d);
        match self {
            Family::Sp => {
                (2.0 * d2 / (1.0 - d2)).sqrt() * sp_tau1
                    + (2.0 * (2.0 * (1.0 - d)).sqrt() + (1.0 + d).sqrt()) / (1.0 - d)
            }
            Family::SpTailMetric => {
                // √((1+δ)/(1−δ)) dominates the √((1+δ²)/(1−δ²)) that the
                // pruning step produces, so this remains an upper bound.
                SQRT_2 * d * (1.0 + d).sqrt() / (1.0 - d) * (((1.0 + d) / (1.0 - d)).sqrt() + 1.0)
                    + 2.0 * (2.0 * (1.0 + d)).sqrt()
                    + 2.0 * d / (1.0 - d).sqrt()
            }
            Family::Cosamp => {
                (SQRT_2 + 1.0) * d * sp_tau1 + (2.0 * SQRT_2 + 1.0) * (1.0 + d).sqrt()
            }
            Family::SpLbj => {
                let root = (1.0 - d).sqrt();
                (1.0 + d).sqrt() / (1.0 - d)
                    + 1.0 / (root * (1.0 - d))
                    + 2.0 * (1.0 + d).powi(2) / (root * (1.0 - d)) * lbj_max_term(d)
            }
            Family::SpDm => 4.0 * (1.0 + d) / (1.0 - d).powi(2),
        }
    }
}

fn lbj_max_term(d: f64) -> f64 {
    (1.0 / (1.0 - d).powi(2)).max(2.0 / (1.0 + 2.0 * d + 2.0 * d * d))
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sp" => Ok(Family::Sp),
            "sp-tail" | "sp-tail-metric" => Ok(Family::SpTailMetric),
            "cosamp" => Ok(Family::Cosamp),
            "sp-lbj" | "lbj" => Ok(Family::SpLbj),
            "sp-dm" | "dm" => Ok(Family::SpDm),
            other => Err(Error::arg(format!("unknown bound family `{other}`"))),
        }
    }
}

/// `ρ`, `τ` and thresholds for one family at one `δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub family: Family,
    pub delta: f64,
    pub rho: f64,
    /// `(1 − ρ) τ`; defined for every `δ ∈ [0, 1)`.
    pub noise_coefficient: f64,
    /// `τ`, only available while `ρ < 1`.
    pub tau: Option<f64>,
    pub valid: bool,
    /// Supremum of `δ` with `ρ < 1`.
    pub threshold_rho1: f64,
    /// The `δ` at which `ρ = 1/2`.
    pub threshold_rho_half: f64,
}

impl BoundReport {
    /// Right-hand side of the one-step recursion:
    /// `ρ · prev_error + (1 − ρ) τ · ‖e′‖₂`.
    pub fn one_step(&self, prev_error: f64, e_prime_norm: f64) -> f64 {
        self.rho * prev_error + self.noise_coefficient * e_prime_norm
    }
}

/// Evaluates `family` at `delta ∈ [0, 1)`.
pub fn bounds(family: Family, delta: f64) -> Result<BoundReport> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::arg(format!("delta must lie in [0, 1), got {delta}")));
    }
    let rho = family.rho(delta);
    let noise_coefficient = family.noise_coefficient(delta);
    let valid = rho < 1.0;
    let threshold_rho1 = match family {
        Family::Sp | Family::SpTailMetric => (5f64.sqrt() - 2.0).sqrt(),
        Family::Cosamp => 0.5,
        _ => delta_for_rho(family, 1.0)?,
    };
    Ok(BoundReport {
        family,
        delta,
        rho,
        noise_coefficient,
        tau: valid.then(|| noise_coefficient / (1.0 - rho)),
        valid,
        threshold_rho1,
        threshold_rho_half: delta_for_rho(family, 0.5)?,
    })
}

pub fn sp_bounds(delta: f64) -> Result<BoundReport> {
    bounds(Family::Sp, delta)
}

pub fn sp_tail_metric_bounds(delta: f64) -> Result<BoundReport> {
    bounds(Family::SpTailMetric, delta)
}

pub fn cosamp_bounds(delta: f64) -> Result<BoundReport> {
    bounds(Family::Cosamp, delta)
}

pub fn lbj_sp_bounds(delta: f64) -> Result<BoundReport> {
    bounds(Family::SpLbj, delta)
}

pub fn dm_sp_bounds(delta: f64) -> Result<BoundReport> {
    bounds(Family::SpDm, delta)
}

/// Bisection for the `δ ∈ [0, 1)` with `ρ(δ) = target_rho`. Every family's
/// `ρ` is continuous, increasing, zero at `δ = 0` and unbounded as `δ → 1`.
pub fn delta_for_rho(family: Family, target_rho: f64) -> Result<f64> {
    if !(target_rho > 0.0 && target_rho <= 1.0) {
        return Err(Error::Domain(format!(
            "target rho must lie in (0, 1], got {target_rho}"
        )));
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0 - 1e-12;
    if family.rho(hi) < target_rho {
        return Err(Error::Domain(format!(
            "rho = {target_rho} is not reached by {family} on [0, 1)"
        )));
    }
    for _ in 0..200 {
        if hi - lo <= 1e-15 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if family.rho(mid) < target_rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `ρⁿ ‖x_S‖₂ + τ ‖e′‖₂`.
pub fn error_envelope(
    report: &BoundReport,
    n: u32,
    x_s_norm: f64,
    e_prime_norm: f64,
) -> Result<f64> {
    match report.tau {
        Some(tau) if report.valid => Ok(report.rho.powi(n as i32) * x_s_norm + tau * e_prime_norm),
        _ => Err(Error::Domain(format!(
            "{} bound is not contractive at delta = {} (rho = {})",
            report.family, report.delta, report.rho
        ))),
    }
}

/// Both sides of `(ax+by)² + (cx+dy)² ≤ (√(a²+c²) x + (b+d) y)²` for
/// non-negative arguments.
pub fn cauchy_combination(a: f64, b: f64, c: f64, d: f64, x: f64, y: f64) -> (f64, f64) {
    let lhs = (a * x + b * y).powi(2) + (c * x + d * y).powi(2);
    let rhs = ((a * a + c * c).sqrt() * x + (b + d) * y).powi(2);
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_delta_collapses() {
        let t = 2.0 * SQRT_2 + 1.0;
        let sp = sp_bounds(0.0).unwrap();
        assert_eq!(sp.rho, 0.0);
        assert_abs_diff_eq!(sp.tau.unwrap(), t, epsilon = 1e-14);
        assert_abs_diff_eq!(
            sp_tail_metric_bounds(0.0).unwrap().tau.unwrap(),
            2.0 * SQRT_2,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(cosamp_bounds(0.0).unwrap().tau.unwrap(), t, epsilon = 1e-14);
        assert_abs_diff_eq!(
            lbj_sp_bounds(0.0).unwrap().tau.unwrap(),
            6.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            dm_sp_bounds(0.0).unwrap().tau.unwrap(),
            4.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn delta_outside_unit_interval_is_rejected() {
        assert!(sp_bounds(-0.1).is_err());
        assert!(sp_bounds(1.0).is_err());
        assert!(sp_bounds(f64::NAN).is_err());
    }

    #[test]
    fn tau_unavailable_past_threshold() {
        let r = sp_bounds(0.6).unwrap();
        assert!(!r.valid);
        assert!(r.tau.is_none());
        assert!(r.noise_coefficient.is_finite());
        assert!(error_envelope(&r, 3, 1.0, 0.0).is_err());
    }

    #[test]
    fn cosamp_rho_is_one_at_half() {
        let r = cosamp_bounds(0.5).unwrap();
        assert_abs_diff_eq!(r.rho, 1.0, epsilon = 1e-15);
        assert_eq!(r.threshold_rho1, 0.5);
    }

    #[test]
    fn delta_for_rho_domain() {
        assert!(delta_for_rho(Family::Sp, 0.0).is_err());
        assert!(delta_for_rho(Family::Sp, 1.5).is_err());
    }

    #[test]
    fn envelope_basics() {
        let r = sp_bounds(0.2).unwrap();
        assert_eq!(error_envelope(&r, 0, 2.5, 0.0).unwrap(), 2.5);
        let e10 = error_envelope(&r, 10, 1.0, 0.0).unwrap();
        let e11 = error_envelope(&r, 11, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(e11 / e10, r.rho, epsilon = 1e-12);
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
    }
}

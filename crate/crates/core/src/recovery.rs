//! Subspace Pursuit and CoSaMP with per-iteration traces.
//!
//! Both start from `S⁰ = ∅`, `x⁰ = 0` and repeat
//!
//! 1. `ΔS` = the `s` (SP) or `2s` (CoSaMP) largest entries of `Φ*(y − Φxⁿ⁻¹)`
//! 2. `S̃ⁿ = Sⁿ⁻¹ ∪ ΔS`
//! 3. `x̃ⁿ` = least squares on `S̃ⁿ`
//! 4. `Sⁿ` = the `s` largest entries of `x̃ⁿ`
//! 5. SP: `xⁿ` = least squares on `Sⁿ`; CoSaMP: `xⁿ = x̃ⁿ` restricted to `Sⁿ`
//!
//! until `‖y − Φxⁿ‖₂` drops below the stopping threshold or `n_max` is hit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{least_squares_on_support, DenseMatrix, Vector};
use crate::signal::{best_s_term, restrict, restricted_norm, top_k_magnitude, top_k_within};
use crate::support::SupportSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Sp,
    Cosamp,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sp => "sp",
            Algorithm::Cosamp => "cosamp",
        }
    }

    /// Number of indices added in the identification step, as a multiple of `s`.
    fn identification_multiple(self) -> usize {
        match self {
            Algorithm::Sp => 1,
            Algorithm::Cosamp => 2,
        }
    }

    /// RIC order (as a multiple of `s`) under which the convergence guarantee holds.
    pub fn ric_order_multiple(self) -> usize {
        match self {
            Algorithm::Sp => 3,
            Algorithm::Cosamp => 4,
        }
    }

    /// Sup of the RIC for which the algorithm's convergence rate is below 1.
    pub fn ric_threshold(self) -> f64 {
        match self {
            Algorithm::Sp => (5f64.sqrt() - 2.0).sqrt(),
            Algorithm::Cosamp => 0.5,
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sp" | "subspace-pursuit" => Ok(Algorithm::Sp),
            "cosamp" => Ok(Algorithm::Cosamp),
            other => Err(Error::arg(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Stop when `‖y − Φxⁿ‖₂ ≤ ε‖e′‖₂` (or `≤ epsilon_abs` when `‖e′‖₂` is not
/// known, signalled by a zero hint) or when `n ≥ n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub epsilon: f64,
    pub n_max: usize,
    pub e_prime_norm_hint: f64,
    pub epsilon_abs: f64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            n_max: 100,
            e_prime_norm_hint: 0.0,
            epsilon_abs: 1e-10,
        }
    }
}

impl StoppingRule {
    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn threshold(&self) -> f64 {
        if self.e_prime_norm_hint > 0.0 {
            self.epsilon * self.e_prime_norm_hint
        } else {
            self.epsilon_abs
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(Error::arg("n_max must be at least 1"));
        }
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !(ok(self.epsilon) && ok(self.e_prime_norm_hint) && ok(self.epsilon_abs)) {
            return Err(Error::arg(
                "stopping tolerances must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

/// How much of each iteration to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceLevel {
    /// Supports and norms are kept; front ends omit the per-iteration trace.
    None,
    /// Supports and norms.
    #[default]
    Norms,
    /// Also the intermediate and final vectors of every iteration.
    Full,
}

impl std::str::FromStr for TraceLevel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(TraceLevel::None),
            "norms" => Ok(TraceLevel::Norms),
            "full" => Ok(TraceLevel::Full),
            other => Err(Error::arg(format!("unknown trace level `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub n: usize,
    /// `ΔS`.
    pub delta_support: SupportSet,
    /// `S̃ⁿ`.
    pub merged_support: SupportSet,
    /// `x̃ⁿ`, kept at [`TraceLevel::Full`].
    pub intermediate: Option<Vector>,
    /// `Sⁿ`.
    pub pruned_support: SupportSet,
    /// `xⁿ`, kept at [`TraceLevel::Full`].
    pub estimate: Option<Vector>,
    /// `‖y − Φxⁿ‖₂`.
    pub residual_norm: f64,
    /// `‖x_S − xⁿ‖₂` when the true signal is known.
    pub signal_error: Option<f64>,
    /// `‖(x_S)_{S̄ⁿ}‖₂` when the true signal is known.
    pub tail_energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub algorithm: Algorithm,
    pub estimate: Vector,
    /// `supp(xⁿ)`.
    pub support: SupportSet,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
}

impl RecoveryResult {
    pub fn residual_history(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.residual_norm).collect()
    }
}

/// Subspace Pursuit with norms-level tracing (full when `truth` is supplied).
pub fn subspace_pursuit(
    phi: &DenseMatrix,
    y: &[f64],
    s: usize,
    stop: &StoppingRule,
    truth: Option<&[f64]>,
) -> Result<RecoveryResult> {
    recover(Algorithm::Sp, phi, y, s, stop, TraceLevel::Norms, truth)
}

/// CoSaMP with norms-level tracing (full when `truth` is supplied).
pub fn cosamp(
    phi: &DenseMatrix,
    y: &[f64],
    s: usize,
    stop: &StoppingRule,
    truth: Option<&[f64]>,
) -> Result<RecoveryResult> {
    recover(Algorithm::Cosamp, phi, y, s, stop, TraceLevel::Norms, truth)
}

/// Runs `algorithm`. Supplying `truth` (the full signal `x`) records the
/// signal error and tail energy against its best s-term approximation and
/// forces full tracing.
pub fn recover(
    algorithm: Algorithm,
    phi: &DenseMatrix,
    y: &[f64],
    s: usize,
    stop: &StoppingRule,
    trace: TraceLevel,
    truth: Option<&[f64]>,
) -> Result<RecoveryResult> {
    let (m, n_cols) = (phi.rows(), phi.cols());
    if y.len() != m {
        return Err(Error::arg(format!(
            "measurement length {} does not match {m} rows",
            y.len()
        )));
    }
    if s == 0 {
        return Err(Error::arg("sparsity s must be positive"));
    }
    let k = algorithm.identification_multiple() * s;
    if k > n_cols {
        return Err(Error::arg(format!(
            "{algorithm} needs {k} candidate indices but the matrix has {n_cols} columns"
        )));
    }
    let merged_max = (algorithm.identification_multiple() + 1) * s;
    if merged_max > m {
        return Err(Error::arg(format!(
            "{algorithm} solves least squares on up to {merged_max} columns but the matrix has {m} rows"
        )));
    }
    stop.validate()?;
    let truth_s = match truth {
        Some(x) if x.len() != n_cols => {
            return Err(Error::arg(
                "ground truth dimension does not match the matrix",
            ))
        }
        Some(x) => Some(best_s_term(x, s)?.1),
        None => None,
    };
    let keep_vectors = trace == TraceLevel::Full || truth_s.is_some();

    let threshold = stop.threshold();
    let mut support = SupportSet::empty(n_cols);
    let mut estimate = Vector::zeros(n_cols);
    let mut residual = Vector::from_vec(y.to_vec());
    let mut records = Vec::new();
    let mut converged = false;

    for n in 1..=stop.n_max {
        let correlation = phi.tr_mul_vec(&residual);
        let delta_support = top_k_magnitude(&correlation, k)?;
        let merged = support.union(&delta_support);
        let intermediate =
            least_squares_on_support(phi, y, &merged).map_err(|e| e.at_iteration(n))?;
        let pruned = top_k_within(&intermediate, s, &merged)?;
        let next = match algorithm {
            Algorithm::Sp => {
                least_squares_on_support(phi, y, &pruned).map_err(|e| e.at_iteration(n))?
            }
            Algorithm::Cosamp => restrict(&intermediate, &pruned)?,
        };
        residual = Vector::from_vec(
            y.iter()
                .zip(phi.mul_vec(&next).iter())
                .map(|(a, b)| a - b)
                .collect(),
        );
        let residual_norm = residual.norm2();

        let (signal_error, tail_energy) = match &truth_s {
            Some(xs) => (
                Some(xs.sub(&next).norm2()),
                Some(restricted_norm(xs, &pruned.complement())),
            ),
            None => (None, None),
        };
        records.push(IterationRecord {
            n,
            delta_support,
            merged_support: merged,
            intermediate: keep_vectors.then_some(intermediate),
            pruned_support: pruned.clone(),
            estimate: keep_vectors.then(|| next.clone()),
            residual_norm,
            signal_error,
            tail_energy,
        });
        support = pruned;
        estimate = next;
        if residual_norm <= threshold {
            converged = true;
            break;
        }
    }

    Ok(RecoveryResult {
        algorithm,
        support: estimate.support(),
        estimate,
        iterations: records,
        converged,
    })
}

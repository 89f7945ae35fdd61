//! Restricted isometry constants.
//!
//! `δ_s = max_{|S| = s} ‖Φ_S* Φ_S − I‖₂→₂`, certified by exhaustive support
//! enumeration or bounded from below by sampling supports.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, Vector};
use crate::seed::{hash64, rng_from_seed};
use crate::support::SupportSet;

/// Default cap on the number of supports [`exact_ric`] will enumerate.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;

/// Relative slack used by [`rip_sandwich_check`].
/// Absolute margin around 1 for RIP verdicts.
pub const RIP_MARGIN: f64 = 1e-12;

pub const SANDWICH_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RicMode {
    Exact,
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicEstimate {
    /// Order `s` of the constant.
    pub s: usize,
    /// Unclamped spectral-norm value; above 1 the RIP fails at this order.
    pub value: f64,
    pub mode: RicMode,
    /// A support attaining `value`.
    pub witness: SupportSet,
    pub supports_examined: u64,
}

impl RicEstimate {
    /// Whether the matrix satisfies the RIP of this order, i.e. `δ_s < 1`.
    /// Values within [`RIP_MARGIN`] of 1 count as 1: a rank-deficient block
    /// computes to `1 ± ε`.
    pub fn rip_holds(&self) -> bool {
        self.value < 1.0 - RIP_MARGIN
    }

    /// `δ_s > 1`, only possible for degenerate column sets.
    pub fn exceeds_one(&self) -> bool {
        self.value > 1.0 + RIP_MARGIN
    }

    pub fn is_exact(&self) -> bool {
        self.mode == RicMode::Exact
    }
}

/// `C(n, k)`, or `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

fn validate_order(phi: &DenseMatrix, s: usize) -> Result<()> {
    if s == 0 {
        return Err(Error::arg("RIC order must be positive"));
    }
    if s > phi.cols() {
        return Err(Error::arg(format!(
            "RIC order {s} exceeds the number of columns {}",
            phi.cols()
        )));
    }
    Ok(())
}

/// `‖G_S − I‖` for the principal submatrix of the Gram matrix on `support`.
fn support_norm(gram: &DenseMatrix, support: &[usize], work: &mut Vec<f64>) -> f64 {
    let k = support.len();
    work.clear();
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            let v = gram[(i, j)] - if a == b { 1.0 } else { 0.0 };
            work.push(v);
        }
    }
    linalg::symmetric_spectral_radius_in_place(work, k)
}

/// Keeps the larger value; equal values keep the lexicographically smaller support.
fn better(a: (f64, Vec<usize>), b: (f64, Vec<usize>)) -> (f64, Vec<usize>) {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if a.1 <= b.1 {
                a
            } else {
                b
            }
        }
    }
}

/// Exhaustive `δ_s` with the default enumeration budget.
pub fn exact_ric(phi: &DenseMatrix, s: usize) -> Result<RicEstimate> {
    exact_ric_with_budget(phi, s, DEFAULT_ENUMERATION_BUDGET)
}

/// Exhaustive `δ_s` over all `C(N, s)` supports of size exactly `s`.
///
/// Work is split by the smallest index of each support and run on the
/// current rayon pool; the reduction is deterministic (largest value, then
/// lexicographically smallest witness).
pub fn exact_ric_with_budget(phi: &DenseMatrix, s: usize, budget: u64) -> Result<RicEstimate> {
    validate_order(phi, s)?;
    let n = phi.cols();
    let combinations = binomial(n, s).unwrap_or(u128::MAX);
    if combinations > budget as u128 {
        return Err(Error::Capacity {
            combinations,
            budget,
        });
    }
    let gram = phi.gram();
    let (value, witness) = (0..=n - s)
        .into_par_iter()
        .map(|first| {
            let mut work = Vec::with_capacity(s * s);
            let mut comb: Vec<usize> = (first..first + s).collect();
            let mut best = (support_norm(&gram, &comb, &mut work), comb.clone());
            // advance positions 1..s lexicographically with comb[0] pinned
            while advance(&mut comb[1..], n) {
                let v = support_norm(&gram, &comb, &mut work);
                if v > best.0 {
                    best = (v, comb.clone());
                }
            }
            best
        })
        .reduce_with(better)
        .expect("at least one support");
    Ok(RicEstimate {
        s,
        value,
        mode: RicMode::Exact,
        witness: SupportSet::from_sorted_unchecked(witness, n),
        supports_examined: combinations as u64,
    })
}

/// Next combination (strictly increasing, values < n) in lexicographic order.
fn advance(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    for pos in (0..k).rev() {
        if comb[pos] < n - (k - pos) {
            comb[pos] += 1;
            for q in pos + 1..k {
                comb[q] = comb[q - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Lower bound on `δ_s` from `trials` uniformly sampled supports. Trial `t`
/// draws its support from the sub-seed `hash64(seed, t, 0)`, so the result
/// does not depend on scheduling.
pub fn sampled_ric_lower_bound(
    phi: &DenseMatrix,
    s: usize,
    trials: u64,
    seed: u64,
) -> Result<RicEstimate> {
    validate_order(phi, s)?;
    if trials == 0 {
        return Err(Error::arg("trials must be positive"));
    }
    let n = phi.cols();
    let gram = phi.gram();
    let mut draws: Vec<(f64, Vec<usize>)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(hash64(seed, t, 0));
            let mut support = rand::seq::index::sample(&mut rng, n, s).into_vec();
            support.sort_unstable();
            let mut work = Vec::with_capacity(s * s);
            (support_norm(&gram, &support, &mut work), support)
        })
        .collect();
    let (value, witness) = draws.iter().cloned().reduce(better).expect("trials > 0");
    draws.sort_by(|a, b| a.1.cmp(&b.1));
    draws.dedup_by(|a, b| a.1 == b.1);
    Ok(RicEstimate {
        s,
        value,
        mode: RicMode::LowerBound,
        witness: SupportSet::from_sorted_unchecked(witness, n),
        supports_examined: draws.len() as u64,
    })
}

/// Checks `(1−δ)‖x‖² ≤ ‖Φx‖² ≤ (1+δ)‖x‖²` with a relative slack of
/// [`SANDWICH_SLACK`].
pub fn rip_sandwich_check(phi: &DenseMatrix, x: &[f64], delta: f64) -> bool {
    debug_assert_eq!(x.len(), phi.cols());
    let xx = linalg::dot(x, x);
    let px = phi.mul_vec(x);
    let pp = px.dot(&px);
    let slack = SANDWICH_SLACK * xx;
    (1.0 - delta) * xx - slack <= pp && pp <= (1.0 + delta) * xx + slack
}

/// `|⟨u, (I − Φ*Φ) v⟩|`.
pub fn inner_product_deviation(phi: &DenseMatrix, u: &[f64], v: &[f64]) -> f64 {
    let pu = phi.mul_vec(u);
    let pv = phi.mul_vec(v);
    (linalg::dot(u, v) - pu.dot(&pv)).abs()
}

/// `‖((I − Φ*Φ) v)_U‖₂`.
pub fn restricted_deviation_norm(phi: &DenseMatrix, v: &[f64], u: &SupportSet) -> f64 {
    let d = deviation(phi, v);
    crate::signal::restricted_norm(&d, u)
}

/// `(I − Φ*Φ) v`.
pub fn deviation(phi: &DenseMatrix, v: &[f64]) -> Vector {
    let gv = phi.tr_mul_vec(&phi.mul_vec(v));
    Vector::from_vec(v.iter().zip(gv.iter()).map(|(a, b)| a - b).collect())
}

/// `‖(Φ* e)_U‖₂`.
pub fn noise_correlation_norm(phi: &DenseMatrix, e: &[f64], u: &SupportSet) -> f64 {
    crate::signal::restricted_norm(&phi.tr_mul_vec(e), u)
}

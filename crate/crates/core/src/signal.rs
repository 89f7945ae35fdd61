//! Sparse signals, best s-term approximation and the measurement model
//! `y = Φx + e = Φx_S + e′`, plus seeded generation of test instances.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Vector};
use crate::seed::{rng_from_seed, Rng};
use crate::support::SupportSet;

/// Smallest magnitude of a planted nonzero entry.
pub const MIN_NONZERO_MAGNITUDE: f64 = 0.1;
/// Largest magnitude of a planted nonzero entry.
pub const MAX_NONZERO_MAGNITUDE: f64 = 1.0;
/// Bound on the dense perturbation added to almost-sparse signals.
pub const TAIL_MAGNITUDE: f64 = 0.01;

/// Keeps the entries of `x` indexed by `t` and zeroes the rest.
pub fn restrict(x: &[f64], t: &SupportSet) -> Result<Vector> {
    if t.universe() != x.len() {
        return Err(Error::arg(format!(
            "support universe {} does not match vector dimension {}",
            t.universe(),
            x.len()
        )));
    }
    let mut out = vec![0.0; x.len()];
    for i in t.iter() {
        out[i] = x[i];
    }
    Ok(Vector::from_vec(out))
}

/// Norm of `x` restricted to `t` without materializing the restriction.
pub(crate) fn restricted_norm(x: &[f64], t: &SupportSet) -> f64 {
    crate::linalg::norm2(&t.iter().map(|i| x[i]).collect::<Vec<_>>())
}

/// The `k` indices with largest `|x[i]|`; ties go to the smaller index.
pub fn top_k_magnitude(x: &[f64], k: usize) -> Result<SupportSet> {
    if k > x.len() {
        return Err(Error::arg(format!(
            "cannot select {k} indices from a vector of dimension {}",
            x.len()
        )));
    }
    Ok(top_k_among(x, k, 0..x.len()))
}

/// Like [`top_k_magnitude`] but only ranks indices inside `within`.
pub fn top_k_within(x: &[f64], k: usize, within: &SupportSet) -> Result<SupportSet> {
    if k > within.len() {
        return Err(Error::arg(format!(
            "cannot select {k} indices from a support of size {}",
            within.len()
        )));
    }
    Ok(top_k_among(x, k, within.iter()))
}

fn top_k_among(x: &[f64], k: usize, candidates: impl Iterator<Item = usize>) -> SupportSet {
    let mut idx: Vec<usize> = candidates.collect();
    let by_magnitude = |a: &usize, b: &usize| x[*b].abs().total_cmp(&x[*a].abs()).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k, by_magnitude);
        idx.truncate(k);
    }
    idx.sort_unstable();
    SupportSet::from_sorted_unchecked(idx, x.len())
}

/// Best s-term approximation: `(S, x_S)` with `S` the `s` largest-magnitude
/// positions of `x`.
pub fn best_s_term(x: &[f64], s: usize) -> Result<(SupportSet, Vector)> {
    let support = top_k_magnitude(x, s)?;
    let xs = restrict(x, &support)?;
    Ok((support, xs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    /// Exactly `s` nonzeros, magnitudes uniform in `[0.1, 1]`, random signs.
    ExactSparse,
    /// An exact-sparse signal plus a uniform `[-0.01, 0.01]` perturbation on
    /// every coordinate.
    AlmostSparse,
}

impl std::str::FromStr for SignalKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-sparse" | "exact" => Ok(Self::ExactSparse),
            "almost-sparse" | "almost" => Ok(Self::AlmostSparse),
            other => Err(Error::arg(format!("unknown signal kind `{other}`"))),
        }
    }
}

/// One draw of the model `y = Φx + e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseInstance {
    pub phi: DenseMatrix,
    pub x: Vector,
    pub s: usize,
    pub e: Vector,
    pub y: Vector,
    /// Best s-term support `S` of `x`.
    pub s_support: SupportSet,
    /// `‖Φx_{S̄} + e‖₂`.
    pub e_prime_norm: f64,
}

impl SparseInstance {
    /// Assembles an instance from its parts, computing `y`, `S` and `‖e′‖₂`.
    pub fn from_parts(phi: DenseMatrix, x: Vector, s: usize, e: Vector) -> Result<Self> {
        if x.dim() != phi.cols() || e.dim() != phi.rows() {
            return Err(Error::arg("instance dimensions do not match the matrix"));
        }
        let y = phi.mul_vec(&x).add(&e);
        let (s_support, _) = best_s_term(&x, s)?;
        let tail = restrict(&x, &s_support.complement())?;
        let e_prime_norm = phi.mul_vec(&tail).add(&e).norm2();
        Ok(Self {
            phi,
            x,
            s,
            e,
            y,
            s_support,
            e_prime_norm,
        })
    }

    /// `x_S`.
    pub fn x_s(&self) -> Vector {
        restrict(&self.x, &self.s_support).expect("support built from x")
    }

    /// `e′ = Φx_{S̄} + e = y − Φx_S`.
    pub fn e_prime(&self) -> Vector {
        self.y.sub(&self.phi.mul_vec(&self.x_s()))
    }
}

/// i.i.d. `N(0, 1/m)` entries, drawn row-major.
pub fn gaussian_matrix(m: usize, n: usize, rng: &mut Rng) -> DenseMatrix {
    let scale = 1.0 / (m as f64).sqrt();
    let data = (0..m * n)
        .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, rng))
        .collect::<Vec<f64>>();
    DenseMatrix::from_raw(m, n, data)
}

/// `Q + ε G`: the first `n` columns of a random `m x m` orthogonal matrix
/// plus a scaled `N(0, 1/m)` perturbation. Requires `n ≤ m`. Small
/// perturbations give matrices whose restricted isometry constants sit
/// below the recovery thresholds at desk scale, which plain Gaussian
/// matrices do not reach.
pub fn near_isometry_matrix(
    m: usize,
    n: usize,
    perturbation: f64,
    seed: u64,
) -> Result<DenseMatrix> {
    if n > m || n == 0 {
        return Err(Error::arg(format!(
            "near-isometry matrices need 0 < N <= m, got m={m}, N={n}"
        )));
    }
    if !perturbation.is_finite() || perturbation < 0.0 {
        return Err(Error::arg("perturbation must be finite and non-negative"));
    }
    let mut rng = rng_from_seed(seed);
    let basis = orthonormal_columns(&gaussian_matrix(m, n, &mut rng));
    let noise = gaussian_matrix(m, n, &mut rng);
    let data = basis
        .as_slice()
        .iter()
        .zip(noise.as_slice())
        .map(|(q, g)| q + perturbation * g)
        .collect();
    Ok(DenseMatrix::from_raw(m, n, data))
}

/// Modified Gram-Schmidt (applied twice) on the columns of `a`.
fn orthonormal_columns(a: &DenseMatrix) -> DenseMatrix {
    let (m, n) = (a.rows(), a.cols());
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    for j in 0..n {
        for _pass in 0..2 {
            for k in 0..j {
                let proj = crate::linalg::dot(&cols[k], &cols[j]);
                let (head, tail) = cols.split_at_mut(j);
                for (v, q) in tail[0].iter_mut().zip(&head[k]) {
                    *v -= proj * q;
                }
            }
        }
        let nrm = crate::linalg::norm2(&cols[j]);
        cols[j].iter_mut().for_each(|v| *v /= nrm);
    }
    let mut data = vec![0.0; m * n];
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            data[i * n + j] = *v;
        }
    }
    DenseMatrix::from_raw(m, n, data)
}

fn check_dims(m: usize, n: usize, s: usize, noise_sigma: f64) -> Result<()> {
    if s == 0 {
        return Err(Error::arg("sparsity s must be positive"));
    }
    if s > m {
        return Err(Error::arg(format!("sparsity s={s} exceeds m={m}")));
    }
    if s > n {
        return Err(Error::arg(format!("sparsity s={s} exceeds N={n}")));
    }
    if !noise_sigma.is_finite() || noise_sigma < 0.0 {
        return Err(Error::arg("noise_sigma must be finite and non-negative"));
    }
    Ok(())
}

fn draw_signal(
    phi: DenseMatrix,
    kind: SignalKind,
    s: usize,
    noise_sigma: f64,
    rng: &mut Rng,
) -> Result<SparseInstance> {
    let (m, n) = (phi.rows(), phi.cols());
    let mut support = rand::seq::index::sample(rng, n, s).into_vec();
    support.sort_unstable();
    let mut x = vec![0.0; n];
    for &i in &support {
        let mag = rng.random_range(MIN_NONZERO_MAGNITUDE..=MAX_NONZERO_MAGNITUDE);
        x[i] = if rng.random::<bool>() { mag } else { -mag };
    }
    if kind == SignalKind::AlmostSparse {
        for v in x.iter_mut() {
            *v += rng.random_range(-TAIL_MAGNITUDE..=TAIL_MAGNITUDE);
        }
    }
    let e: Vec<f64> = (0..m)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            noise_sigma * z
        })
        .collect();
    SparseInstance::from_parts(phi, Vector::from_vec(x), s, Vector::from_vec(e))
}

/// Gaussian `m x N` matrix with variance `1/m`, an s-sparse (or almost
/// sparse) signal on a uniformly random support and `N(0, σ²)` noise, all
/// drawn from one ChaCha8 stream seeded by `seed`.
pub fn make_instance(
    kind: SignalKind,
    m: usize,
    n: usize,
    s: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<SparseInstance> {
    check_dims(m, n, s, noise_sigma)?;
    if m > n {
        return Err(Error::arg(format!("expected m <= N, got m={m}, N={n}")));
    }
    let mut rng = rng_from_seed(seed);
    let phi = gaussian_matrix(m, n, &mut rng);
    draw_signal(phi, kind, s, noise_sigma, &mut rng)
}

/// Draws a signal and noise for a caller-supplied matrix.
pub fn instance_for_matrix(
    phi: &DenseMatrix,
    kind: SignalKind,
    s: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<SparseInstance> {
    check_dims(phi.rows(), phi.cols(), s, noise_sigma)?;
    let mut rng = rng_from_seed(seed);
    draw_signal(phi.clone(), kind, s, noise_sigma, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restrict_examples() {
        let t = SupportSet::new(vec![1], 3).unwrap();
        assert_eq!(
            restrict(&[1.0, -2.0, 3.0], &t).unwrap().as_slice(),
            &[0.0, -2.0, 0.0]
        );
        let full = SupportSet::full(3);
        assert_eq!(
            restrict(&[1.0, -2.0, 3.0], &full).unwrap().as_slice(),
            &[1.0, -2.0, 3.0]
        );
        assert!(restrict(&[1.0, 2.0], &t).is_err());
    }

    #[test]
    fn top_k_examples() {
        assert_eq!(
            top_k_magnitude(&[3.0, -5.0, 2.0], 2).unwrap().indices(),
            &[0, 1]
        );
        assert_eq!(
            top_k_magnitude(&[1.0, 1.0, 1.0], 2).unwrap().indices(),
            &[0, 1]
        );
        assert!(top_k_magnitude(&[1.0], 2).is_err());
        assert!(top_k_magnitude(&[1.0, 2.0], 0).unwrap().is_empty());
    }

    #[test]
    fn top_k_within_ignores_outside() {
        let within = SupportSet::new(vec![0, 2, 3], 5).unwrap();
        let x = [0.5, 9.0, 0.0, -0.7, 4.0];
        assert_eq!(top_k_within(&x, 2, &within).unwrap().indices(), &[0, 3]);
        // zero entries inside the support are still eligible
        assert_eq!(top_k_within(&x, 3, &within).unwrap(), within);
    }

    #[test]
    fn best_s_term_example() {
        let (s, xs) = best_s_term(&[0.1, 9.0, -0.2, 4.0], 2).unwrap();
        assert_eq!(s.indices(), &[1, 3]);
        assert_eq!(xs.as_slice(), &[0.0, 9.0, 0.0, 4.0]);
    }

    #[test]
    fn noiseless_exact_instance_has_zero_perturbation() {
        let inst = make_instance(SignalKind::ExactSparse, 10, 20, 3, 0.0, 5).unwrap();
        assert_eq!(inst.e_prime_norm, 0.0);
        assert_eq!(inst.x.support(), inst.s_support);
        assert!(inst
            .x
            .iter()
            .filter(|v| **v != 0.0)
            .all(|v| (0.1..=1.0).contains(&v.abs())));
    }

    #[test]
    fn make_instance_validates() {
        assert!(make_instance(SignalKind::ExactSparse, 4, 10, 5, 0.0, 1).is_err());
        assert!(make_instance(SignalKind::ExactSparse, 12, 10, 2, 0.0, 1).is_err());
        assert!(make_instance(SignalKind::ExactSparse, 4, 10, 2, -1.0, 1).is_err());
    }

    #[test]
    fn near_isometry_without_perturbation_is_orthonormal() {
        let phi = near_isometry_matrix(8, 5, 0.0, 3).unwrap();
        let g = phi.gram();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - want).abs() < 1e-13);
            }
        }
        assert!(near_isometry_matrix(4, 5, 0.1, 3).is_err());
    }
}

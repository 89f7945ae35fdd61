//! Small dense real linear algebra: row-major matrices, column submatrices,
//! least squares restricted to a support, and symmetric spectral norms.
//!
//! Everything here targets desk-scale problems (a few hundred rows and
//! columns at most), so the kernels are plain loops over row-major storage.

use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::support::SupportSet;

/// Relative threshold on the QR diagonal below which a column submatrix is
/// declared rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Relative asymmetry accepted by [`spectral_norm_symmetric`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// A finite real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg(format!("vector entry {i} is not finite")));
        }
        Ok(Self(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// Internal constructor for arithmetic results that are finite by construction.
    pub(crate) fn from_vec(entries: Vec<f64>) -> Self {
        Self(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, factor: f64) -> Vector {
        Vector(self.0.iter().map(|v| v * factor).collect())
    }

    /// Indices of the nonzero entries.
    pub fn support(&self) -> SupportSet {
        let idx = (0..self.dim()).filter(|&i| self.0[i] != 0.0).collect();
        SupportSet::from_sorted_unchecked(idx, self.dim())
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    // scaled to avoid overflow on extreme inputs
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * a.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

/// Dense real `rows x cols` matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::arg("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::arg(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg(format!(
                "matrix entry ({}, {}) is not finite",
                k / cols,
                k % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::arg("ragged rows"));
        }
        Self::new(rows.len(), ncols, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols + j])
            .collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Self::from_raw(self.cols, self.rows, data)
    }

    /// `Φ x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vector {
        debug_assert_eq!(x.len(), self.cols);
        Vector::from_vec((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `Φ* r`.
    pub fn tr_mul_vec(&self, r: &[f64]) -> Vector {
        debug_assert_eq!(r.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &ri) in r.iter().enumerate() {
            if ri == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * ri;
            }
        }
        Vector::from_vec(out)
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::arg(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut data = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            let out = &mut data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                for (o, b) in out.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(Self::from_raw(self.rows, other.cols, data))
    }

    /// Gram matrix `Φ* Φ` (cols x cols).
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut g = vec![0.0; n * n];
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..n {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..n {
                    g[a * n + b] += ra * r[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                g[a * n + b] = g[b * n + a];
            }
        }
        Self::from_raw(n, n, g)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

fn check_support(phi: &DenseMatrix, t: &SupportSet) -> Result<()> {
    match t.indices().last() {
        Some(&last) if last >= phi.cols() => Err(Error::arg(format!(
            "support index {last} out of range for {} columns",
            phi.cols()
        ))),
        _ => Ok(()),
    }
}

/// `Φ_T`: the columns of `phi` listed in `t`, in ascending order.
pub fn columns_submatrix(phi: &DenseMatrix, t: &SupportSet) -> Result<DenseMatrix> {
    check_support(phi, t)?;
    let k = t.len();
    let mut data = Vec::with_capacity(phi.rows() * k);
    for i in 0..phi.rows() {
        let row = phi.row(i);
        data.extend(t.iter().map(|j| row[j]));
    }
    Ok(DenseMatrix::from_raw(phi.rows(), k, data))
}

/// Minimizes `‖y − Φz‖₂` over `z` with `supp(z) ⊆ t` using a Householder QR
/// factorization of `Φ_t`. Entries of the result outside `t` are exactly zero.
pub fn least_squares_on_support(phi: &DenseMatrix, y: &[f64], t: &SupportSet) -> Result<Vector> {
    if y.len() != phi.rows() {
        return Err(Error::arg(format!(
            "measurement length {} does not match {} rows",
            y.len(),
            phi.rows()
        )));
    }
    check_support(phi, t)?;
    let mut z = vec![0.0; phi.cols()];
    if t.is_empty() {
        return Ok(Vector::from_vec(z));
    }
    let singular = || Error::Singular {
        support: t.clone(),
        iteration: None,
    };
    if t.len() > phi.rows() {
        return Err(singular());
    }
    let coef = householder_solve(columns_submatrix(phi, t)?, y).ok_or_else(singular)?;
    for (j, c) in t.iter().zip(coef) {
        z[j] = c;
    }
    Ok(Vector::from_vec(z))
}

/// Solves the full-column-rank least-squares problem `min ‖a c − b‖` for a
/// tall `a`. Returns `None` when the R diagonal falls below the rank tolerance.
#[allow(clippy::needless_range_loop)]
fn householder_solve(mut a: DenseMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let (m, k) = (a.rows, a.cols);
    let mut rhs = b.to_vec();
    let mut diag = vec![0.0; k];
    let mut v = vec![0.0; m];
    for j in 0..k {
        let col_norm = norm2(&(j..m).map(|i| a.data[i * k + j]).collect::<Vec<_>>());
        if col_norm == 0.0 {
            return None;
        }
        let x0 = a.data[j * k + j];
        let alpha = if x0 >= 0.0 { -col_norm } else { col_norm };
        for i in j..m {
            v[i] = a.data[i * k + j];
        }
        v[j] -= alpha;
        let vnorm2: f64 = v[j..m].iter().map(|x| x * x).sum();
        diag[j] = alpha;
        if vnorm2 > 0.0 {
            for c in j..k {
                let s: f64 = (j..m).map(|i| v[i] * a.data[i * k + c]).sum();
                let f = 2.0 * s / vnorm2;
                for i in j..m {
                    a.data[i * k + c] -= f * v[i];
                }
            }
            let s: f64 = (j..m).map(|i| v[i] * rhs[i]).sum();
            let f = 2.0 * s / vnorm2;
            for i in j..m {
                rhs[i] -= f * v[i];
            }
        }
    }
    let largest = diag.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    let smallest = diag.iter().fold(f64::INFINITY, |acc, d| acc.min(d.abs()));
    if largest.is_nan() || largest <= 0.0 || smallest < RANK_TOLERANCE * largest {
        return None;
    }
    let mut c = vec![0.0; k];
    for j in (0..k).rev() {
        let mut s = rhs[j];
        for l in j + 1..k {
            s -= a.data[j * k + l] * c[l];
        }
        c[j] = s / diag[j];
    }
    Some(c)
}

/// Largest eigenvalue magnitude of a symmetric matrix, i.e. its spectral norm.
pub fn spectral_norm_symmetric(g: &DenseMatrix) -> Result<f64> {
    if !g.is_square() {
        return Err(Error::arg(format!(
            "spectral norm needs a square matrix, got {}x{}",
            g.rows(),
            g.cols()
        )));
    }
    let n = g.rows();
    let scale = g.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in 0..i {
            if (g[(i, j)] - g[(j, i)]).abs() > SYMMETRY_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::arg(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    let mut work = g.data.clone();
    Ok(symmetric_spectral_radius_in_place(&mut work, n))
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(g: &DenseMatrix) -> Result<Vec<f64>> {
    if !g.is_square() {
        return Err(Error::arg("eigenvalues need a square matrix"));
    }
    let n = g.rows();
    let mut work = g.data.clone();
    jacobi_eigenvalues(&mut work, n);
    let mut ev: Vec<f64> = (0..n).map(|i| work[i * n + i]).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

pub(crate) fn symmetric_spectral_radius_in_place(work: &mut [f64], n: usize) -> f64 {
    jacobi_eigenvalues(work, n);
    (0..n).fold(0.0f64, |m, i| m.max(work[i * n + i].abs()))
}

/// Cyclic Jacobi rotations; on return the diagonal of `a` holds the
/// eigenvalues. `a` is treated as symmetric (upper triangle mirrored).
fn jacobi_eigenvalues(a: &mut [f64], n: usize) {
    if n <= 1 {
        return;
    }
    let total: f64 = a.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off <= 1e-32 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }
}

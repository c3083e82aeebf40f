//! Dense real matrices and the handful of statistics the recognizer needs:
//! column means, mean-centering, sample covariance and a symmetric
//! eigendecomposition.
//!
//! Columns are variables and rows are observations throughout, so the
//! covariance of a `P x Q` region image is `Q x Q`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Deref, Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Jacobi stops once the off-diagonal Frobenius norm falls to this fraction
/// of the input's Frobenius norm.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Relative tolerance for accepting a matrix as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Components within this relative margin of the largest magnitude count as
/// tied when choosing an eigenvector's sign.
const SIGN_TIE_MARGIN: f64 = 1e-9;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        check_finite(&data)?;
        Ok(Vector(data))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Flips the vector so its largest-magnitude component is non-negative.
    /// Near-ties resolve to the lowest index.
    pub fn sign_normalized(mut self) -> Self {
        let max_abs = self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if max_abs > 0.0 {
            let pivot = self
                .0
                .iter()
                .position(|x| x.abs() >= max_abs * (1.0 - SIGN_TIE_MARGIN))
                .expect("max component exists");
            if self.0[pivot] < 0.0 {
                self.0.iter_mut().for_each(|x| *x = -*x);
            }
        }
        // -0.0 would make bitwise comparisons of equal bases fail
        self.0.iter_mut().for_each(|x| *x += 0.0);
        self
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape(format!("empty {rows}x{cols} matrix")));
        }
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("ragged rows"));
        }
        Matrix::new(rows.len(), cols, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub(crate) fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} matrix by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry magnitude.
    fn asymmetry(&self) -> f64 {
        let scale = self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// One eigenvalue with its unit, sign-normalized eigenvector.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vector,
}

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Mean of each column.
pub fn column_mean(m: &Matrix) -> Vector {
    let mut sums = vec![0.0; m.cols];
    for i in 0..m.rows {
        for (s, x) in sums.iter_mut().zip(m.row(i)) {
            *s += x;
        }
    }
    let n = m.rows as f64;
    Vector(sums.into_iter().map(|s| s / n).collect())
}

/// Subtracts each column's mean from that column.
pub fn center(m: &Matrix) -> Matrix {
    let mean = column_mean(m);
    let mut out = m.clone();
    for row in out.data.chunks_exact_mut(m.cols) {
        for (x, mu) in row.iter_mut().zip(mean.iter()) {
            *x -= mu;
        }
    }
    out
}

/// Sample covariance of the columns, with an `N - 1` denominator.
pub fn covariance(m: &Matrix) -> Result<Matrix> {
    if m.rows < 2 {
        return Err(Error::DegenerateSample { rows: m.rows });
    }
    let centered = center(m);
    let q = m.cols;
    let denom = (m.rows - 1) as f64;
    let mut cov = Matrix::zeros(q, q);
    for i in 0..centered.rows {
        let row = centered.row(i);
        for j in 0..q {
            let rj = row[j];
            if rj == 0.0 {
                continue;
            }
            for (c, rk) in cov.data[j * q + j..(j + 1) * q].iter_mut().zip(&row[j..]) {
                *c += rj * rk;
            }
        }
    }
    for j in 0..q {
        for k in j..q {
            let v = cov.data[j * q + k] / denom;
            cov.data[j * q + k] = v;
            cov.data[k * q + j] = v;
        }
    }
    Ok(cov)
}

/// All eigenpairs of a symmetric matrix, eigenvalue-descending.
///
/// Uses cyclic Jacobi rotations. Exactly equal eigenvalues are ordered by
/// their (sign-normalized) vectors, lexicographically descending, so the
/// output is a pure function of the input bits.
pub fn eigen_symmetric(c: &Matrix) -> Result<Vec<EigenPair>> {
    if !c.is_square() {
        return Err(Error::shape(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            c.rows, c.cols
        )));
    }
    let asym = c.asymmetry();
    if asym > SYMMETRY_TOLERANCE {
        return Err(Error::shape(format!(
            "matrix is not symmetric (relative asymmetry {asym:e})"
        )));
    }
    let n = c.rows;
    let mut a = c.clone();
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let mut vt = Matrix::identity(n);
    jacobi_sweeps(&mut a, &mut vt)?;

    let mut pairs: Vec<EigenPair> = (0..n)
        .map(|k| EigenPair {
            value: a[(k, k)],
            vector: Vector(vt.row(k).to_vec()).sign_normalized(),
        })
        .collect();
    pairs.sort_by(|x, y| {
        y.value
            .total_cmp(&x.value)
            .then_with(|| lexicographic(&y.vector, &x.vector))
    });
    Ok(pairs)
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows;
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Diagonalizes `a` in place. Row `k` of `vt` accumulates eigenvector `k`.
fn jacobi_sweeps(a: &mut Matrix, vt: &mut Matrix) -> Result<()> {
    let n = a.rows;
    let threshold = JACOBI_TOLERANCE * a.frobenius_norm();
    let mut off = off_diagonal_norm(a);
    // entries this small cannot keep the off-diagonal norm above threshold
    let negligible = threshold / n as f64;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off <= threshold {
            return Ok(());
        }
        for p in 0..n {
            for q in p + 1..n {
                if a.data[p * n + q].abs() > negligible {
                    rotate(a, vt, p, q);
                }
            }
        }
        off = off_diagonal_norm(a);
    }
    if off <= threshold {
        Ok(())
    } else {
        Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
            off_norm: off,
        })
    }
}

/// Applies the rotation that annihilates `a[p][q]` (`p < q`).
fn rotate(a: &mut Matrix, vt: &mut Matrix, p: usize, q: usize) {
    let n = a.rows;
    let apq = a.data[p * n + q];
    let app = a.data[p * n + p];
    let aqq = a.data[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    // rows p and q are contiguous; a symmetric matrix's columns mirror them
    {
        let (head, tail) = a.data.split_at_mut(q * n);
        let row_p = &mut head[p * n..(p + 1) * n];
        let row_q = &mut tail[..n];
        for r in 0..n {
            let arp = row_p[r];
            let arq = row_q[r];
            row_p[r] = arp - s * (arq + tau * arp);
            row_q[r] = arq + s * (arp - tau * arq);
        }
        row_p[p] = app - t * apq;
        row_q[q] = aqq + t * apq;
        row_p[q] = 0.0;
        row_q[p] = 0.0;
    }
    for r in 0..n {
        if r != p && r != q {
            a.data[r * n + p] = a.data[p * n + r];
            a.data[r * n + q] = a.data[q * n + r];
        }
    }
    a.data[q * n + p] = 0.0;
    a.data[p * n + q] = 0.0;

    let (head, tail) = vt.data.split_at_mut(q * n);
    let vp = &mut head[p * n..(p + 1) * n];
    let vq = &mut tail[..n];
    for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = xp - s * (xq + tau * xp);
        *y = xq + s * (xp - tau * xq);
    }
}

/// The first `min(k, len)` pairs. A shorter result means the input had
/// fewer than `k` pairs; callers decide whether that is an error.
pub fn top_k(pairs: &[EigenPair], k: usize) -> Result<Vec<EigenPair>> {
    if k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    Ok(pairs.iter().take(k).cloned().collect())
}

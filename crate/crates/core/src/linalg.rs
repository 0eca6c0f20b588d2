//! Dense linear-algebra kernels.
//!
//! Everything here works on small, dense, row-major `f64` matrices. The hot
//! path of the solvers calls [`ldl_factor`] / [`ldl_solve`] on caller-owned
//! buffers so that an iteration does not allocate.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative pivot threshold: a pivot `d_k <= PIVOT_TOL * trace / m` is rejected.
pub const PIVOT_TOL: f64 = 1e-12;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row slices; all rows must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "mul_vec dimension");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `self^T * v`.
    pub fn tmul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "tmul_vec dimension");
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Induced infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|a| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, a| m.max(a.abs()))
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|a| a.abs()).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// In-place LDL^T factorization of the symmetric `n x n` matrix stored
/// row-major in `a`. Only the lower triangle is read. On return the strict
/// lower triangle holds the unit factor and the diagonal holds `D`.
pub fn ldl_factor(a: &mut [f64], n: usize) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
    let threshold = PIVOT_TOL * trace / n as f64;
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(Error::NotPositiveDefinite {
            index: 0,
            pivot: trace,
            threshold,
        });
    }
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            let l = a[j * n + k];
            d -= l * l * a[k * n + k];
        }
        if !(d > threshold) {
            return Err(Error::NotPositiveDefinite {
                index: j,
                pivot: d,
                threshold,
            });
        }
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k] * a[k * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    Ok(())
}

/// Solves `L D L^T x = rhs` in place using a factor produced by [`ldl_factor`].
pub fn ldl_solve(f: &[f64], n: usize, rhs: &mut [f64]) {
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s -= f[i * n + k] * rhs[k];
        }
        rhs[i] = s;
    }
    for i in 0..n {
        rhs[i] /= f[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for k in (i + 1)..n {
            s -= f[k * n + i] * rhs[k];
        }
        rhs[i] = s;
    }
}

/// LDL^T factorization of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactorization {
    n: usize,
    factor: Vec<f64>,
}

impl SpdFactorization {
    pub fn new(l: &Matrix) -> Result<Self> {
        if l.rows() != l.cols() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                l.rows(),
                l.cols()
            )));
        }
        let n = l.rows();
        let mut factor = l.as_slice().to_vec();
        ldl_factor(&mut factor, n)?;
        Ok(Self { n, factor })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        assert_eq!(rhs.len(), self.n, "rhs dimension");
        ldl_solve(&self.factor, self.n, rhs);
    }

    /// Multiplies the factors back together.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.n;
        let unit = |i: usize, k: usize| -> f64 {
            match i.cmp(&k) {
                std::cmp::Ordering::Equal => 1.0,
                std::cmp::Ordering::Greater => self.factor[i * n + k],
                std::cmp::Ordering::Less => 0.0,
            }
        };
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..=i.min(j))
                    .map(|k| unit(i, k) * self.factor[k * n + k] * unit(j, k))
                    .sum();
            }
        }
        out
    }
}

/// Solves `l * p = rhs` for symmetric positive-definite `l`.
pub fn spd_solve(l: &Matrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != l.rows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs has length {}, matrix is {}x{}",
            rhs.len(),
            l.rows(),
            l.cols()
        )));
    }
    Ok(SpdFactorization::new(l)?.solve(rhs))
}

/// Householder QR with column pivoting of an `r x c` matrix.
struct PivotedQr {
    rows: usize,
    /// Householder vectors, each of length `rows` (zero above its pivot row).
    reflectors: Vec<Vec<f64>>,
    rank: usize,
}

impl PivotedQr {
    fn new(a: &Matrix) -> Self {
        let (rows, cols) = (a.rows(), a.cols());
        let mut work = a.clone();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let tol = 1e-12 * scale * (rows.max(cols) as f64);
        let mut perm: Vec<usize> = (0..cols).collect();
        let mut reflectors = Vec::new();
        let mut rank = 0;
        for k in 0..rows.min(cols) {
            let col_norm =
                |w: &Matrix, j: usize| (k..rows).map(|i| w[(i, j)] * w[(i, j)]).sum::<f64>();
            let (best, best_norm) =
                (k..cols)
                    .map(|j| (j, col_norm(&work, j)))
                    .fold(
                        (k, -1.0),
                        |acc, (j, v)| if v > acc.1 { (j, v) } else { acc },
                    );
            if best_norm.sqrt() <= tol {
                break;
            }
            if best != k {
                for i in 0..rows {
                    let tmp = work[(i, k)];
                    work[(i, k)] = work[(i, best)];
                    work[(i, best)] = tmp;
                }
                perm.swap(k, best);
            }
            let alpha = {
                let nrm = best_norm.sqrt();
                if work[(k, k)] >= 0.0 {
                    -nrm
                } else {
                    nrm
                }
            };
            let mut v = vec![0.0; rows];
            for i in k..rows {
                v[i] = work[(i, k)];
            }
            v[k] -= alpha;
            let vnorm2 = dot(&v, &v);
            if vnorm2 > 0.0 {
                for j in k..cols {
                    let s: f64 = (k..rows).map(|i| v[i] * work[(i, j)]).sum::<f64>() * 2.0 / vnorm2;
                    for i in k..rows {
                        work[(i, j)] -= s * v[i];
                    }
                }
            }
            reflectors.push(v);
            rank += 1;
        }
        Self {
            rows,
            reflectors,
            rank,
        }
    }

    /// `Q * e_j`.
    fn q_column(&self, j: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.rows];
        x[j] = 1.0;
        for v in self.reflectors.iter().rev() {
            let vnorm2 = dot(v, v);
            if vnorm2 == 0.0 {
                continue;
            }
            let s = 2.0 * dot(v, &x) / vnorm2;
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi -= s * vi;
            }
        }
        x
    }
}

/// Numerical rank from a column-pivoted QR.
pub fn numerical_rank(a: &Matrix) -> usize {
    PivotedQr::new(a).rank
}

/// Orthonormal basis of `ker A`, returned as the columns of an `n x (n - m)` matrix.
pub fn kernel_basis(a: &Matrix) -> Result<Matrix> {
    let (m, n) = (a.rows(), a.cols());
    let qr = PivotedQr::new(&a.transpose());
    if qr.rank < m {
        return Err(Error::RankDeficient {
            rank: qr.rank,
            rows: m,
        });
    }
    let k = n - m;
    let mut basis = Matrix::zeros(n, k);
    for (col, j) in (m..n).enumerate() {
        let q = qr.q_column(j);
        for i in 0..n {
            basis[(i, col)] = q[i];
        }
    }
    Ok(basis)
}

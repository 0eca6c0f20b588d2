//! Problem representation: `min c^T x  s.t.  A x = b, x >= 0` with integer
//! data, its validation, and the constants derived from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, Matrix};
use crate::oracle::exact::{integer_rank, max_subdeterminant, EXACT_SUBDET_CAP};

pub use crate::oracle::exact::SubdetMode;

/// Raw, unvalidated standard-form instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub a: Vec<Vec<i64>>,
    pub b: Vec<i64>,
    pub c: Vec<i64>,
}

impl LinearProgram {
    pub fn new(a: Vec<Vec<i64>>, b: Vec<i64>, c: Vec<i64>) -> Self {
        Self { a, b, c }
    }

    pub fn validate(self) -> Result<ValidatedLp> {
        validate(self)
    }
}

/// An instance that passed [`validate`]: rectangular, `1 <= m <= n`, positive
/// costs and full row rank. Immutable; the floating-point copies used by the
/// solvers are built once here.
#[derive(Debug, Clone)]
pub struct ValidatedLp {
    raw: LinearProgram,
    a: Matrix,
    /// Column-major copy of `A`: column `i` is `a_cols[i*m..(i+1)*m]`.
    a_cols: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl ValidatedLp {
    #[inline]
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn raw(&self) -> &LinearProgram {
        &self.raw
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    /// Column `a_i` of `A`.
    #[inline]
    pub fn column(&self, i: usize) -> &[f64] {
        let m = self.m();
        &self.a_cols[i * m..(i + 1) * m]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn cost(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    pub fn b_norm1(&self) -> f64 {
        self.raw.b.iter().map(|v| v.unsigned_abs() as f64).sum()
    }

    pub fn b_is_zero(&self) -> bool {
        self.raw.b.iter().all(|&v| v == 0)
    }

    /// `A x - b`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.a.mul_vec(x);
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        r
    }

    /// `||A x - b||_inf`.
    pub fn residual_inf(&self, x: &[f64]) -> f64 {
        norm_inf(&self.residual(x))
    }

    /// Feasibility test used by the solvers: `||Ax - b||_inf <= tol (||b||_inf + 1)`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        self.residual_inf(x) <= tol * (norm_inf(&self.b) + 1.0)
    }
}

pub fn validate(lp: LinearProgram) -> Result<ValidatedLp> {
    let m = lp.a.len();
    if m == 0 {
        return Err(Error::DimensionMismatch("A has no rows".into()));
    }
    let n = lp.a[0].len();
    if n == 0 {
        return Err(Error::DimensionMismatch("A has no columns".into()));
    }
    if let Some((i, row)) = lp.a.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "row {i} of A has {} entries, expected {n}",
            row.len()
        )));
    }
    if m > n {
        return Err(Error::DimensionMismatch(format!(
            "A is {m}x{n}; need m <= n"
        )));
    }
    if lp.b.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "b has length {}, A has {m} rows",
            lp.b.len()
        )));
    }
    if lp.c.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "c has length {}, A has {n} columns",
            lp.c.len()
        )));
    }
    if let Some((index, &value)) = lp.c.iter().enumerate().find(|(_, &v)| v < 1) {
        return Err(Error::NonPositiveCost { index, value });
    }
    let rank = integer_rank(&lp.a);
    if rank < m {
        return Err(Error::RankDeficient { rank, rows: m });
    }

    let rows: Vec<Vec<f64>> =
        lp.a.iter()
            .map(|r| r.iter().map(|&v| v as f64).collect())
            .collect();
    let a = Matrix::from_rows(&rows)?;
    let mut a_cols = Vec::with_capacity(m * n);
    for i in 0..n {
        a_cols.extend((0..m).map(|r| a[(r, i)]));
    }
    let b = lp.b.iter().map(|&v| v as f64).collect();
    let c = lp.c.iter().map(|&v| v as f64).collect();
    Ok(ValidatedLp {
        raw: lp,
        a,
        a_cols,
        b,
        c,
    })
}

/// Constants of the instance that drive step sizes and all quantitative bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Sum of the costs.
    #[serde(rename = "C_s")]
    pub cost_sum: u64,
    /// Maximum absolute subdeterminant of `A` (or an upper bound on it).
    #[serde(rename = "D")]
    pub max_subdet: f64,
    #[serde(rename = "D_exact")]
    pub subdet_exact: bool,
    /// `C_s * D + 1`.
    #[serde(rename = "P_max")]
    pub p_max: f64,
    /// `D^2 * n * ||b||_1`.
    pub beta: f64,
    pub m: usize,
    pub n: usize,
}

pub fn compute_params(lp: &ValidatedLp, mode: SubdetMode) -> Result<Params> {
    compute_params_with_cap(lp, mode, EXACT_SUBDET_CAP)
}

pub fn compute_params_with_cap(lp: &ValidatedLp, mode: SubdetMode, cap: usize) -> Result<Params> {
    let cost_sum: u64 = lp.raw.c.iter().map(|&c| c as u64).sum();
    let d = max_subdeterminant(&lp.raw.a, mode, cap)?.max(1.0);
    Ok(params_from_subdet(
        lp,
        cost_sum,
        d,
        mode == SubdetMode::Exact,
    ))
}

/// Assembles [`Params`] from a known `D`.
pub fn params_from_subdet(lp: &ValidatedLp, cost_sum: u64, d: f64, exact: bool) -> Params {
    Params {
        cost_sum,
        max_subdet: d,
        subdet_exact: exact,
        p_max: cost_sum as f64 * d + 1.0,
        beta: d * d * lp.n() as f64 * lp.b_norm1(),
        m: lp.m(),
        n: lp.n(),
    }
}

//! Exact integer and rational kernels: determinants, rank, basic solutions,
//! and the maximum absolute subdeterminant of an integer matrix.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on `n` for exact subdeterminant enumeration.
pub const EXACT_SUBDET_CAP: usize = 14;

/// How the maximum subdeterminant is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubdetMode {
    /// Enumerate every square submatrix.
    Exact,
    /// Closed-form Hadamard bound `max_k (sqrt(k) * max|a_ij|)^k`.
    Bound,
}

/// Lexicographic iterator over the `k`-subsets of `0..n`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        let current = (k <= n).then(|| (0..k).collect());
        Self { n, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().unwrap();
        let k = cur.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if cur[i] < self.n - k + i {
                cur[i] += 1;
                for j in (i + 1)..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Fraction-free (Bareiss) determinant with overflow detection.
fn bareiss_i128(mut a: Vec<i128>, k: usize) -> Option<i128> {
    if k == 0 {
        return Some(1);
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for i in 0..k - 1 {
        if a[i * k + i] == 0 {
            let swap = (i + 1..k).find(|&r| a[r * k + i] != 0)?;
            for c in 0..k {
                a.swap(i * k + c, swap * k + c);
            }
            sign = -sign;
        }
        let piv = a[i * k + i];
        for r in i + 1..k {
            for c in i + 1..k {
                let lhs = a[r * k + c].checked_mul(piv)?;
                let rhs = a[r * k + i].checked_mul(a[i * k + c])?;
                a[r * k + c] = lhs.checked_sub(rhs)? / prev;
            }
        }
        prev = piv;
    }
    a[(k - 1) * k + (k - 1)].checked_mul(sign)
}

fn bareiss_big(mut a: Vec<BigInt>, k: usize) -> BigInt {
    if k == 0 {
        return BigInt::one();
    }
    let mut negate = false;
    let mut prev = BigInt::one();
    for i in 0..k - 1 {
        if a[i * k + i].is_zero() {
            match (i + 1..k).find(|&r| !a[r * k + i].is_zero()) {
                Some(swap) => {
                    for c in 0..k {
                        a.swap(i * k + c, swap * k + c);
                    }
                    negate = !negate;
                }
                None => return BigInt::zero(),
            }
        }
        let piv = a[i * k + i].clone();
        for r in i + 1..k {
            for c in i + 1..k {
                let v = (&a[r * k + c] * &piv - &a[r * k + i] * &a[i * k + c]) / &prev;
                a[r * k + c] = v;
            }
        }
        prev = piv;
    }
    let d = a[(k - 1) * k + (k - 1)].clone();
    if negate {
        -d
    } else {
        d
    }
}

/// Exact determinant of the square submatrix `a[rows, cols]`.
pub fn submatrix_det(a: &[Vec<i64>], rows: &[usize], cols: &[usize]) -> BigInt {
    let k = rows.len();
    debug_assert_eq!(k, cols.len());
    let small: Vec<i128> = rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| a[r][c] as i128))
        .collect();
    if let Some(d) = bareiss_i128(small, k) {
        return BigInt::from(d);
    }
    let big: Vec<BigInt> = rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| BigInt::from(a[r][c])))
        .collect();
    bareiss_big(big, k)
}

/// Exact rank of an integer matrix.
pub fn integer_rank(a: &[Vec<i64>]) -> usize {
    let rows: Vec<Vec<BigRational>> = a
        .iter()
        .map(|r| {
            r.iter()
                .map(|&v| BigRational::from_integer(v.into()))
                .collect()
        })
        .collect();
    rational_rank(rows)
}

fn rational_rank(mut m: Vec<Vec<BigRational>>) -> usize {
    let nrows = m.len();
    let ncols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..nrows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, piv);
        for r in rank + 1..nrows {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &m[rank][col];
            for c in col..ncols {
                let v = &m[rank][c] * &f;
                m[r][c] -= v;
            }
        }
        rank += 1;
        if rank == nrows {
            break;
        }
    }
    rank
}

/// Solves the square rational system `m x = rhs`; `None` if singular.
pub fn rational_solve(
    mut m: Vec<Vec<BigRational>>,
    mut rhs: Vec<BigRational>,
) -> Option<Vec<BigRational>> {
    let k = rhs.len();
    for col in 0..k {
        let piv = (col..k).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..k {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &m[col][col];
            for c in col..k {
                let v = &m[col][c] * &f;
                m[r][c] -= v;
            }
            let v = &rhs[col] * &f;
            rhs[r] -= v;
        }
    }
    let mut x = vec![BigRational::zero(); k];
    for i in (0..k).rev() {
        let mut s = rhs[i].clone();
        for j in i + 1..k {
            s -= &m[i][j] * &x[j];
        }
        x[i] = s / &m[i][i];
    }
    Some(x)
}

/// Solves the square `f64` system `m x = rhs` by partial pivoting; `None` if
/// a pivot falls below `tol` relative to the largest entry.
pub fn float_solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>, tol: f64) -> Option<Vec<f64>> {
    let k = rhs.len();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() <= tol * scale {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..k {
            let f = m[r][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..k {
                m[r][c] -= f * m[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = rhs[i] - (i + 1..k).map(|j| m[i][j] * x[j]).sum::<f64>();
        x[i] = s / m[i][i];
    }
    Some(x)
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator/denominator too wide for a direct conversion
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Maximum absolute subdeterminant found by exhaustive enumeration.
pub fn max_subdeterminant_exact(a: &[Vec<i64>], cap: usize) -> Result<BigInt> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    if n > cap {
        return Err(Error::ExactTooLarge { n, cap });
    }
    let mut best = BigInt::zero();
    for k in 1..=m.min(n) {
        for rows in Combinations::new(m, k) {
            for cols in Combinations::new(n, k) {
                let d = submatrix_det(a, &rows, &cols).abs();
                if d > best {
                    best = d;
                }
            }
        }
    }
    Ok(best)
}

/// Hadamard-type bound `max_{k <= min(m,n)} (sqrt(k) * max|a_ij|)^k`.
pub fn max_subdeterminant_bound(a: &[Vec<i64>]) -> f64 {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let max_abs = a
        .iter()
        .flat_map(|r| r.iter())
        .map(|v| v.unsigned_abs() as f64)
        .fold(0.0, f64::max);
    (1..=m.min(n))
        .map(|k| ((k as f64).sqrt() * max_abs).powi(k as i32))
        .fold(0.0, f64::max)
}

/// `D = max |det(A')|` over square submatrices `A'`, exactly or as an upper bound.
pub fn max_subdeterminant(a: &[Vec<i64>], mode: SubdetMode, cap: usize) -> Result<f64> {
    match mode {
        SubdetMode::Exact => Ok(max_subdeterminant_exact(a, cap)?
            .to_f64()
            .unwrap_or(f64::INFINITY)),
        SubdetMode::Bound => Ok(max_subdeterminant_bound(a)),
    }
}

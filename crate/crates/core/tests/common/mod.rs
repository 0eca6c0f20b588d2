//! Independent reference computations for the integration tests. Nothing
//! here calls into the library's linear algebra or determinant code.

#![allow(dead_code, clippy::needless_range_loop)]

use physarum_core::instances::{random_interior_lp, random_lp, RandomShape};
use physarum_core::ValidatedLp;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Determinant by cofactor expansion along the first row.
pub fn det(m: &[Vec<i64>]) -> i128 {
    match m.len() {
        0 => 1,
        1 => m[0][0] as i128,
        n => (0..n)
            .map(|j| {
                let minor: Vec<Vec<i64>> = m[1..]
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|&(k, _)| k != j)
                            .map(|(_, &v)| v)
                            .collect()
                    })
                    .collect();
                let sign = if j % 2 == 0 { 1 } else { -1 };
                sign * m[0][j] as i128 * det(&minor)
            })
            .sum(),
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    (k - 1..n)
        .flat_map(|last| {
            subsets(last, k - 1).into_iter().map(move |mut s| {
                s.push(last);
                s
            })
        })
        .collect()
}

/// Largest absolute square subdeterminant by brute force.
pub fn max_subdet(a: &[Vec<i64>]) -> i128 {
    let (m, n) = (a.len(), a[0].len());
    let mut best = 0;
    for k in 1..=m.min(n) {
        for rows in subsets(m, k) {
            for cols in subsets(n, k) {
                let sub: Vec<Vec<i64>> = rows
                    .iter()
                    .map(|&r| cols.iter().map(|&c| a[r][c]).collect())
                    .collect();
                best = best.max(det(&sub).abs());
            }
        }
    }
    best
}

/// Gaussian elimination with partial pivoting on a dense copy.
pub fn gauss_solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    x
}

/// `A diag(w) A^T` from the raw integer data.
pub fn laplacian(lp: &ValidatedLp, w: &[f64]) -> Vec<Vec<f64>> {
    let a = &lp.raw().a;
    let m = a.len();
    (0..m)
        .map(|r| {
            (0..m)
                .map(|s| {
                    (0..w.len())
                        .map(|i| a[r][i] as f64 * w[i] * a[s][i] as f64)
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// `A^T y` from the raw integer data.
pub fn at_mul(lp: &ValidatedLp, y: &[f64]) -> Vec<f64> {
    let a = &lp.raw().a;
    (0..a[0].len())
        .map(|i| (0..a.len()).map(|r| a[r][i] as f64 * y[r]).sum())
        .collect()
}

pub fn inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Least-squares slope.
pub fn slope(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let num: f64 = ts.iter().zip(ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let den: f64 = ts.iter().map(|t| (t - tm).powi(2)).sum();
    num / den
}

pub const CORPUS_SEED: u64 = 0x5eed_2024;
pub const FUZZ_SEED: u64 = 0xf022_0500;

/// `count` random instances with a strictly positive feasible point
/// (m <= 3, n <= 6, entries in [-3, 3], costs in [1, 3]).
pub fn interior_corpus(count: usize) -> Vec<ValidatedLp> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    let shape = RandomShape::default();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        if let Some(lp) = random_interior_lp(&mut rng, &shape) {
            out.push(lp);
        }
    }
    out
}

/// `count` random full-rank instances with random `b`; some are infeasible.
pub fn fuzz_corpus(count: usize) -> Vec<ValidatedLp> {
    let mut rng = ChaCha8Rng::seed_from_u64(FUZZ_SEED);
    let shape = RandomShape::default();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        if let Some(lp) = random_lp(&mut rng, &shape) {
            out.push(lp);
        }
    }
    out
}

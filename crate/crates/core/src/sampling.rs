//! Random test points: log-uniform positive states, strictly positive
//! feasible points built from the oracle's vertices and rays, and tangent
//! directions.

use rand::Rng;

use crate::linalg::Matrix;
use crate::oracle::OracleResult;

/// Components drawn log-uniformly from `[lo, hi]`.
pub fn log_uniform_point<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|_| rng.random_range(a..=b).exp()).collect()
}

/// A random convex combination of the vertices plus a random nonnegative
/// combination of the rays. `None` if the result has a zero coordinate.
pub fn random_feasible_point<R: Rng>(rng: &mut R, oracle: &OracleResult) -> Option<Vec<f64>> {
    let first = oracle.vertices.first()?;
    let n = first.len();
    // exponential weights give a uniform point on the simplex
    let weights: Vec<f64> = oracle
        .vertices
        .iter()
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut x = vec![0.0; n];
    for (v, w) in oracle.vertices.iter().zip(&weights) {
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi += w / total * vi;
        }
    }
    for r in &oracle.rays {
        let mu = rng.random_range(0.05..2.0);
        for (xi, ri) in x.iter_mut().zip(r) {
            *xi += mu * ri;
        }
    }
    x.iter().all(|&v| v > 0.0).then_some(x)
}

/// A random unit-norm combination of the columns of `basis`; the zero
/// vector when the basis is empty.
pub fn random_kernel_direction<R: Rng>(rng: &mut R, basis: &Matrix) -> Vec<f64> {
    let coeffs: Vec<f64> = (0..basis.cols())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let mut h = basis.mul_vec(&coeffs);
    let norm = crate::linalg::norm2(&h);
    if norm > 0.0 {
        h.iter_mut().for_each(|v| *v /= norm);
    }
    h
}

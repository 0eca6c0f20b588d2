//! Shared fixtures for the benchmarks.

use physarum_core::{LinearProgram, ValidatedLp};

/// Dense `m x n` instance `[I | B]` with small deterministic entries in `B`,
/// `b = A 1` and costs in `1..=4`. Full row rank by construction.
pub fn dense_instance(m: usize, n: usize) -> ValidatedLp {
    assert!(m <= n);
    let a: Vec<Vec<i64>> = (0..m)
        .map(|r| {
            (0..n)
                .map(|j| {
                    if j < m {
                        i64::from(j == r)
                    } else {
                        ((r * 7 + j * 3) % 7) as i64 - 3
                    }
                })
                .collect()
        })
        .collect();
    let b = a
        .iter()
        .map(|row| row.iter().sum::<i64>().abs() + 1)
        .collect();
    let c = (0..n).map(|j| (j % 4) as i64 + 1).collect();
    LinearProgram::new(a, b, c)
        .validate()
        .expect("identity block gives full row rank")
}

/// A strictly positive point of the right length.
pub fn positive_point(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 + (i % 3) as f64 * 0.25).collect()
}

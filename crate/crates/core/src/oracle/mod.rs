//! Brute-force ground truth for small instances.
//!
//! Vertices of `P = {x : Ax = b, x >= 0}` are enumerated as basic feasible
//! solutions over all `m`-column bases, and the extreme rays of the recession
//! cone as the vertices of `{r : Ar = 0, sum r = 1, r >= 0}`. With integer
//! data of moderate size every basic solution is computed in exact rational
//! arithmetic, so the structural bounds checked by [`structural_check`] are
//! decided exactly.

pub mod exact;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ValidatedLp;
use exact::{float_solve, rational_solve, rational_to_f64, Combinations};

pub use exact::{max_subdeterminant, SubdetMode};

/// Default cap on `n` for basis enumeration.
pub const ENUMERATION_CAP: usize = 16;

/// Distinct vertices are separated by far more than this in `f64` mode.
pub const DEDUP_TOL: f64 = 1e-9;

const EXACT_ENTRY_LIMIT: i64 = 1 << 15;
const EXACT_ROW_LIMIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arithmetic {
    /// Rational when `|entries| <= 2^15` and `m <= 8`, else `f64`.
    #[default]
    Auto,
    Rational,
    Float,
}

#[derive(Debug, Clone, Copy)]
pub struct EnumerateOptions {
    pub cap: usize,
    pub arithmetic: Arithmetic,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self {
            cap: ENUMERATION_CAP,
            arithmetic: Arithmetic::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
}

/// Exact rational copies of the enumerated objects (rational mode only).
#[derive(Debug, Clone)]
pub struct ExactData {
    pub vertices: Vec<Vec<BigRational>>,
    pub rays: Vec<Vec<BigRational>>,
    pub opt: Option<BigRational>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub status: Status,
    /// Minimum of `c^T v` over the vertices; `None` when infeasible. The
    /// objective is bounded below because `c > 0` and `x >= 0`.
    pub opt: Option<f64>,
    pub vertices: Vec<Vec<f64>>,
    /// Normalized to `sum r_i = 1`.
    pub rays: Vec<Vec<f64>>,
    /// Indices into `vertices`.
    pub optimal_vertices: Vec<usize>,
    pub nonoptimal_vertices: Vec<usize>,
    /// Union of the supports of optimal solutions.
    #[serde(rename = "J")]
    pub support: Vec<usize>,
    /// Indices zero in every optimal solution.
    #[serde(rename = "N")]
    pub off_support: Vec<usize>,
    /// Whether the enumeration ran in rational arithmetic.
    pub exact: bool,
    #[serde(skip)]
    pub exact_data: Option<ExactData>,
}

impl OracleResult {
    pub fn opt_value(&self) -> Result<f64> {
        self.opt.ok_or(Error::Infeasible)
    }

    /// First optimal vertex, `x*`.
    pub fn optimal_vertex(&self) -> Option<&[f64]> {
        self.optimal_vertices
            .first()
            .map(|&i| self.vertices[i].as_slice())
    }
}

fn use_rational(lp: &ValidatedLp, arithmetic: Arithmetic) -> bool {
    match arithmetic {
        Arithmetic::Rational => true,
        Arithmetic::Float => false,
        Arithmetic::Auto => {
            let raw = lp.raw();
            lp.m() <= EXACT_ROW_LIMIT
                && raw
                    .a
                    .iter()
                    .flatten()
                    .chain(&raw.b)
                    .all(|v| v.abs() <= EXACT_ENTRY_LIMIT)
        }
    }
}

fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Basic solutions `x_B = M_B^{-1} rhs`, `x_B >= 0`, over all `k`-column subsets.
fn basic_solutions_rational(rows: &[Vec<i64>], rhs: &[i64], n: usize) -> Vec<Vec<BigRational>> {
    let k = rows.len();
    let rhs: Vec<BigRational> = rhs.iter().map(|&v| rat(v)).collect();
    let mut out: Vec<Vec<BigRational>> = Vec::new();
    for basis in Combinations::new(n, k) {
        let m: Vec<Vec<BigRational>> = rows
            .iter()
            .map(|r| basis.iter().map(|&j| rat(r[j])).collect())
            .collect();
        let Some(xb) = rational_solve(m, rhs.clone()) else {
            continue;
        };
        if xb.iter().any(|v| v.is_negative()) {
            continue;
        }
        let mut x = vec![BigRational::zero(); n];
        for (&j, v) in basis.iter().zip(xb) {
            x[j] = v;
        }
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn basic_solutions_float(rows: &[Vec<i64>], rhs: &[i64], n: usize) -> Vec<Vec<f64>> {
    let k = rows.len();
    let rhs: Vec<f64> = rhs.iter().map(|&v| v as f64).collect();
    let scale = 1.0 + rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut out: Vec<Vec<f64>> = Vec::new();
    for basis in Combinations::new(n, k) {
        let m: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| basis.iter().map(|&j| r[j] as f64).collect())
            .collect();
        let Some(xb) = float_solve(m, rhs.clone(), 1e-12) else {
            continue;
        };
        if xb.iter().any(|&v| v < -DEDUP_TOL * scale) {
            continue;
        }
        let mut x = vec![0.0; n];
        for (&j, v) in basis.iter().zip(xb) {
            x[j] = if v.abs() <= DEDUP_TOL * scale { 0.0 } else { v };
        }
        let duplicate = out
            .iter()
            .any(|y| y.iter().zip(&x).all(|(a, b)| (a - b).abs() <= DEDUP_TOL));
        if !duplicate {
            out.push(x);
        }
    }
    out
}

/// Enumerates vertices and extreme rays with default options.
pub fn enumerate(lp: &ValidatedLp) -> Result<OracleResult> {
    enumerate_with(lp, EnumerateOptions::default())
}

pub fn enumerate_with(lp: &ValidatedLp, options: EnumerateOptions) -> Result<OracleResult> {
    let (m, n) = (lp.m(), lp.n());
    if n > options.cap {
        return Err(Error::TooLarge {
            n,
            cap: options.cap,
        });
    }
    let raw = lp.raw();
    let mut ray_rows = raw.a.clone();
    ray_rows.push(vec![1; n]);
    let mut ray_rhs = vec![0i64; m];
    ray_rhs.push(1);

    let c = lp.c();
    if use_rational(lp, options.arithmetic) {
        let vertices = basic_solutions_rational(&raw.a, &raw.b, n);
        let rays = if n > m {
            basic_solutions_rational(&ray_rows, &ray_rhs, n)
        } else {
            Vec::new()
        };
        let costs: Vec<BigRational> = vertices
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&raw.c)
                    .fold(BigRational::zero(), |acc, (x, &c)| acc + x * rat(c))
            })
            .collect();
        let opt = costs.iter().min().cloned();
        let optimal: Vec<usize> = match &opt {
            Some(o) => (0..vertices.len()).filter(|&i| &costs[i] == o).collect(),
            None => Vec::new(),
        };
        let zero_cost_rays: Vec<usize> = (0..rays.len())
            .filter(|&i| {
                rays[i]
                    .iter()
                    .zip(&raw.c)
                    .fold(BigRational::zero(), |acc, (x, &c)| acc + x * rat(c))
                    .is_zero()
            })
            .collect();
        let support_mask: Vec<bool> = (0..n)
            .map(|j| {
                optimal.iter().any(|&i| !vertices[i][j].is_zero())
                    || zero_cost_rays.iter().any(|&i| !rays[i][j].is_zero())
            })
            .collect();
        let to_f64 = |vs: &[Vec<BigRational>]| -> Vec<Vec<f64>> {
            vs.iter()
                .map(|v| v.iter().map(rational_to_f64).collect())
                .collect()
        };
        let result = OracleResult {
            status: if vertices.is_empty() {
                Status::Infeasible
            } else {
                Status::Optimal
            },
            opt: opt.as_ref().map(rational_to_f64),
            vertices: to_f64(&vertices),
            rays: to_f64(&rays),
            nonoptimal_vertices: (0..vertices.len())
                .filter(|i| !optimal.contains(i))
                .collect(),
            optimal_vertices: optimal,
            support: (0..n).filter(|&j| support_mask[j]).collect(),
            off_support: (0..n).filter(|&j| !support_mask[j]).collect(),
            exact: true,
            exact_data: Some(ExactData {
                vertices,
                rays,
                opt,
            }),
        };
        return Ok(result);
    }

    let vertices = basic_solutions_float(&raw.a, &raw.b, n);
    let rays = if n > m {
        basic_solutions_float(&ray_rows, &ray_rhs, n)
    } else {
        Vec::new()
    };
    let cost = |v: &Vec<f64>| -> f64 { v.iter().zip(c).map(|(x, c)| x * c).sum() };
    let costs: Vec<f64> = vertices.iter().map(cost).collect();
    let opt = costs.iter().copied().reduce(f64::min);
    let optimal: Vec<usize> = match opt {
        Some(o) => (0..vertices.len())
            .filter(|&i| costs[i] - o <= DEDUP_TOL * (1.0 + o.abs()))
            .collect(),
        None => Vec::new(),
    };
    let support_mask: Vec<bool> = (0..n)
        .map(|j| {
            optimal.iter().any(|&i| vertices[i][j] != 0.0)
                || rays.iter().any(|r| cost(r) <= DEDUP_TOL && r[j] != 0.0)
        })
        .collect();
    Ok(OracleResult {
        status: if vertices.is_empty() {
            Status::Infeasible
        } else {
            Status::Optimal
        },
        opt,
        nonoptimal_vertices: (0..vertices.len())
            .filter(|i| !optimal.contains(i))
            .collect(),
        optimal_vertices: optimal,
        vertices,
        rays,
        support: (0..n).filter(|&j| support_mask[j]).collect(),
        off_support: (0..n).filter(|&j| !support_mask[j]).collect(),
        exact: false,
        exact_data: None,
    })
}

/// Strictly positive feasible point `mean(V) + delta * sum(R)`.
///
/// `delta` defaults to a tenth of the smallest positive vertex entry.
pub fn interior_point(result: &OracleResult, delta: Option<f64>) -> Result<Vec<f64>> {
    let Some(first) = result.vertices.first() else {
        return Err(Error::Infeasible);
    };
    let n = first.len();
    let k = result.vertices.len() as f64;
    let delta = delta.unwrap_or_else(|| {
        0.1 * result
            .vertices
            .iter()
            .flatten()
            .copied()
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min)
            .min(1.0)
    });
    let mut s = vec![0.0; n];
    for v in &result.vertices {
        for (si, vi) in s.iter_mut().zip(v) {
            *si += vi / k;
        }
    }
    for r in &result.rays {
        for (si, ri) in s.iter_mut().zip(r) {
            *si += delta * ri;
        }
    }
    match s.iter().position(|&v| !(v > 0.0)) {
        Some(index) => Err(Error::NoInteriorPoint { index }),
        None => Ok(s),
    }
}

/// Outcome of checking the vertex/ray entry bounds and the cost gap between
/// optimal and non-optimal vertices against `D`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StructuralReport {
    pub exact: bool,
    pub vertices_checked: usize,
    pub rays_checked: usize,
    /// Nonzero vertex entries below `1/D`.
    pub vertex_lower_violations: usize,
    /// Vertex entries above `D * ||b||_1`.
    pub vertex_upper_violations: usize,
    /// Nonzero ray entries below `1/D`.
    pub ray_lower_violations: usize,
    /// Ray entries above `D`.
    pub ray_upper_violations: usize,
    /// Non-optimal vertices with `c^T v - opt < 1/D^2`.
    pub cost_gap_violations: usize,
    /// Smallest nonzero ray entry times `D` (1.0 when there are no rays).
    pub min_ray_entry_times_d: f64,
}

impl StructuralReport {
    pub fn vertex_bounds_hold(&self) -> bool {
        self.vertex_lower_violations == 0 && self.vertex_upper_violations == 0
    }

    pub fn ray_bounds_hold(&self) -> bool {
        self.ray_lower_violations == 0 && self.ray_upper_violations == 0
    }

    pub fn cost_gap_holds(&self) -> bool {
        self.cost_gap_violations == 0
    }
}

/// Checks the entry bounds `1/D <= |v_i| <= D ||b||_1`, `1/D <= |r_i| <= D`
/// and the gap `c^T v - opt >= 1/D^2` for every non-optimal vertex.
///
/// Comparisons are exact when the enumeration was rational and `d` is an
/// integer; otherwise they carry a `1e-9` relative slack.
pub fn structural_check(lp: &ValidatedLp, result: &OracleResult, d: f64) -> StructuralReport {
    let b1 = lp.b_norm1();
    let d_int = (d.fract() == 0.0 && d < 9.0e15).then(|| BigInt::from(d as u64));
    let mut report = StructuralReport {
        vertices_checked: result.vertices.len(),
        rays_checked: result.rays.len(),
        min_ray_entry_times_d: 1.0,
        ..Default::default()
    };
    let min_ray = result
        .rays
        .iter()
        .flatten()
        .copied()
        .filter(|&v| v != 0.0)
        .fold(f64::INFINITY, f64::min);
    if min_ray.is_finite() {
        report.min_ray_entry_times_d = min_ray * d;
    }

    if let (Some(data), Some(d_big)) = (&result.exact_data, d_int) {
        report.exact = true;
        let d_rat = BigRational::from_integer(d_big.clone());
        let inv_d = BigRational::one() / &d_rat;
        let b1_rat =
            BigRational::from_integer(lp.raw().b.iter().map(|v| BigInt::from(v.abs())).sum());
        let v_upper = &d_rat * &b1_rat;
        for v in &data.vertices {
            for x in v.iter().filter(|x| !x.is_zero()) {
                let x = x.abs();
                report.vertex_lower_violations += usize::from(x < inv_d);
                report.vertex_upper_violations += usize::from(x > v_upper);
            }
        }
        for r in &data.rays {
            for x in r.iter().filter(|x| !x.is_zero()) {
                let x = x.abs();
                report.ray_lower_violations += usize::from(x < inv_d);
                report.ray_upper_violations += usize::from(x > d_rat);
            }
        }
        if let Some(opt) = &data.opt {
            let gap = &inv_d * &inv_d;
            for &i in &result.nonoptimal_vertices {
                let cost = data.vertices[i]
                    .iter()
                    .zip(&lp.raw().c)
                    .fold(BigRational::zero(), |acc, (x, &c)| acc + x * rat(c));
                report.cost_gap_violations += usize::from(cost - opt < gap);
            }
        }
        return report;
    }

    let slack = 1e-9;
    for v in &result.vertices {
        for &x in v.iter().filter(|&&x| x != 0.0) {
            report.vertex_lower_violations += usize::from(x.abs() < (1.0 - slack) / d);
            report.vertex_upper_violations += usize::from(x.abs() > d * b1 * (1.0 + slack));
        }
    }
    for r in &result.rays {
        for &x in r.iter().filter(|&&x| x != 0.0) {
            report.ray_lower_violations += usize::from(x.abs() < (1.0 - slack) / d);
            report.ray_upper_violations += usize::from(x.abs() > d * (1.0 + slack));
        }
    }
    if let Some(opt) = result.opt {
        for &i in &result.nonoptimal_vertices {
            let cost = lp.cost(&result.vertices[i]);
            report.cost_gap_violations += usize::from(cost - opt < 1.0 / (d * d) - slack);
        }
    }
    report
}

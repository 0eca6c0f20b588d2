//! Entropy-regularized optimizer path
//!
//! ```text
//! x(mu) = argmin { mu c^T x + sum_i c_i x_i ln(x_i / s_i) - c_i x_i  :  A x = b }
//! ```
//!
//! from a strictly positive feasible start `s`, computed through its concave
//! dual
//!
//! ```text
//! g(y) = y^T b - sum_i c_i s_i exp(a_i^T y / c_i - mu),
//! x_i(y) = s_i exp(a_i^T y / c_i - mu).
//! ```
//!
//! The path coincides with the continuous trajectory started at `s`, with
//! `mu` playing the role of time.

use log::debug;
use serde::Serialize;

use crate::dynamics::Workspace;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, Matrix};
use crate::model::ValidatedLp;

/// Largest exponent accepted before reporting [`Error::Overflow`].
pub const MAX_EXPONENT: f64 = 700.0;
pub const ARMIJO: f64 = 0.25;
pub const MAX_HALVINGS: u32 = 60;
pub const MAX_NEWTON_ITERS: usize = 200;
/// Stationarity target relative to `||b||_inf + 1`.
pub const GRAD_TOL: f64 = 1e-10;
/// Feasibility required of the start `s`.
pub const START_TOL: f64 = 1e-8;
pub const DEFAULT_GRID_STEP: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathPoint {
    pub mu: f64,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub dual_value: f64,
    pub newton_iters: usize,
    /// `||A^T p||_inf` of the dynamics evaluated at `x(mu)`.
    pub atp_inf: f64,
    /// `||A x - b||_inf`.
    pub feas_residual: f64,
}

/// Dual value, gradient and Hessian at `y`.
#[derive(Debug, Clone)]
pub struct DualEval {
    pub value: f64,
    /// `b - A x(y)`.
    pub gradient: Vec<f64>,
    /// `-A W(x(y)) A^T`.
    pub hessian: Matrix,
    pub x: Vec<f64>,
}

fn check_start(lp: &ValidatedLp, s: &[f64]) -> Result<()> {
    if s.len() != lp.n() {
        return Err(Error::DimensionMismatch(format!(
            "s has length {}, expected {}",
            s.len(),
            lp.n()
        )));
    }
    if let Some(i) = s.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::NonPositiveState {
            index: i,
            value: s[i],
        });
    }
    if !lp.is_feasible(s, START_TOL) {
        return Err(Error::NoFeasibleInteriorStart(format!(
            "path start violates Ax = b by {:e}",
            lp.residual_inf(s)
        )));
    }
    Ok(())
}

/// `x_i(y) = s_i exp(a_i^T y / c_i - mu)`, its dual value term
/// `sum_i c_i x_i`, and the overflow check.
fn primal_of(lp: &ValidatedLp, s: &[f64], mu: f64, y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let c = lp.c();
    let mut x = Vec::with_capacity(lp.n());
    let mut mass = 0.0;
    for i in 0..lp.n() {
        let exponent = dot(lp.column(i), y) / c[i] - mu;
        if exponent > MAX_EXPONENT || exponent.is_nan() {
            return Err(Error::Overflow(exponent));
        }
        let xi = s[i] * exponent.exp();
        mass += c[i] * xi;
        x.push(xi);
    }
    Ok((x, mass))
}

fn dual_value(lp: &ValidatedLp, s: &[f64], mu: f64, y: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (x, mass) = primal_of(lp, s, mu, y)?;
    Ok((dot(y, lp.b()) - mass, x))
}

pub fn dual_value_and_derivatives(
    lp: &ValidatedLp,
    s: &[f64],
    mu: f64,
    y: &[f64],
) -> Result<DualEval> {
    check_start(lp, s)?;
    if y.len() != lp.m() {
        return Err(Error::DimensionMismatch(format!(
            "y has length {}, expected {}",
            y.len(),
            lp.m()
        )));
    }
    let (value, x) = dual_value(lp, s, mu, y)?;
    let m = lp.m();
    let c = lp.c();
    let gradient: Vec<f64> = lp.residual(&x).into_iter().map(|r| -r).collect();
    let mut hessian = vec![0.0; m * m];
    for i in 0..lp.n() {
        let w = x[i] / c[i];
        let a = lp.column(i);
        for r in 0..m {
            for col in 0..m {
                hessian[r * m + col] -= w * a[r] * a[col];
            }
        }
    }
    Ok(DualEval {
        value,
        gradient,
        hessian: Matrix::from_vec(m, m, hessian)?,
        x,
    })
}

fn grad_tol(lp: &ValidatedLp) -> f64 {
    GRAD_TOL * (norm_inf(lp.b()) + 1.0)
}

/// Damped Newton ascent on `g` from `y_init`.
pub fn solve_point(lp: &ValidatedLp, s: &[f64], mu: f64, y_init: &[f64]) -> Result<PathPoint> {
    check_start(lp, s)?;
    if y_init.len() != lp.m() {
        return Err(Error::DimensionMismatch(format!(
            "y_init has length {}, expected {}",
            y_init.len(),
            lp.m()
        )));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("mu must be >= 0, got {mu}")));
    }
    let tol = grad_tol(lp);
    let mut ws = Workspace::new(lp);
    let mut y = y_init.to_vec();
    let (mut g, mut x) = dual_value(lp, s, mu, &y)?;
    let mut grad: Vec<f64> = lp.residual(&x).iter().map(|r| -r).collect();
    let mut iters = 0;

    while norm_inf(&grad) > tol {
        if iters >= MAX_NEWTON_ITERS {
            return Err(Error::NewtonStalled {
                mu,
                iterations: iters,
                gradient: norm_inf(&grad),
            });
        }
        iters += 1;
        // Newton direction: (A W A^T) d = grad
        ws.factor_weights(lp, |i| x[i] / lp.c()[i])?;
        let mut d = grad.clone();
        ws.solve_in_place(&mut d);
        let slope = dot(&grad, &d);

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = y.iter().zip(&d).map(|(y, d)| y + alpha * d).collect();
            if let Ok((g_new, x_new)) = dual_value(lp, s, mu, &trial) {
                let grad_new: Vec<f64> = lp.residual(&x_new).iter().map(|r| -r).collect();
                let armijo = g_new >= g + ARMIJO * alpha * slope;
                // near the maximizer the increase is below the rounding level of g
                let flat = (alpha * slope).abs() <= 1e-12 * (1.0 + g.abs())
                    && norm_inf(&grad_new) < norm_inf(&grad);
                if armijo || flat {
                    accepted = Some((trial, g_new, x_new, grad_new));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, g_new, x_new, grad_new)) => {
                y = trial;
                g = g_new;
                x = x_new;
                grad = grad_new;
            }
            None => {
                return Err(Error::NewtonStalled {
                    mu,
                    iterations: iters,
                    gradient: norm_inf(&grad),
                })
            }
        }
    }

    ws.potentials_at(lp, &x)?;
    Ok(PathPoint {
        mu,
        feas_residual: lp.residual_inf(&x),
        atp_inf: norm_inf(ws.atp()),
        y,
        x,
        dual_value: g,
        newton_iters: iters,
    })
}

/// Path points along an increasing grid that starts at 0.
#[derive(Debug, Clone, Serialize)]
pub struct Path {
    pub points: Vec<PathPoint>,
    /// `c^T x(mu_{j+1}) <= c^T x(mu_j) + 1e-10` along the grid.
    pub cost_monotone: bool,
}

/// `{0, step, 2 step, ..., mu_max}`.
pub fn uniform_grid(mu_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && mu_max >= 0.0 && mu_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "grid needs step > 0 and mu_max >= 0, got step {step}, mu_max {mu_max}"
        )));
    }
    let count = (mu_max / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|j| j as f64 * step).collect();
    if mu_max - grid[count] > 1e-9 * step {
        grid.push(mu_max);
    }
    Ok(grid)
}

/// Warm-started [`solve_point`] along `mu_grid`.
pub fn follow_path(lp: &ValidatedLp, s: &[f64], mu_grid: &[f64]) -> Result<Path> {
    if mu_grid.first() != Some(&0.0) {
        return Err(Error::InvalidArgument("mu grid must start at 0".into()));
    }
    if mu_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("mu grid must be increasing".into()));
    }
    let mut points: Vec<PathPoint> = Vec::with_capacity(mu_grid.len());
    let mut y = vec![0.0; lp.m()];
    for &mu in mu_grid {
        let point = solve_point(lp, s, mu, &y)?;
        debug!("path: mu = {mu}, {} Newton steps", point.newton_iters);
        y.clone_from(&point.y);
        points.push(point);
    }
    let cost_monotone = points
        .windows(2)
        .all(|w| lp.cost(&w[1].x) <= lp.cost(&w[0].x) + 1e-10);
    Ok(Path {
        points,
        cost_monotone,
    })
}

/// `max_j ||x_path(mu_j) - x_flow(mu_j)||_inf`, pairing each path point with
/// the flow sample at the same time.
pub fn max_deviation_from_flow(path: &Path, flow: &crate::flow::FlowTrace) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in &path.points {
        let sample = flow
            .entries
            .iter()
            .find(|e| (e.t - p.mu).abs() <= 1e-9 * (1.0 + p.mu))
            .ok_or_else(|| {
                Error::InsufficientTrace(format!("flow trace has no sample at t = {}", p.mu))
            })?;
        for (a, b) in p.x.iter().zip(&sample.x) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

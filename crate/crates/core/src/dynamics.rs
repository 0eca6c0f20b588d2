//! Pointwise Physarum quantities.
//!
//! For a state `x > 0` let `W = diag(x_i / c_i)` and `L = A W A^T`. The
//! potentials `p` solve `L p = b`, the flux is `q = W A^T p` and the Physarum
//! direction is `P(x) = q - x = W (A^T p - c)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, ldl_factor, ldl_solve, norm_inf};
use crate::model::{Params, ValidatedLp};

/// Relative slack applied to every bound comparison.
pub const BOUND_SLACK: f64 = 1e-8;

/// Reusable buffers for solving `A W A^T p = b` at a sequence of points.
#[derive(Debug, Clone)]
pub struct Workspace {
    m: usize,
    factor: Vec<f64>,
    p: Vec<f64>,
    atp: Vec<f64>,
}

impl Workspace {
    pub fn new(lp: &ValidatedLp) -> Self {
        Self {
            m: lp.m(),
            factor: vec![0.0; lp.m() * lp.m()],
            p: vec![0.0; lp.m()],
            atp: vec![0.0; lp.n()],
        }
    }

    /// Assembles and factors `L = A diag(w) A^T`.
    pub fn factor_weights(&mut self, lp: &ValidatedLp, w: impl Fn(usize) -> f64) -> Result<()> {
        let m = self.m;
        self.factor.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..lp.n() {
            let wi = w(i);
            let a = lp.column(i);
            for r in 0..m {
                let s = wi * a[r];
                if s == 0.0 {
                    continue;
                }
                let row = &mut self.factor[r * m..r * m + r + 1];
                for (l, &as_) in row.iter_mut().zip(a) {
                    *l += s * as_;
                }
            }
        }
        ldl_factor(&mut self.factor, m)
    }

    /// Solves with the current factor in place.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        ldl_solve(&self.factor, self.m, rhs);
    }

    /// Computes `p = L^{-1} b` and `A^T p` at the state `x` (weights `x_i / c_i`).
    pub fn potentials_at(&mut self, lp: &ValidatedLp, x: &[f64]) -> Result<()> {
        let c = lp.c();
        self.factor_weights(lp, |i| x[i] / c[i])?;
        self.p.copy_from_slice(lp.b());
        ldl_solve(&self.factor, self.m, &mut self.p);
        for i in 0..lp.n() {
            self.atp[i] = dot(lp.column(i), &self.p);
        }
        Ok(())
    }

    #[inline]
    pub fn potentials(&self) -> &[f64] {
        &self.p
    }

    /// `A^T p` from the last [`Workspace::potentials_at`] call.
    #[inline]
    pub fn atp(&self) -> &[f64] {
        &self.atp
    }
}

pub fn check_positive(x: &[f64]) -> Result<()> {
    match x.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        Some(index) => Err(Error::NonPositiveState {
            index,
            value: x[index],
        }),
        None => Ok(()),
    }
}

/// All per-point quantities of the dynamics.
#[derive(Debug, Clone, Serialize)]
pub struct DynamicsEval {
    pub x: Vec<f64>,
    /// `w_i = x_i / c_i`.
    pub w: Vec<f64>,
    /// Potentials, `L p = b`.
    pub p: Vec<f64>,
    /// `A^T p`.
    pub atp: Vec<f64>,
    /// Flux `q = W A^T p`.
    pub q: Vec<f64>,
    /// `P = q - x`.
    pub direction: Vec<f64>,
    /// `P_f = W A^T L^{-1} (b - A x)`.
    pub feasibility_direction: Vec<f64>,
    /// `P_o = W (A^T L^{-1} A x - c)`.
    pub optimization_direction: Vec<f64>,
    /// `E = b^T p`.
    pub energy: f64,
    /// `q^T W^{-1} q`, the second route to the energy.
    pub energy_quadratic: f64,
    /// `V = c^T x`.
    pub cost: f64,
    pub atp_inf: f64,
}

pub fn evaluate(lp: &ValidatedLp, x: &[f64]) -> Result<DynamicsEval> {
    let mut ws = Workspace::new(lp);
    evaluate_with(lp, x, &mut ws)
}

pub fn evaluate_with(lp: &ValidatedLp, x: &[f64], ws: &mut Workspace) -> Result<DynamicsEval> {
    if x.len() != lp.n() {
        return Err(Error::DimensionMismatch(format!(
            "state has length {}, expected {}",
            x.len(),
            lp.n()
        )));
    }
    check_positive(x)?;
    let c = lp.c();
    let n = lp.n();
    ws.potentials_at(lp, x)?;
    let w: Vec<f64> = x.iter().zip(c).map(|(x, c)| x / c).collect();
    let p = ws.potentials().to_vec();
    let atp = ws.atp().to_vec();
    let q: Vec<f64> = w.iter().zip(&atp).map(|(w, a)| w * a).collect();
    let direction: Vec<f64> = q.iter().zip(x).map(|(q, x)| q - x).collect();

    let mut z: Vec<f64> = lp.residual(x).into_iter().map(|r| -r).collect();
    ws.solve_in_place(&mut z);
    let feasibility_direction: Vec<f64> = (0..n).map(|i| w[i] * dot(lp.column(i), &z)).collect();

    let mut y = lp.a().mul_vec(x);
    ws.solve_in_place(&mut y);
    let optimization_direction: Vec<f64> = (0..n)
        .map(|i| w[i] * (dot(lp.column(i), &y) - c[i]))
        .collect();

    let energy = dot(lp.b(), &p);
    let energy_quadratic = q.iter().zip(&w).map(|(q, w)| q * q / w).sum();
    Ok(DynamicsEval {
        cost: lp.cost(x),
        atp_inf: norm_inf(&atp),
        x: x.to_vec(),
        w,
        p,
        atp,
        q,
        direction,
        feasibility_direction,
        optimization_direction,
        energy,
        energy_quadratic,
    })
}

/// `|c^T h + <h, P(x)>_x|` for a tangent direction `h` (`A h = 0`), where
/// `<u, v>_x = u^T diag(c_i / x_i) v`.
///
/// `P(x)` is the steepest-descent direction of `c^T x` in this metric, so
/// the residual vanishes for every `x > 0`.
pub fn gradient_identity_residual(lp: &ValidatedLp, eval: &DynamicsEval, h: &[f64]) -> Result<f64> {
    if h.len() != lp.n() {
        return Err(Error::DimensionMismatch(format!(
            "direction has length {}, expected {}",
            h.len(),
            lp.n()
        )));
    }
    let h_inf = norm_inf(h);
    let ah = norm_inf(&lp.a().mul_vec(h));
    if ah > 1e-10 * lp.a().norm_inf() * h_inf {
        return Err(Error::NotInKernel { residual: ah });
    }
    let c = lp.c();
    let metric: f64 = (0..lp.n())
        .map(|i| h[i] * c[i] / eval.x[i] * eval.direction[i])
        .sum();
    Ok((dot(c, h) + metric).abs())
}

/// Isometric embedding `F(x) = 2 sqrt(C x)`.
pub fn embed(x: &[f64], c: &[f64]) -> Result<Vec<f64>> {
    if x.len() != c.len() {
        return Err(Error::DimensionMismatch(format!(
            "state has length {}, costs have length {}",
            x.len(),
            c.len()
        )));
    }
    check_positive(x)?;
    Ok(x.iter().zip(c).map(|(x, c)| 2.0 * (c * x).sqrt()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub q_inf: f64,
    /// `beta = D^2 n ||b||_1`.
    pub q_bound: f64,
    pub q_bound_ok: bool,
    pub atp_inf: f64,
    /// `D * C_s`.
    pub atp_bound: f64,
    /// Only asserted on feasible points.
    pub atp_bound_ok: Option<bool>,
}

impl BoundReport {
    pub fn all_ok(&self) -> bool {
        self.q_bound_ok && self.atp_bound_ok.unwrap_or(true)
    }
}

pub fn check_bounds(eval: &DynamicsEval, params: &Params, feasible: bool) -> BoundReport {
    let q_inf = norm_inf(&eval.q);
    let atp_bound = params.max_subdet * params.cost_sum as f64;
    BoundReport {
        q_inf,
        q_bound: params.beta,
        q_bound_ok: q_inf <= params.beta * (1.0 + BOUND_SLACK),
        atp_inf: eval.atp_inf,
        atp_bound,
        atp_bound_ok: feasible.then_some(eval.atp_inf <= atp_bound * (1.0 + BOUND_SLACK)),
    }
}

/// `max_i w_i ||A^T L^{-1} a_i||_inf` for positive weights `w`; bounded by `D`.
pub fn key_lemma_max(lp: &ValidatedLp, w: &[f64]) -> Result<f64> {
    check_positive(w)?;
    let mut ws = Workspace::new(lp);
    ws.factor_weights(lp, |i| w[i])?;
    let mut best = 0.0f64;
    let mut z = vec![0.0; lp.m()];
    for i in 0..lp.n() {
        z.copy_from_slice(lp.column(i));
        ws.solve_in_place(&mut z);
        let inf = (0..lp.n())
            .map(|j| dot(lp.column(j), &z).abs())
            .fold(0.0, f64::max);
        best = best.max(w[i] * inf);
    }
    Ok(best)
}

/// `|sum_i y_i a_i^T p - b^T p|` for a point `y` with `A y = b`.
pub fn energy_identity_residual(eval: &DynamicsEval, y: &[f64]) -> f64 {
    (dot(y, &eval.atp) - eval.energy).abs()
}

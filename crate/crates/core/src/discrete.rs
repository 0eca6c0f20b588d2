//! Discrete Physarum iteration `x(k+1) = (1 - h) x(k) + h q(k)` from a
//! strictly positive feasible start.
//!
//! With `0 < eps < 1/2` and `h <= eps / (6 P_max^2)` the potential
//!
//! ```text
//! phi(k) = 4 ln V(k) - (eps h / opt) B(k),   B(k) = sum_i c_i x*_i ln x_i(k)
//! ```
//!
//! drops by at least `h^2 eps^2 / 6` on every step with `V(k) > (1 + eps) opt`,
//! where `V(k) = c^T x(k)`. In verify mode the solver checks that drop on
//! every single step ([`PotentialCertifier`]); [`certify_trace`] performs the
//! same check on a recorded trace.

use log::{debug, warn};
use serde::Serialize;

use crate::dynamics::{check_positive, Workspace};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf};
use crate::model::{Params, ValidatedLp};
use crate::oracle::{self, interior_point};

/// Feasibility tolerance for a supplied start, relative to `||b||_inf + 1`.
pub const START_FEAS_TOL: f64 = 1e-8;
/// Slack added to the required potential drop.
pub const DROP_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    /// `mean(V) + delta * sum(R)` from the enumeration oracle.
    Auto,
    Given(Vec<f64>),
}

/// Ground truth needed to evaluate the potential function.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyData {
    pub opt: f64,
    /// An optimal vertex.
    pub x_star: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DiscreteConfig {
    /// Target relative optimality gap, `0 < eps < 1/2`.
    pub eps: f64,
    /// Step length; `None` selects [`default_step`].
    pub step: Option<f64>,
    /// User iteration cap.
    pub max_iters: u64,
    pub start: Start,
    /// Stop when `||q - x||_inf <= fixed_point_tol (1 + ||x||_inf)`.
    pub fixed_point_tol: f64,
    /// Record every `trace_every`-th iterate (0 disables the trace).
    pub trace_every: u64,
    /// Enables the potential-function certificate.
    pub verify: Option<VerifyData>,
    /// Stop as soon as `c^T x <= target_cost`.
    pub target_cost: Option<f64>,
    /// Accept a start with `A x != b`. No certificate applies to such runs.
    pub allow_infeasible_start: bool,
}

impl Default for DiscreteConfig {
    fn default() -> Self {
        Self {
            eps: 0.1,
            step: None,
            max_iters: u64::MAX,
            start: Start::Auto,
            fixed_point_tol: 1e-9,
            trace_every: 0,
            verify: None,
            target_cost: None,
            allow_infeasible_start: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    FixedPoint,
    IterationBound,
    UserCap,
    /// `c^T x` reached the configured target.
    TargetReached,
    /// `b = 0`: `x = 0` is the unique optimum and no iteration is run.
    ZeroDemand,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteTraceEntry {
    pub k: u64,
    pub x: Vec<f64>,
    /// `V(k) = c^T x(k)`.
    pub cost: f64,
    /// `E(k) = b^T p(k)`.
    pub energy: f64,
    /// `B(k)`, verify mode only.
    pub barrier: Option<f64>,
    /// `phi(k)`, verify mode only.
    pub potential: Option<f64>,
    pub atp_inf: f64,
    pub feas_residual: f64,
}

/// Outcome of the potential-drop check.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CertReport {
    /// Steps (or recorded intervals) with `V > (1 + eps) opt`.
    pub checked_steps: u64,
    pub violations: u64,
    /// Steps where `E/V < 1 - eps/3`.
    pub big_gap_steps: u64,
    /// Remaining steps where `E > (1 + eps/3) opt`.
    pub small_gap_steps: u64,
    /// Checked steps matching neither case.
    pub unclassified_steps: u64,
    /// `h^2 eps^2 / 6`.
    pub required_drop: f64,
    /// Largest `delta_phi + required_drop` seen (per step); `<= 0` is a pass.
    pub worst_excess: f64,
    /// First iteration reaching `V <= (1 + eps) opt`, if any.
    pub first_within_eps: Option<u64>,
}

impl CertReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Online potential-drop checker fed with every step of a run.
#[derive(Debug, Clone)]
pub struct PotentialCertifier {
    opt: f64,
    eps: f64,
    h: f64,
    /// `(index, c_i x*_i)` over the support of `x*`.
    weights: Vec<(usize, f64)>,
    report: CertReport,
}

impl PotentialCertifier {
    pub fn new(lp: &ValidatedLp, verify: &VerifyData, eps: f64, h: f64) -> Self {
        let weights = verify
            .x_star
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, lp.c()[i] * v))
            .collect();
        Self {
            opt: verify.opt,
            eps,
            h,
            weights,
            report: CertReport {
                required_drop: h * h * eps * eps / 6.0,
                worst_excess: f64::NEG_INFINITY,
                ..Default::default()
            },
        }
    }

    /// `B = sum_i c_i x*_i ln x_i`.
    pub fn barrier(&self, x: &[f64]) -> f64 {
        self.weights.iter().map(|&(i, w)| w * x[i].ln()).sum()
    }

    pub fn potential(&self, cost: f64, x: &[f64]) -> f64 {
        4.0 * cost.ln() - self.eps * self.h / self.opt * self.barrier(x)
    }

    fn classify(&mut self, cost: f64, energy: f64) {
        if energy / cost < 1.0 - self.eps / 3.0 {
            self.report.big_gap_steps += 1;
        } else if energy > (1.0 + self.eps / 3.0) * self.opt {
            self.report.small_gap_steps += 1;
        } else {
            self.report.unclassified_steps += 1;
        }
    }

    fn record(&mut self, delta_phi: f64, steps: u64) {
        let required = self.report.required_drop * steps as f64;
        self.report.checked_steps += 1;
        let excess = delta_phi + required;
        self.report.worst_excess = self.report.worst_excess.max(excess / steps as f64);
        if excess > DROP_SLACK {
            self.report.violations += 1;
        }
    }

    /// One step from `(cost, energy)` at iteration `k` to `new_cost`, where
    /// `log_ratio(i) = ln(x_i(k+1) / x_i(k))`.
    pub fn observe(
        &mut self,
        k: u64,
        cost: f64,
        energy: f64,
        new_cost: f64,
        log_ratio: impl Fn(usize) -> f64,
    ) {
        if cost <= (1.0 + self.eps) * self.opt {
            self.report.first_within_eps.get_or_insert(k);
            return;
        }
        let delta_b: f64 = self.weights.iter().map(|&(i, w)| w * log_ratio(i)).sum();
        let delta_phi =
            4.0 * ((new_cost - cost) / cost).ln_1p() - self.eps * self.h / self.opt * delta_b;
        self.classify(cost, energy);
        self.record(delta_phi, 1);
    }

    pub fn finish(mut self) -> CertReport {
        if self.report.checked_steps == 0 {
            self.report.worst_excess = 0.0;
        }
        self.report
    }
}

/// `h = eps / (6 P_max^2)`.
pub fn default_step(params: &Params, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::BadEps(eps));
    }
    Ok(eps / (6.0 * params.p_max * params.p_max))
}

/// Explicit step count `ceil(6 (4 ln M + 2 eps h ln M_x) / (h^2 eps^2))`
/// after which `c^T x <= (1 + eps) opt` is guaranteed, where `c^T x(0) <= M opt`
/// and `1/M_x <= x_i(0) <= M_x`. Saturates at `u64::MAX`.
pub fn iteration_bound(m: f64, m_x: f64, eps: f64, h: f64) -> u64 {
    let numerator = 6.0 * (4.0 * m.max(1.0).ln() + 2.0 * eps * h * m_x.max(1.0).ln());
    let bound = numerator / (h * h * eps * eps);
    // absorb the few ulps of rounding in the logarithms before taking the ceiling
    let rounded = bound.round();
    let bound = if (bound - rounded).abs() <= 1e-12 * bound.max(1.0) {
        rounded
    } else {
        bound.ceil()
    };
    if bound >= u64::MAX as f64 {
        u64::MAX
    } else {
        bound.max(0.0) as u64
    }
}

/// A single step `x' = (1 - h) x + h q`.
pub fn step(lp: &ValidatedLp, x: &[f64], h: f64) -> Result<Vec<f64>> {
    check_positive(x)?;
    let mut ws = Workspace::new(lp);
    ws.potentials_at(lp, x)?;
    let c = lp.c();
    let next: Vec<f64> = (0..lp.n())
        .map(|i| {
            let q = x[i] / c[i] * ws.atp()[i];
            (1.0 - h) * x[i] + h * q
        })
        .collect();
    if let Some(index) = next.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::PositivityLost {
            iteration: 0,
            index,
            value: next[index],
        });
    }
    Ok(next)
}

#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    pub x: Vec<f64>,
    /// Final `c^T x`.
    #[serde(rename = "V")]
    pub cost: f64,
    #[serde(rename = "iters")]
    pub iterations: u64,
    pub stop_reason: StopReason,
    /// Step length used.
    pub h: f64,
    /// Iteration cap derived from the worst-case bound.
    pub iteration_bound: u64,
    pub feas_residual: f64,
    /// Whether `h` satisfies the step-size condition of the certificate.
    pub certified_step: bool,
    pub certificate: Option<CertReport>,
}

fn resolve_start(lp: &ValidatedLp, config: &DiscreteConfig) -> Result<Vec<f64>> {
    let start = match &config.start {
        Start::Given(s) => s.clone(),
        Start::Auto => {
            let result =
                oracle::enumerate(lp).map_err(|e| Error::NoFeasibleInteriorStart(e.to_string()))?;
            interior_point(&result, None)
                .map_err(|e| Error::NoFeasibleInteriorStart(e.to_string()))?
        }
    };
    if start.len() != lp.n() {
        return Err(Error::DimensionMismatch(format!(
            "start has length {}, expected {}",
            start.len(),
            lp.n()
        )));
    }
    if let Some(i) = start.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::NoFeasibleInteriorStart(format!(
            "start[{i}] = {} is not strictly positive",
            start[i]
        )));
    }
    if !config.allow_infeasible_start && !lp.is_feasible(&start, START_FEAS_TOL) {
        return Err(Error::NoFeasibleInteriorStart(format!(
            "start violates Ax = b by {:e}",
            lp.residual_inf(&start)
        )));
    }
    Ok(start)
}

fn resolve_step(params: &Params, config: &DiscreteConfig) -> Result<(f64, bool)> {
    let auto = default_step(params, config.eps)?;
    match config.step {
        None => Ok((auto, true)),
        Some(h) => {
            let limit = 0.5 / params.p_max;
            if !(h > 0.0 && h <= limit) {
                return Err(Error::BadStep { h, limit });
            }
            let certified = h <= auto;
            if !certified {
                warn!("h = {h:e} exceeds eps/(6 P_max^2) = {auto:e}; the convergence certificate does not apply");
            }
            Ok((h, certified))
        }
    }
}

/// Runs the discrete dynamics. Returns the solution and the recorded trace.
pub fn solve(
    lp: &ValidatedLp,
    params: &Params,
    config: &DiscreteConfig,
) -> Result<(Solution, Vec<DiscreteTraceEntry>)> {
    let (h, certified_step) = resolve_step(params, config)?;
    let n = lp.n();
    if lp.b_is_zero() {
        return Ok((
            Solution {
                x: vec![0.0; n],
                cost: 0.0,
                iterations: 0,
                stop_reason: StopReason::ZeroDemand,
                h,
                iteration_bound: 0,
                feas_residual: 0.0,
                certified_step,
                certificate: None,
            },
            Vec::new(),
        ));
    }
    let mut x = resolve_start(lp, config)?;
    let c = lp.c();

    // opt >= c_min / D since every nonzero vertex entry is at least 1/D
    let c_min = c.iter().copied().fold(f64::INFINITY, f64::min);
    let opt_lower = c_min / params.max_subdet;
    let m_hat = (lp.cost(&x) / opt_lower).max(1.0);
    let m_x = x.iter().map(|&v| v.max(1.0 / v)).fold(1.0, f64::max);
    let bound = iteration_bound(m_hat, m_x, config.eps, h);
    debug!("discrete solve: h = {h:e}, M = {m_hat}, M_x = {m_x}, bound = {bound}");

    let mut certifier = config
        .verify
        .as_ref()
        .map(|v| PotentialCertifier::new(lp, v, config.eps, h));
    let mut ws = Workspace::new(lp);
    let mut trace = Vec::new();
    let mut next = vec![0.0; n];
    let mut k: u64 = 0;

    let record = |k: u64,
                  x: &[f64],
                  cost: f64,
                  energy: f64,
                  atp: &[f64],
                  cert: Option<&PotentialCertifier>| {
        DiscreteTraceEntry {
            k,
            x: x.to_vec(),
            cost,
            energy,
            barrier: cert.map(|c| c.barrier(x)),
            potential: cert.map(|c| c.potential(cost, x)),
            atp_inf: norm_inf(atp),
            feas_residual: lp.residual_inf(x),
        }
    };

    let stop_reason = loop {
        ws.potentials_at(lp, &x)?;
        let atp = ws.atp();
        let energy = dot(lp.b(), ws.potentials());
        let cost = lp.cost(&x);
        let mut fp_residual = 0.0f64;
        let mut x_inf = 0.0f64;
        for i in 0..n {
            let q = x[i] / c[i] * atp[i];
            fp_residual = fp_residual.max((q - x[i]).abs());
            x_inf = x_inf.max(x[i].abs());
        }

        let reason = if fp_residual <= config.fixed_point_tol * (1.0 + x_inf) {
            Some(StopReason::FixedPoint)
        } else if config.target_cost.is_some_and(|t| cost <= t) {
            Some(StopReason::TargetReached)
        } else if k >= bound {
            Some(StopReason::IterationBound)
        } else if k >= config.max_iters {
            Some(StopReason::UserCap)
        } else {
            None
        };
        if let Some(reason) = reason {
            if config.trace_every > 0 {
                trace.push(record(k, &x, cost, energy, atp, certifier.as_ref()));
            }
            if let Some(cert) = certifier.as_mut() {
                if cost <= (1.0 + config.eps) * cert.opt {
                    cert.report.first_within_eps.get_or_insert(k);
                }
            }
            break reason;
        }
        if config.trace_every > 0 && k % config.trace_every == 0 {
            trace.push(record(k, &x, cost, energy, atp, certifier.as_ref()));
        }

        let mut new_cost = 0.0;
        for i in 0..n {
            let q = x[i] / c[i] * atp[i];
            let v = (1.0 - h) * x[i] + h * q;
            if !(v > 0.0) {
                return Err(Error::PositivityLost {
                    iteration: k + 1,
                    index: i,
                    value: v,
                });
            }
            next[i] = v;
            new_cost += c[i] * v;
        }
        if let Some(cert) = certifier.as_mut() {
            cert.observe(k, cost, energy, new_cost, |i| {
                (h * (atp[i] / c[i] - 1.0)).ln_1p()
            });
        }
        std::mem::swap(&mut x, &mut next);
        k += 1;
    };

    let cost = lp.cost(&x);
    Ok((
        Solution {
            feas_residual: lp.residual_inf(&x),
            x,
            cost,
            iterations: k,
            stop_reason,
            h,
            iteration_bound: bound,
            certified_step,
            certificate: certifier.map(PotentialCertifier::finish),
        },
        trace,
    ))
}

/// Checks the potential drop on a recorded trace.
///
/// Consecutive recorded entries `k < k'` with `V(k) > (1 + eps) opt` must
/// satisfy `phi(k') - phi(k) <= -(k' - k) h^2 eps^2 / 6 + 1e-10`. The
/// potential is recomputed from the recorded states with the supplied `opt`
/// and `x_star`.
pub fn certify_trace(
    lp: &ValidatedLp,
    trace: &[DiscreteTraceEntry],
    opt: f64,
    eps: f64,
    h: f64,
    x_star: &[f64],
) -> Result<CertReport> {
    if trace
        .iter()
        .any(|e| e.potential.is_none() || e.barrier.is_none())
    {
        return Err(Error::MissingVerifyData);
    }
    let verify = VerifyData {
        opt,
        x_star: x_star.to_vec(),
    };
    let mut cert = PotentialCertifier::new(lp, &verify, eps, h);
    for pair in trace.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.cost <= (1.0 + eps) * opt {
            cert.report.first_within_eps.get_or_insert(a.k);
            continue;
        }
        let steps = b.k.saturating_sub(a.k).max(1);
        let delta_phi = cert.potential(b.cost, &b.x) - cert.potential(a.cost, &a.x);
        cert.classify(a.cost, a.energy);
        cert.record(delta_phi, steps);
    }
    if let Some(last) = trace.last() {
        if last.cost <= (1.0 + eps) * opt {
            cert.report.first_within_eps.get_or_insert(last.k);
        }
    }
    Ok(cert.finish())
}

//! Continuous dynamics `x' = q - x`, integrated in log coordinates
//! `u = ln x` where it reads `u_i' = a_i^T p / c_i - 1`. Positivity of every
//! state is structural.
//!
//! The integrator is the Dormand–Prince 5(4) pair with per-step error control
//! and the usual FSAL reuse of the last stage.

use log::debug;
use serde::Serialize;

use crate::dynamics::{check_positive, Workspace};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf};
use crate::model::{Params, ValidatedLp};
use crate::oracle::OracleResult;

/// Samples whose cost gap is at or below this are treated as exact.
pub const GAP_FLOOR: f64 = 1e-12;
/// Slack on the coordinate bound `x_i(t) <= max(x_i(0), beta)`.
pub const XBOUND_SLACK: f64 = 1e-6;
/// Minimal time span required by [`rate_report`].
pub const MIN_REPORT_SPAN: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct FlowConfig {
    /// Any strictly positive start; feasibility is not required.
    pub x0: Vec<f64>,
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub sample_dt: f64,
}

impl FlowConfig {
    pub fn new(x0: Vec<f64>, t_end: f64) -> Self {
        Self {
            x0,
            t_end,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            sample_dt: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowTraceEntry {
    pub t: f64,
    pub x: Vec<f64>,
    /// `c^T x(t)`.
    pub cost: f64,
    /// `b^T p(t)`.
    pub energy: f64,
    /// `||A (x(t) - e^{-t} x(0)) - b||_inf`. Tends to zero like `e^{-t} ||b||_inf`.
    pub feas_residual: f64,
    /// `||A x(t) - b - e^{-t} (A x(0) - b)||_inf`, zero up to integration error.
    pub feas_identity_residual: f64,
    pub atp_inf: f64,
    /// `x_i(t) <= max(x_i(0), beta) (1 + 1e-6)` for all `i`.
    pub xbound_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowTrace {
    pub x0: Vec<f64>,
    pub entries: Vec<FlowTraceEntry>,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
}

impl FlowTrace {
    /// The sample closest to time `t`.
    pub fn sample_near(&self, t: f64) -> Option<&FlowTraceEntry> {
        self.entries
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }

    pub fn last(&self) -> Option<&FlowTraceEntry> {
        self.entries.last()
    }
}

/// Right-hand side in log coordinates, reusing `ws` for the solve.
fn rhs_into(
    lp: &ValidatedLp,
    u: &[f64],
    x: &mut [f64],
    ws: &mut Workspace,
    du: &mut [f64],
) -> Result<()> {
    for (xi, ui) in x.iter_mut().zip(u) {
        *xi = ui.exp();
    }
    ws.potentials_at(lp, x)?;
    let c = lp.c();
    for (i, d) in du.iter_mut().enumerate() {
        *d = ws.atp()[i] / c[i] - 1.0;
    }
    Ok(())
}

/// `du_i = a_i^T p / c_i - 1` with `p` computed at `x = exp(u)`.
pub fn rhs_log(lp: &ValidatedLp, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != lp.n() {
        return Err(Error::DimensionMismatch(format!(
            "u has length {}, expected {}",
            u.len(),
            lp.n()
        )));
    }
    let mut ws = Workspace::new(lp);
    let mut x = vec![0.0; u.len()];
    let mut du = vec![0.0; u.len()];
    rhs_into(lp, u, &mut x, &mut ws, &mut du)?;
    Ok(du)
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus the embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Sampler<'a> {
    lp: &'a ValidatedLp,
    x0: &'a [f64],
    start_residual: Vec<f64>,
    cap: Vec<f64>,
    ws: Workspace,
}

impl Sampler<'_> {
    fn sample(&mut self, t: f64, x: &[f64]) -> Result<FlowTraceEntry> {
        self.ws.potentials_at(self.lp, x)?;
        let decay = (-t).exp();
        let shifted: Vec<f64> = x
            .iter()
            .zip(self.x0)
            .map(|(x, x0)| x - decay * x0)
            .collect();
        let drift = self.lp.residual(x);
        let identity = drift
            .iter()
            .zip(&self.start_residual)
            .map(|(r, r0)| (r - decay * r0).abs())
            .fold(0.0, f64::max);
        Ok(FlowTraceEntry {
            t,
            x: x.to_vec(),
            cost: self.lp.cost(x),
            energy: dot(self.lp.b(), self.ws.potentials()),
            feas_residual: self.lp.residual_inf(&shifted),
            feas_identity_residual: identity,
            atp_inf: norm_inf(self.ws.atp()),
            xbound_ok: x
                .iter()
                .zip(&self.cap)
                .all(|(x, cap)| *x <= cap * (1.0 + XBOUND_SLACK)),
        })
    }
}

/// Integrates from `x0` to `t_end`, sampling every `sample_dt` (and at `t_end`).
pub fn integrate(lp: &ValidatedLp, params: &Params, config: &FlowConfig) -> Result<FlowTrace> {
    let n = lp.n();
    if config.x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "x0 has length {}, expected {n}",
            config.x0.len()
        )));
    }
    check_positive(&config.x0)?;
    for (name, v) in [
        ("t_end", config.t_end),
        ("rel_tol", config.rel_tol),
        ("abs_tol", config.abs_tol),
        ("sample_dt", config.sample_dt),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }

    let mut sampler = Sampler {
        lp,
        x0: &config.x0,
        start_residual: lp.residual(&config.x0),
        cap: config.x0.iter().map(|&v| v.max(params.beta)).collect(),
        ws: Workspace::new(lp),
    };
    let mut ws = Workspace::new(lp);
    let mut u: Vec<f64> = config.x0.iter().map(|v| v.ln()).collect();
    let mut x = config.x0.clone();
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    let mut stage = vec![0.0; n];
    let mut u_new = vec![0.0; n];

    let mut entries = vec![sampler.sample(0.0, &config.x0)?];
    let (mut accepted, mut rejected) = (0u64, 0u64);
    let mut t = 0.0;
    let mut next_index: u64 = 1;
    let sample_time = |j: u64| (j as f64 * config.sample_dt).min(config.t_end);
    let mut dt = config.sample_dt.min(0.1).min(config.t_end);
    let min_dt = 1e-14 * config.t_end;

    rhs_into(lp, &u, &mut x, &mut ws, &mut k[0])?;
    while t < config.t_end {
        let target = sample_time(next_index);
        let mut lands = false;
        let mut h = dt;
        if t + h >= target - 1e-12 * config.t_end.max(1.0) {
            h = target - t;
            lands = true;
        }
        if h < min_dt && !lands {
            return Err(Error::StepSizeUnderflow { t, dt: h });
        }

        for s in 1..7 {
            for i in 0..n {
                let mut acc = u[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                stage[i] = acc;
            }
            rhs_into(lp, &stage, &mut x, &mut ws, &mut k[s])?;
            if s == 6 {
                u_new.copy_from_slice(&stage);
            }
        }

        let mut err = 0.0;
        for i in 0..n {
            let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * h;
            let scale = config.abs_tol + config.rel_tol * u[i].abs().max(u_new[i].abs());
            err += (e / scale).powi(2);
        }
        let err = (err / n as f64).sqrt();

        if err <= 1.0 {
            accepted += 1;
            t = if lands { target } else { t + h };
            std::mem::swap(&mut u, &mut u_new);
            // first same as last: the seventh stage was evaluated at the new point
            let last = k[6].clone();
            k[0].copy_from_slice(&last);
            if lands {
                for (xi, ui) in x.iter_mut().zip(&u) {
                    *xi = ui.exp();
                }
                entries.push(sampler.sample(t, &x)?);
                next_index += 1;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            // a step shortened to hit a sample time says nothing about the next one
            if !lands || h >= dt {
                dt = h * factor;
            }
        } else {
            rejected += 1;
            dt = h * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if dt < min_dt {
                return Err(Error::StepSizeUnderflow { t, dt });
            }
        }
    }
    debug!("flow: {accepted} accepted, {rejected} rejected steps");
    Ok(FlowTrace {
        x0: config.x0.clone(),
        entries,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

/// Convergence diagnostics of a flow trace against the oracle.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub opt: f64,
    /// Least-squares slope of `ln |V(t) - opt|` over the tail; `None` when
    /// the gap never exceeds the floor.
    pub nu_hat: Option<f64>,
    /// The gap was below the floor at every sample.
    pub already_optimal: bool,
    /// `D^-3`.
    pub nu_theory: f64,
    /// `nu_hat <= -nu_theory + 0.05`; vacuously true when already optimal.
    pub decay_class_ok: bool,
    /// `ln R` with `R = exp(8 D^2 C_s ||b||_1) (n + M_x)^2`.
    pub ln_r_theory: f64,
    /// Slope of `ln ||x_N(t)||_inf` over the second half of the trace.
    pub x_n_slope: Option<f64>,
    /// `x_N` decays (vacuously true when `N` is empty).
    pub x_n_decay_ok: bool,
    /// `min_{j in J} x_j(t)` over the second half of the trace.
    pub x_j_floor: f64,
    /// `|V(t) - opt|` non-increasing (up to 1e-9) over the second half.
    pub gap_monotone: bool,
    pub limit_estimate: Vec<f64>,
    /// `||q - x||_inf` at the last sample.
    pub fixed_point_residual: f64,
    /// `||x(t_end) - x(t_end / 2)||_inf`.
    pub limit_drift: f64,
}

/// Least-squares slope of `ys` against `ts`.
pub fn ls_slope(ts: &[f64], ys: &[f64]) -> Option<f64> {
    if ts.len() < 2 {
        return None;
    }
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = ts.iter().map(|t| (t - tm).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = ts.iter().zip(ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    Some(sxy / sxx)
}

pub fn rate_report(
    lp: &ValidatedLp,
    params: &Params,
    trace: &FlowTrace,
    oracle: &OracleResult,
) -> Result<ConvergenceReport> {
    let opt = oracle.opt_value()?;
    let (first, last) = match (trace.entries.first(), trace.entries.last()) {
        (Some(f), Some(l)) if l.t - f.t >= MIN_REPORT_SPAN => (f, l),
        (Some(f), Some(l)) => {
            return Err(Error::InsufficientTrace(format!(
                "trace spans {} time units, need {MIN_REPORT_SPAN}",
                l.t - f.t
            )))
        }
        _ => return Err(Error::InsufficientTrace("trace is empty".into())),
    };

    let gapped: Vec<&FlowTraceEntry> = trace
        .entries
        .iter()
        .filter(|e| (e.cost - opt).abs() > GAP_FLOOR)
        .collect();
    let already_optimal = gapped.is_empty();
    let tail = &gapped[gapped.len() / 2..];
    let nu_hat = ls_slope(
        &tail.iter().map(|e| e.t).collect::<Vec<_>>(),
        &tail
            .iter()
            .map(|e| (e.cost - opt).abs().ln())
            .collect::<Vec<_>>(),
    );
    let d = params.max_subdet;
    let nu_theory = d.powi(-3);
    let decay_class_ok = match nu_hat {
        Some(s) => s <= -nu_theory + 0.05,
        None => already_optimal,
    };

    let m_x = trace.x0.iter().map(|&v| v.max(1.0 / v)).fold(1.0, f64::max);
    let ln_r_theory =
        8.0 * d * d * params.cost_sum as f64 * lp.b_norm1() + 2.0 * (lp.n() as f64 + m_x).ln();

    let t_mid = first.t + (last.t - first.t) / 2.0;
    let second_half: Vec<&FlowTraceEntry> = trace.entries.iter().filter(|e| e.t >= t_mid).collect();
    let x_n_slope = if oracle.off_support.is_empty() {
        None
    } else {
        let ys: Vec<f64> = second_half
            .iter()
            .map(|e| {
                oracle
                    .off_support
                    .iter()
                    .map(|&i| e.x[i])
                    .fold(0.0, f64::max)
                    .ln()
            })
            .collect();
        ls_slope(&second_half.iter().map(|e| e.t).collect::<Vec<_>>(), &ys)
    };
    let x_n_decay_ok = oracle.off_support.is_empty() || x_n_slope.is_some_and(|s| s < 0.0);
    let x_j_floor = second_half
        .iter()
        .flat_map(|e| oracle.support.iter().map(move |&j| e.x[j]))
        .fold(f64::INFINITY, f64::min);
    let gap_monotone = second_half
        .windows(2)
        .all(|w| (w[1].cost - opt).abs() <= (w[0].cost - opt).abs() + 1e-9);

    let x = &last.x;
    let mut ws = Workspace::new(lp);
    ws.potentials_at(lp, x)?;
    let fixed_point_residual = (0..lp.n())
        .map(|i| (x[i] / lp.c()[i] * ws.atp()[i] - x[i]).abs())
        .fold(0.0, f64::max);
    let half = trace
        .sample_near(first.t + (last.t - first.t) / 2.0)
        .expect("trace is non-empty");
    let limit_drift = x
        .iter()
        .zip(&half.x)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    Ok(ConvergenceReport {
        opt,
        nu_hat,
        already_optimal,
        nu_theory,
        decay_class_ok,
        ln_r_theory,
        x_n_slope,
        x_n_decay_ok,
        x_j_floor,
        gap_monotone,
        limit_estimate: x.clone(),
        fixed_point_residual,
        limit_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::model::{compute_params, SubdetMode};
    use crate::oracle::enumerate;

    fn run(lp: &ValidatedLp, x0: Vec<f64>, t_end: f64) -> FlowTrace {
        let p = compute_params(lp, SubdetMode::Exact).unwrap();
        integrate(lp, &p, &FlowConfig::new(x0, t_end)).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let lp = instances::simple2();
        let du = rhs_log(&lp, &[0.5f64.ln(), 0.5f64.ln()]).unwrap();
        assert!((du[0] - 1.0 / 3.0).abs() < 1e-14 && (du[1] + 1.0 / 3.0).abs() < 1e-14);
        let du = rhs_log(&lp, &[0.0, 0.0]).unwrap();
        assert!((du[0] + 1.0 / 3.0).abs() < 1e-14 && (du[1] + 2.0 / 3.0).abs() < 1e-14);
        let lp = instances::identity2();
        let du = rhs_log(&lp, &[2f64.ln(), 3f64.ln()]).unwrap();
        assert!(norm_inf(&du) < 1e-14);
    }

    #[test]
    fn simple2_converges_to_vertex() {
        let lp = instances::simple2();
        let tr = run(&lp, vec![0.5, 0.5], 30.0);
        let last = tr.last().unwrap();
        assert_eq!(last.t, 30.0);
        assert!(
            last.cost >= 1.0 - 1e-9 && last.cost - 1.0 <= 1e-3,
            "{}",
            last.cost
        );
        assert!(tr
            .entries
            .iter()
            .all(|e| e.x.iter().all(|&v| v > 0.0) && e.xbound_ok));
    }

    #[test]
    fn closed_form_on_simple2() {
        // with x1 + x2 = 1 the flow reduces to x2' = -x2 (1 - x2) / (2 - x2)
        // whose solution satisfies 2 ln x2 - ln(1 - x2) = -t + const
        let lp = instances::simple2();
        let tr = run(&lp, vec![0.5, 0.5], 12.0);
        let inv = |x2: f64| 2.0 * x2.ln() - (1.0 - x2).ln();
        let k0 = inv(0.5);
        for e in &tr.entries {
            assert!((inv(e.x[1]) + e.t - k0).abs() < 1e-6, "t = {}", e.t);
        }
    }

    #[test]
    fn fixed_point_is_constant() {
        let lp = instances::identity2();
        let tr = run(&lp, vec![2.0, 3.0], 5.0);
        for e in &tr.entries {
            assert!((e.x[0] - 2.0).abs() < 1e-12 && (e.x[1] - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn infeasible_start_keeps_shifted_identity() {
        let lp = instances::simple2();
        let tr = run(&lp, vec![2.0, 2.0], 30.0);
        for e in &tr.entries {
            assert!(e.feas_identity_residual <= 1e-6, "t = {}", e.t);
            assert!(
                (e.feas_residual - (-e.t).exp()).abs() <= 1e-6,
                "t = {}",
                e.t
            );
        }
        assert_eq!(tr.entries.len(), 121);
    }

    #[test]
    fn rejects_bad_configuration() {
        let lp = instances::simple2();
        let p = compute_params(&lp, SubdetMode::Exact).unwrap();
        assert!(integrate(&lp, &p, &FlowConfig::new(vec![1.0, 0.0], 1.0)).is_err());
        assert!(integrate(&lp, &p, &FlowConfig::new(vec![1.0, 1.0], -1.0)).is_err());
        assert!(integrate(&lp, &p, &FlowConfig::new(vec![1.0], 1.0)).is_err());
    }

    #[test]
    fn rate_report_simple2_and_triangle() {
        let lp = instances::simple2();
        let p = compute_params(&lp, SubdetMode::Exact).unwrap();
        let tr = run(&lp, vec![0.5, 0.5], 40.0);
        let r = rate_report(&lp, &p, &tr, &enumerate(&lp).unwrap()).unwrap();
        let nu = r.nu_hat.unwrap();
        // the tail decays like e^{-t/2}
        assert!((nu + 0.5).abs() < 0.02, "{nu}");
        assert_eq!(r.nu_theory, 1.0);
        assert!(r.x_n_decay_ok && r.x_j_floor > 0.9 && r.gap_monotone);

        let lp = instances::triangle();
        let p = compute_params(&lp, SubdetMode::Exact).unwrap();
        let tr = run(&lp, vec![0.5, 0.5, 0.5], 40.0);
        let r = rate_report(&lp, &p, &tr, &enumerate(&lp).unwrap()).unwrap();
        assert!(r.x_n_decay_ok && r.x_j_floor > 0.0);
    }

    #[test]
    fn rate_report_degenerate_and_short() {
        let lp = instances::identity2();
        let p = compute_params(&lp, SubdetMode::Exact).unwrap();
        let tr = run(&lp, vec![2.0, 3.0], 12.0);
        let r = rate_report(&lp, &p, &tr, &enumerate(&lp).unwrap()).unwrap();
        assert!(r.already_optimal && r.nu_hat.is_none() && r.decay_class_ok);
        let short = run(&lp, vec![2.0, 3.0], 5.0);
        assert!(matches!(
            rate_report(&lp, &p, &short, &enumerate(&lp).unwrap()),
            Err(Error::InsufficientTrace(_))
        ));
    }
}

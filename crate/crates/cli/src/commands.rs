use std::io::Write;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use physarum_core::checks::check_dynamics;
use physarum_core::discrete::{certify_trace, solve, DiscreteConfig, Start, VerifyData};
use physarum_core::entropy_path::{follow_path, max_deviation_from_flow, uniform_grid};
use physarum_core::flow::{integrate, rate_report, FlowConfig, MIN_REPORT_SPAN};
use physarum_core::io::{
    parse_problem, write_trace_file, LoadedProblem, TraceIndex, TraceRow, TraceTable,
};
use physarum_core::{compute_params, enumerate, interior_point, Error, Params, SubdetMode};

use crate::{
    Command, Failure, FlowArgs, ParamsArgs, PathArgs, SolveArgs, StartChoice, VerifyArgs,
    EXIT_INVALID, EXIT_IO, EXIT_OK, EXIT_VIOLATION,
};

type CmdResult = Result<i32, Failure>;

pub(crate) fn dispatch(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Solve(a) => solve_cmd(a, out),
        Command::Flow(a) => flow_cmd(a, out),
        Command::Path(a) => path_cmd(a, out),
        Command::Oracle(a) => {
            let problem = parse_problem(&a.file)?;
            emit(out, &enumerate(&problem.lp)?)
        }
        Command::Params(a) => params_cmd(a, out),
        Command::Verify(a) => verify_cmd(a, out),
    }
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> CmdResult {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::new(EXIT_IO, format!("cannot serialize result: {e}")))?;
    writeln!(out, "{text}").map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
    Ok(EXIT_OK)
}

/// Exact `D` where feasible, otherwise the upper bound.
fn solver_params(problem: &LoadedProblem) -> Result<Params, Failure> {
    match compute_params(&problem.lp, SubdetMode::Exact) {
        Err(Error::ExactTooLarge { n, cap }) => {
            warn!("exact D needs n <= {cap} (n = {n}); using the upper bound");
            Ok(compute_params(&problem.lp, SubdetMode::Bound)?)
        }
        other => Ok(other?),
    }
}

/// The file's start if present, otherwise the oracle interior point.
fn default_start(problem: &LoadedProblem) -> Result<Vec<f64>, Failure> {
    if let Some(s) = &problem.start {
        return Ok(s.clone());
    }
    let oracle = enumerate(&problem.lp)?;
    Ok(interior_point(&oracle, None)?)
}

fn write_trace(path: &std::path::Path, table: &TraceTable) -> Result<(), Failure> {
    write_trace_file(path, table)?;
    info!(
        "wrote {} trace rows to {}",
        table.rows.len(),
        path.display()
    );
    Ok(())
}

fn solve_cmd(a: SolveArgs, out: &mut dyn Write) -> CmdResult {
    let problem = parse_problem(&a.file)?;
    let params = solver_params(&problem)?;
    let start = match a.start {
        StartChoice::Auto => Start::Auto,
        StartChoice::File => Start::Given(problem.start.clone().ok_or_else(|| {
            Failure::new(
                EXIT_INVALID,
                "--start file given but the problem has no start",
            )
        })?),
    };
    let config = DiscreteConfig {
        eps: a.eps,
        step: a.h,
        max_iters: a.max_iters.unwrap_or(u64::MAX),
        start,
        trace_every: if a.trace.is_some() {
            a.trace_every.max(1)
        } else {
            0
        },
        target_cost: a.target_cost,
        allow_infeasible_start: a.experimental_infeasible,
        ..Default::default()
    };
    let (solution, trace) = solve(&problem.lp, &params, &config)?;
    if let Some(path) = &a.trace {
        let table = TraceTable {
            index: TraceIndex::Iteration,
            n: problem.lp.n(),
            rows: trace.iter().map(TraceRow::from).collect(),
        };
        write_trace(path, &table)?;
    }
    emit(out, &solution)
}

fn flow_cmd(a: FlowArgs, out: &mut dyn Write) -> CmdResult {
    let problem = parse_problem(&a.file)?;
    let params = solver_params(&problem)?;
    let x0 = match a.x0 {
        Some(x0) => x0,
        None => default_start(&problem)?,
    };
    let config = FlowConfig {
        x0,
        t_end: a.t_end,
        rel_tol: a.rel_tol,
        abs_tol: a.abs_tol,
        sample_dt: a.sample_dt,
    };
    let trace = integrate(&problem.lp, &params, &config)?;
    if let Some(path) = &a.trace {
        let table = TraceTable {
            index: TraceIndex::Time,
            n: problem.lp.n(),
            rows: trace.entries.iter().map(TraceRow::from).collect(),
        };
        write_trace(path, &table)?;
    }
    let report = if a.t_end >= MIN_REPORT_SPAN {
        match enumerate(&problem.lp) {
            Ok(oracle) if oracle.opt.is_some() => {
                Some(rate_report(&problem.lp, &params, &trace, &oracle)?)
            }
            Ok(_) => None,
            Err(e) => {
                warn!("no convergence report: {e}");
                None
            }
        }
    } else {
        None
    };
    let last = trace.last().expect("trace has the initial sample");
    emit(
        out,
        &json!({
            "t_end": last.t,
            "x": last.x,
            "V": last.cost,
            "feas_residual": last.feas_residual,
            "feas_identity_residual": last.feas_identity_residual,
            "accepted_steps": trace.accepted_steps,
            "rejected_steps": trace.rejected_steps,
            "rate_report": report,
        }),
    )
}

fn path_cmd(a: PathArgs, out: &mut dyn Write) -> CmdResult {
    let problem = parse_problem(&a.file)?;
    let s = default_start(&problem)?;
    let grid = uniform_grid(a.mu_max, a.grid_step)?;
    let path = follow_path(&problem.lp, &s, &grid)?;
    if let Some(p) = &a.trace {
        let table = TraceTable {
            index: TraceIndex::Mu,
            n: problem.lp.n(),
            rows: path
                .points
                .iter()
                .map(|pt| TraceRow::from_path_point(&problem.lp, pt))
                .collect(),
        };
        write_trace(p, &table)?;
    }
    let deviation = if a.check_flow {
        let params = solver_params(&problem)?;
        let mut config = FlowConfig::new(s, a.mu_max.max(a.grid_step));
        config.sample_dt = a.grid_step;
        let flow = integrate(&problem.lp, &params, &config)?;
        Some(max_deviation_from_flow(&path, &flow)?)
    } else {
        None
    };
    let last = path.points.last().expect("grid starts at 0");
    emit(
        out,
        &json!({
            "points": path.points.len(),
            "mu": last.mu,
            "x": last.x,
            "y": last.y,
            "V": problem.lp.cost(&last.x),
            "cost_monotone": path.cost_monotone,
            "newton_iters": path.points.iter().map(|p| p.newton_iters).sum::<usize>(),
            "flow_deviation": deviation,
        }),
    )
}

fn params_cmd(a: ParamsArgs, out: &mut dyn Write) -> CmdResult {
    let problem = parse_problem(&a.file)?;
    let mode = if a.exact_d {
        SubdetMode::Exact
    } else {
        SubdetMode::Bound
    };
    emit(out, &compute_params(&problem.lp, mode)?)
}

fn verify_cmd(a: VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let problem = parse_problem(&a.file)?;
    let lp = &problem.lp;
    let params = solver_params(&problem)?;
    let oracle = enumerate(lp)?;
    let opt = oracle.opt_value()?;
    let x_star = oracle
        .optimal_vertex()
        .expect("a feasible instance has an optimal vertex")
        .to_vec();

    let config = DiscreteConfig {
        eps: a.eps,
        trace_every: a.trace_every.max(1),
        verify: Some(VerifyData {
            opt,
            x_star: x_star.clone(),
        }),
        target_cost: Some((1.0 + a.eps) * opt),
        ..Default::default()
    };
    let (solution, trace) = solve(lp, &params, &config)?;
    let online = solution.certificate.clone().expect("verify mode certifies");
    let recorded = certify_trace(lp, &trace, opt, a.eps, solution.h, &x_star)?;
    let within =
        solution.cost >= opt * (1.0 - 1e-9) - 1e-9 && solution.cost <= (1.0 + a.eps) * opt + 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let dynamics = check_dynamics(lp, &params, &oracle, &mut rng, a.samples)?;
    let violations =
        online.violations + recorded.violations + dynamics.violations() + u64::from(!within);

    emit(
        out,
        &json!({
            "opt": opt,
            "V": solution.cost,
            "iters": solution.iterations,
            "stop_reason": solution.stop_reason,
            "within_eps": within,
            "online_certificate": online,
            "trace_certificate": recorded,
            "dynamics": dynamics,
            "violations": violations,
        }),
    )?;
    Ok(if violations == 0 {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    })
}

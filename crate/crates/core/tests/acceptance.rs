//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion fails. Criteria run sequentially in one test so the
//! runtime budget of the discrete runs is measured without contention.

mod common;

use std::time::Instant;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use physarum_core::discrete::{
    certify_trace, iteration_bound, solve, CertReport, DiscreteConfig, Start, StopReason,
    VerifyData,
};
use physarum_core::entropy_path::{follow_path, uniform_grid};
use physarum_core::flow::{integrate, FlowConfig, FlowTrace};
use physarum_core::instances;
use physarum_core::linalg::kernel_basis;
use physarum_core::oracle::{enumerate_with, Arithmetic, EnumerateOptions, Status};
use physarum_core::sampling::{log_uniform_point, random_feasible_point, random_kernel_direction};
use physarum_core::{compute_params, enumerate, evaluate, interior_point, SubdetMode, ValidatedLp};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &'static str, pass: bool, detail: String) -> Outcome {
    println!(
        "criterion {id:>2} [{}] {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    Outcome {
        id,
        name,
        pass,
        detail,
    }
}

fn shipped_with_corpus() -> Vec<(String, ValidatedLp)> {
    let mut all: Vec<(String, ValidatedLp)> = instances::shipped()
        .into_iter()
        .map(|(n, lp)| (n.to_string(), lp))
        .collect();
    all.extend(
        interior_corpus(25)
            .into_iter()
            .enumerate()
            .map(|(i, lp)| (format!("random{i:02}"), lp)),
    );
    all
}

struct DiscreteRun {
    name: String,
    opt: f64,
    cost: f64,
    iterations: u64,
    stop: StopReason,
    online: CertReport,
    recorded: CertReport,
}

const EPS: f64 = 0.1;

/// Discrete solves with eps = 0.1, stopping once `c^T x <= (1 + eps) opt`,
/// with the online certificate on and a recorded trace.
fn discrete_runs(instances: &[(String, ValidatedLp)]) -> (Vec<DiscreteRun>, f64) {
    let start = Instant::now();
    let runs = instances
        .iter()
        .map(|(name, lp)| {
            let oracle = enumerate(lp).unwrap();
            let opt = oracle.opt_value().unwrap();
            let x_star = oracle.optimal_vertex().unwrap().to_vec();
            let params = compute_params(lp, SubdetMode::Exact).unwrap();
            let config = DiscreteConfig {
                eps: EPS,
                trace_every: if name.starts_with("random") { 1000 } else { 1 },
                verify: Some(VerifyData {
                    opt,
                    x_star: x_star.clone(),
                }),
                target_cost: Some((1.0 + EPS) * opt),
                ..Default::default()
            };
            let (sol, trace) = solve(lp, &params, &config).unwrap();
            let recorded = certify_trace(lp, &trace, opt, EPS, sol.h, &x_star).unwrap();
            DiscreteRun {
                name: name.clone(),
                opt,
                cost: sol.cost,
                iterations: sol.iterations,
                stop: sol.stop_reason,
                online: sol.certificate.unwrap(),
                recorded,
            }
        })
        .collect();
    (runs, start.elapsed().as_secs_f64())
}

fn criterion_1(runs: &[DiscreteRun], secs: f64) -> Outcome {
    let bad: Vec<String> = runs
        .iter()
        .filter(|r| !(r.cost >= r.opt * (1.0 - 1e-12) && r.cost <= (1.0 + EPS) * r.opt))
        .map(|r| format!("{} V={} opt={}", r.name, r.cost, r.opt))
        .collect();
    let steps: u64 = runs.iter().map(|r| r.iterations).sum();
    let max = runs.iter().max_by_key(|r| r.iterations).unwrap();
    let stops = runs
        .iter()
        .filter(|r| r.stop == StopReason::TargetReached)
        .count();
    report(
        1,
        "oracle agreement, discrete solve eps=0.1",
        bad.is_empty() && secs <= 60.0,
        format!(
            "{} instances, {} out of range {:?}; {steps} steps total (max {} on {}), \
             {stops} stopped on reaching (1+eps)opt; runtime {secs:.1}s (limit 60s)",
            runs.len(),
            bad.len(),
            bad,
            max.iterations,
            max.name
        ),
    )
}

fn criterion_2(runs: &[DiscreteRun]) -> Outcome {
    let checked: u64 = runs.iter().map(|r| r.online.checked_steps).sum();
    let online: u64 = runs.iter().map(|r| r.online.violations).sum();
    let recorded_pairs: u64 = runs.iter().map(|r| r.recorded.checked_steps).sum();
    let recorded: u64 = runs.iter().map(|r| r.recorded.violations).sum();
    let worst = runs
        .iter()
        .map(|r| r.online.worst_excess)
        .fold(f64::NEG_INFINITY, f64::max);
    let big: u64 = runs.iter().map(|r| r.online.big_gap_steps).sum();
    let small: u64 = runs.iter().map(|r| r.online.small_gap_steps).sum();
    report(
        2,
        "potential drop <= -h^2 eps^2/6 + 1e-10",
        online == 0 && recorded == 0,
        format!(
            "{checked} steps checked online, {online} violations; {recorded_pairs} recorded \
             intervals, {recorded} violations; worst per-step excess {worst:.3e}; \
             big-gap steps {big}, small-gap steps {small}"
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut checks = 0u64;
    for (_, lp) in instances::shipped() {
        let vertices = enumerate(&lp).unwrap().vertices;
        let b: Vec<f64> = lp.raw().b.iter().map(|&v| v as f64).collect();
        for _ in 0..1000 {
            let x = log_uniform_point(&mut rng, lp.n(), 1e-4, 1e4);
            let w: Vec<f64> = x.iter().zip(lp.c()).map(|(x, c)| x / c).collect();
            let p = gauss_solve(laplacian(&lp, &w), b.clone());
            let atp = at_mul(&lp, &p);
            let energy: f64 = b.iter().zip(&p).map(|(b, p)| b * p).sum();
            for y in &vertices {
                let lhs: f64 = y.iter().zip(&atp).map(|(y, a)| y * a).sum();
                worst = worst.max((lhs - energy).abs() / (energy.abs() + 1.0));
                checks += 1;
            }
            // the library's energy agrees with the reference
            let eval = evaluate(&lp, &x).unwrap();
            worst = worst.max((eval.energy - energy).abs() / (energy.abs() + 1.0));
        }
    }
    report(
        3,
        "energy identity sum y_i a_i^T p = b^T p",
        worst <= 1e-8,
        format!("{checks} (x, vertex) pairs, worst scaled residual {worst:.3e} (limit 1e-8)"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut checks = 0;
    for (_, lp) in instances::shipped() {
        let basis = kernel_basis(lp.a()).unwrap();
        let c = lp.c();
        let c_inf = inf(c);
        for _ in 0..100 {
            let x = log_uniform_point(&mut rng, lp.n(), 1e-2, 1e2);
            let h = random_kernel_direction(&mut rng, &basis);
            assert!(inf(&lp.a().mul_vec(&h)) <= 1e-12);
            let eval = evaluate(&lp, &x).unwrap();
            // <h, P>_x with the metric diag(c / x), against the cost c^T h
            let metric: f64 = (0..lp.n())
                .map(|i| h[i] * c[i] / x[i] * eval.direction[i])
                .sum();
            let ch: f64 = h.iter().zip(c).map(|(h, c)| h * c).sum();
            worst = worst.max((ch + metric).abs() / (c_inf * inf(&h) + 1.0));
            checks += 1;
        }
    }
    report(
        4,
        "gradient identity c^T h + h^T H(x) P(x) = 0 on ker A",
        worst <= 1e-8,
        format!("{checks} (x, h) pairs, worst scaled residual {worst:.3e} (limit 1e-8)"),
    )
}

fn criterion_5(instances: &[(String, ValidatedLp)]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let slack = 1.0 + 1e-8;
    let (mut key_v, mut atp_v, mut q_v) = (0u64, 0u64, 0u64);
    let (mut key_n, mut atp_n, mut q_n) = (0u64, 0u64, 0u64);
    let (mut key_r, mut atp_r, mut q_r) = (0.0f64, 0.0f64, 0.0f64);
    for (_, lp) in instances {
        let raw = lp.raw();
        let d = max_subdet(&raw.a) as f64;
        let cost_sum: f64 = raw.c.iter().map(|&c| c as f64).sum();
        let b1: f64 = raw.b.iter().map(|&b| b.abs() as f64).sum();
        let beta = d * d * lp.n() as f64 * b1;
        let b: Vec<f64> = raw.b.iter().map(|&v| v as f64).collect();
        let oracle = enumerate(lp).unwrap();

        for _ in 0..1000 {
            let x = log_uniform_point(&mut rng, lp.n(), 1e-4, 1e4);
            let q = evaluate(lp, &x).unwrap().q;
            q_r = q_r.max(inf(&q) / beta);
            q_v += u64::from(inf(&q) > beta * slack);
            q_n += 1;
        }
        for _ in 0..200 {
            let w = log_uniform_point(&mut rng, lp.n(), 1e-4, 1e4);
            let lap = laplacian(lp, &w);
            for i in 0..lp.n() {
                let ai: Vec<f64> = raw.a.iter().map(|r| r[i] as f64).collect();
                let z = gauss_solve(lap.clone(), ai);
                let val = inf(&at_mul(lp, &z));
                key_r = key_r.max(val * w[i] / d);
                key_v += u64::from(val > d / w[i] * slack);
                key_n += 1;
            }
        }
        for _ in 0..200 {
            let Some(x) = random_feasible_point(&mut rng, &oracle) else {
                continue;
            };
            let w: Vec<f64> = x.iter().zip(lp.c()).map(|(x, c)| x / c).collect();
            let p = gauss_solve(laplacian(lp, &w), b.clone());
            let val = inf(&at_mul(lp, &p));
            atp_r = atp_r.max(val / (d * cost_sum));
            atp_v += u64::from(val > d * cost_sum * slack);
            atp_n += 1;
        }
    }
    report(
        5,
        "bound lemmas (key lemma, ||A^T p|| <= D C_s, ||q|| <= D^2 n ||b||_1)",
        key_v + atp_v + q_v == 0,
        format!(
            "{} instances; key lemma {key_n} checks, {key_v} violations, max ratio {key_r:.4}; \
             A^T p bound {atp_n} feasible points, {atp_v} violations, max ratio {atp_r:.4}; \
             q bound {q_n} points, {q_v} violations, max ratio {q_r:.4}",
            instances.len()
        ),
    )
}

fn run_flow(lp: &ValidatedLp, x0: Vec<f64>, t_end: f64) -> FlowTrace {
    let params = compute_params(lp, SubdetMode::Exact).unwrap();
    integrate(lp, &params, &FlowConfig::new(x0, t_end)).unwrap()
}

fn criterion_6() -> Outcome {
    let lp = instances::simple2();
    let x0 = vec![2.0, 2.0];
    let trace = run_flow(&lp, x0.clone(), 30.0);
    let mut worst = 0.0f64;
    let mut worst_t = 0.0;
    let mut corrected = 0.0f64;
    let mut first_ok = None;
    for e in &trace.entries {
        // ||A (x(t) - e^{-t} x0) - b||_inf from the raw data
        let z: Vec<f64> =
            e.x.iter()
                .zip(&x0)
                .map(|(x, x0)| x - (-e.t).exp() * x0)
                .collect();
        let r = (z[0] + z[1] - 1.0).abs();
        if r > worst {
            worst = r;
            worst_t = e.t;
        }
        if r <= 1e-6 && first_ok.is_none() {
            first_ok = Some(e.t);
        }
        // A x(t) - b = e^{-t} (A x0 - b)
        let drift = (e.x[0] + e.x[1] - 1.0) - (-e.t).exp() * (x0[0] + x0[1] - 1.0);
        corrected = corrected.max(drift.abs());
    }
    report(
        6,
        "flow feasibility identity ||A(x(t) - e^-t x0) - b|| <= 1e-6, simple2, x0=(2,2)",
        worst <= 1e-6,
        format!(
            "{} samples on [0, 30]; max residual {worst:.3e} at t={worst_t}; below 1e-6 from t={:?}; \
             A x(t) - b - e^-t (A x0 - b) stays within {corrected:.3e}",
            trace.entries.len(),
            first_ok
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for (name, lp) in [
        ("simple2", instances::simple2()),
        ("triangle", instances::triangle()),
    ] {
        let s = interior_point(&enumerate(&lp).unwrap(), None).unwrap();
        let grid = uniform_grid(10.0, 0.25).unwrap();
        let path = follow_path(&lp, &s, &grid).unwrap();
        let flow = run_flow(&lp, s, 10.0);
        let mut worst = 0.0f64;
        for p in &path.points {
            let e = flow.entries.iter().find(|e| e.t == p.mu).unwrap();
            worst = worst.max(
                p.x.iter()
                    .zip(&e.x)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            );
        }
        pass &= worst <= 1e-5;
        details.push(format!(
            "{name} {} grid points, max deviation {worst:.3e}",
            path.points.len()
        ));
    }
    report(
        7,
        "entropy path equals flow on mu-grid {0, 0.25, ..., 10} (<= 1e-5)",
        pass,
        details.join("; "),
    )
}

fn criterion_8() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for (name, lp) in instances::shipped() {
        let oracle = enumerate(&lp).unwrap();
        let opt = oracle.opt_value().unwrap();
        let d = max_subdet(&lp.raw().a) as f64;
        let required = -d.powi(-3) + 0.05;
        let trace = run_flow(&lp, interior_point(&oracle, None).unwrap(), 40.0);
        let gapped: Vec<(f64, f64)> = trace
            .entries
            .iter()
            .map(|e| (e.t, (e.cost - opt).abs()))
            .filter(|&(_, g)| g > 1e-12)
            .collect();
        if gapped.len() < 2 {
            details.push(format!("{name}: already optimal, no decay to fit"));
            continue;
        }
        let tail = &gapped[gapped.len() / 2..];
        let ts: Vec<f64> = tail.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = tail.iter().map(|p| p.1.ln()).collect();
        let s = slope(&ts, &ys);
        pass &= s <= required;
        details.push(format!("{name}: slope {s:.4} vs required <= {required:.4}"));
    }
    report(
        8,
        "exponential decay class, slope of ln|V(t)-opt| <= -D^-3 + 0.05",
        pass,
        details.join("; "),
    )
}

fn criterion_9() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for (name, lp) in instances::shipped() {
        let feasible = interior_point(&enumerate(&lp).unwrap(), None).unwrap();
        let infeasible: Vec<f64> = feasible.iter().map(|v| 2.0 * v + 0.5).collect();
        assert!(lp.residual_inf(&infeasible) > 0.1);
        for (kind, x0) in [("feasible", feasible), ("infeasible", infeasible)] {
            let trace = run_flow(&lp, x0, 40.0);
            let end = trace.entries.last().unwrap();
            let mid = trace.entries.iter().find(|e| e.t == 20.0).unwrap();
            let drift = end
                .x
                .iter()
                .zip(&mid.x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            pass &= drift <= 1e-4;
            details.push(format!("{name}/{kind} {drift:.2e}"));
        }
    }
    report(
        9,
        "limit existence ||x(40) - x(20)||_inf <= 1e-4",
        pass,
        details.join("; "),
    )
}

fn criterion_10() -> Outcome {
    let corpus = fuzz_corpus(500);
    let (mut feasible, mut vertices, mut rays) = (0, 0, 0);
    let (mut v_low, mut v_high, mut r_low, mut r_high, mut gap) = (0, 0, 0, 0, 0);
    let mut not_exact = 0;
    for lp in &corpus {
        let oracle = enumerate_with(
            lp,
            EnumerateOptions {
                arithmetic: Arithmetic::Rational,
                ..Default::default()
            },
        )
        .unwrap();
        if oracle.status == Status::Infeasible {
            continue;
        }
        feasible += 1;
        let Some(exact) = &oracle.exact_data else {
            not_exact += 1;
            continue;
        };
        let raw = lp.raw();
        let d = BigRational::from_integer(max_subdet(&raw.a).into());
        let inv_d = d.recip();
        let b1 = BigRational::from_integer(raw.b.iter().map(|v| v.abs()).sum::<i64>().into());
        let opt = exact.opt.clone().unwrap();
        for v in &exact.vertices {
            vertices += 1;
            for e in v.iter().filter(|e| !e.is_zero()) {
                v_low += usize::from(e.abs() < inv_d);
                v_high += usize::from(e.abs() > &d * &b1);
            }
            let cost: BigRational = v
                .iter()
                .zip(&raw.c)
                .map(|(x, &c)| x * BigRational::from_integer(c.into()))
                .sum();
            if cost != opt {
                gap += usize::from(&cost - &opt < &inv_d * &inv_d);
            }
        }
        for r in &exact.rays {
            rays += 1;
            for e in r.iter().filter(|e| !e.is_zero()) {
                r_low += usize::from(e.abs() < inv_d);
                r_high += usize::from(e.abs() > d);
            }
        }
    }
    report(
        10,
        "vertex/ray entry bounds and cost gap >= D^-2, exact, 500 random instances",
        v_low + v_high + r_low + r_high + gap + not_exact == 0,
        format!(
            "{feasible} feasible of {}; {vertices} vertices: {v_low} entries < 1/D, {v_high} > D||b||_1, \
             {gap} non-optimal gaps < 1/D^2; {rays} rays (sum r = 1): {r_low} entries < 1/D, \
             {r_high} > D; {not_exact} not enumerated exactly",
            corpus.len()
        ),
    )
}

fn criterion_11() -> Outcome {
    let lp = instances::simple2();
    let oracle = enumerate(&lp).unwrap();
    let opt = oracle.opt_value().unwrap();
    let x0 = interior_point(&oracle, None).unwrap();
    let params = compute_params(&lp, SubdetMode::Exact).unwrap();
    let config = DiscreteConfig {
        eps: EPS,
        start: Start::Given(x0.clone()),
        max_iters: 1_000_000,
        verify: Some(VerifyData {
            opt,
            x_star: oracle.optimal_vertex().unwrap().to_vec(),
        }),
        ..Default::default()
    };
    let (sol, _) = solve(&lp, &params, &config).unwrap();
    let reached = sol.certificate.as_ref().unwrap().first_within_eps;
    // the bound from the actual start: c^T x0 <= M opt and 1/M_x <= x0_i <= M_x
    let m = lp.cost(&x0) / opt;
    let m_x = x0.iter().map(|&v| v.max(1.0 / v)).fold(1.0, f64::max);
    let h = sol.h;
    let reference = (6.0 * (4.0 * m.ln() + 2.0 * EPS * h * m_x.ln()) / (h * h * EPS * EPS)).ceil();
    let bound = iteration_bound(m, m_x, EPS, h);
    let pass = reached.is_some_and(|k| (k as f64) <= reference)
        && (bound as f64 - reference).abs() <= 1.0
        && sol.stop_reason == StopReason::FixedPoint
        && sol.iterations <= 1_000_000;
    report(
        11,
        "iteration bound sanity on simple2, eps=0.1",
        pass,
        format!(
            "(1+eps)opt reached at k={reached:?} <= bound {bound} (reference {reference}); \
             stop {:?} after {} steps (limit 1e6)",
            sol.stop_reason, sol.iterations
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let corpus = shipped_with_corpus();
    let (runs, secs) = discrete_runs(&corpus);
    let outcomes = vec![
        criterion_1(&runs, secs),
        criterion_2(&runs),
        criterion_3(),
        criterion_4(),
        criterion_5(&corpus),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
        criterion_11(),
    ];
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.pass)
        .map(|o| format!("{} ({}): {}", o.id, o.name, o.detail))
        .collect();
    println!(
        "acceptance: {} of {} criteria pass",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    assert!(
        failed.is_empty(),
        "failing criteria:\n{}",
        failed.join("\n")
    );
}

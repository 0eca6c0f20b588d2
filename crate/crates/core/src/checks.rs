//! Randomized checks of the pointwise identities and bounds of the dynamics.

use rand::Rng;
use serde::Serialize;

use crate::dynamics::{
    check_bounds, energy_identity_residual, evaluate, gradient_identity_residual, key_lemma_max,
    BOUND_SLACK,
};
use crate::error::Result;
use crate::linalg::{kernel_basis, norm_inf};
use crate::model::{Params, ValidatedLp};
use crate::oracle::OracleResult;
use crate::sampling::{log_uniform_point, random_feasible_point, random_kernel_direction};

/// Relative tolerance of the identity checks.
pub const IDENTITY_TOL: f64 = 1e-8;

/// A count of checks and violations for one property.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Tally {
    pub checked: u64,
    pub violations: u64,
    /// Largest scaled residual (or measured/bound ratio) seen.
    pub worst: f64,
}

impl Tally {
    fn record(&mut self, value: f64, ok: bool) {
        self.checked += 1;
        self.worst = self.worst.max(value);
        if !ok {
            self.violations += 1;
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct DynamicsCheckReport {
    /// `sum_i y_i a_i^T p = b^T p` for every vertex `y`.
    pub energy_identity: Tally,
    /// `b^T p = q^T W^{-1} q`.
    pub energy_routes: Tally,
    /// `P = P_f + P_o`.
    pub direction_split: Tally,
    /// `c^T h + h^T H P = 0` for `A h = 0`.
    pub gradient_identity: Tally,
    /// `||q||_inf <= D^2 n ||b||_1`.
    pub q_bound: Tally,
    /// `||A^T p||_inf <= D C_s` on feasible points.
    pub atp_bound: Tally,
    /// `w_i ||A^T L^{-1} a_i||_inf <= D`.
    pub key_lemma: Tally,
    /// `P_f = 0` on feasible points.
    pub feasibility_direction_vanishes: Tally,
}

impl DynamicsCheckReport {
    pub fn violations(&self) -> u64 {
        [
            self.energy_identity,
            self.energy_routes,
            self.direction_split,
            self.gradient_identity,
            self.q_bound,
            self.atp_bound,
            self.key_lemma,
            self.feasibility_direction_vanishes,
        ]
        .iter()
        .map(|t| t.violations)
        .sum()
    }
}

/// Runs every check on `samples` random positive points (log-uniform in
/// `[1e-4, 1e4]`) and on up to `samples` random feasible points.
pub fn check_dynamics<R: Rng>(
    lp: &ValidatedLp,
    params: &Params,
    oracle: &OracleResult,
    rng: &mut R,
    samples: usize,
) -> Result<DynamicsCheckReport> {
    let mut report = DynamicsCheckReport::default();
    let basis = kernel_basis(lp.a())?;
    let c_inf = norm_inf(lp.c());
    let d = params.max_subdet;

    for _ in 0..samples {
        let x = log_uniform_point(rng, lp.n(), 1e-4, 1e4);
        let eval = evaluate(lp, &x)?;

        let scale = eval.energy.abs() + 1.0;
        for y in &oracle.vertices {
            let r = energy_identity_residual(&eval, y) / scale;
            report.energy_identity.record(r, r <= IDENTITY_TOL);
        }
        let r = (eval.energy - eval.energy_quadratic).abs() / scale;
        report.energy_routes.record(r, r <= IDENTITY_TOL);

        let split_scale =
            norm_inf(&eval.feasibility_direction) + norm_inf(&eval.optimization_direction) + 1.0;
        let split = (0..lp.n())
            .map(|i| {
                (eval.direction[i] - eval.feasibility_direction[i] - eval.optimization_direction[i])
                    .abs()
            })
            .fold(0.0, f64::max)
            / split_scale;
        report.direction_split.record(split, split <= 1e-10);

        let h = random_kernel_direction(rng, &basis);
        let r = gradient_identity_residual(lp, &eval, &h)? / (c_inf * norm_inf(&h) + 1.0);
        report.gradient_identity.record(r, r <= IDENTITY_TOL);

        let b = check_bounds(&eval, params, false);
        report.q_bound.record(b.q_inf / b.q_bound, b.q_bound_ok);

        let w = log_uniform_point(rng, lp.n(), 1e-4, 1e4);
        let k = key_lemma_max(lp, &w)?;
        report.key_lemma.record(k / d, k <= d * (1.0 + BOUND_SLACK));
    }

    for _ in 0..samples {
        let Some(x) = random_feasible_point(rng, oracle) else {
            continue;
        };
        let eval = evaluate(lp, &x)?;
        let b = check_bounds(&eval, params, true);
        report
            .atp_bound
            .record(b.atp_inf / b.atp_bound, b.atp_bound_ok == Some(true));
        if lp.residual_inf(&x) <= 1e-10 {
            let r = norm_inf(&eval.feasibility_direction) / (norm_inf(&x) + 1.0);
            report
                .feasibility_direction_vanishes
                .record(r, r <= IDENTITY_TOL);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::model::{compute_params, SubdetMode};
    use crate::oracle::enumerate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shipped_instances_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (name, lp) in instances::shipped() {
            let params = compute_params(&lp, SubdetMode::Exact).unwrap();
            let oracle = enumerate(&lp).unwrap();
            let r = check_dynamics(&lp, &params, &oracle, &mut rng, 50).unwrap();
            assert_eq!(r.violations(), 0, "{name}: {r:?}");
            assert_eq!(r.q_bound.checked, 50);
            assert!(r.atp_bound.checked > 0);
        }
    }
}

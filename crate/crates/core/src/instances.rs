//! Reference instances and seeded random instance generators.

use rand::Rng;

use crate::model::{LinearProgram, ValidatedLp};

/// `min x_1 + 2 x_2  s.t.  x_1 + x_2 = 1`.
pub fn simple2() -> ValidatedLp {
    LinearProgram::new(vec![vec![1, 1]], vec![1], vec![1, 2])
        .validate()
        .expect("simple2 is valid")
}

/// `A = I_2, b = (2, 3), c = (1, 1)`: the feasible set is a single point.
pub fn identity2() -> ValidatedLp {
    LinearProgram::new(vec![vec![1, 0], vec![0, 1]], vec![2, 3], vec![1, 1])
        .validate()
        .expect("identity2 is valid")
}

/// Unit s-t flow on the directed triangle s->u, u->t, s->t with the row of
/// `t` dropped from the incidence matrix. Costs (1, 1, 3): the two-edge path
/// costs 2, the direct edge 3.
pub fn triangle() -> ValidatedLp {
    LinearProgram::new(
        vec![vec![1, 0, 1], vec![-1, 1, 0]],
        vec![1, 0],
        vec![1, 1, 3],
    )
    .validate()
    .expect("triangle is valid")
}

/// Named reference instances.
pub fn shipped() -> Vec<(&'static str, ValidatedLp)> {
    vec![
        ("simple2", simple2()),
        ("identity2", identity2()),
        ("triangle", triangle()),
    ]
}

/// Shape of randomly generated integer instances.
#[derive(Debug, Clone, Copy)]
pub struct RandomShape {
    pub max_m: usize,
    pub max_n: usize,
    /// Entries of `A` are drawn uniformly from `[-max_entry, max_entry]`.
    pub max_entry: i64,
    /// Costs are drawn uniformly from `[1, max_cost]`.
    pub max_cost: i64,
}

impl Default for RandomShape {
    fn default() -> Self {
        Self {
            max_m: 3,
            max_n: 6,
            max_entry: 3,
            max_cost: 3,
        }
    }
}

fn random_matrix<R: Rng>(rng: &mut R, shape: &RandomShape) -> (Vec<Vec<i64>>, Vec<i64>) {
    let m = rng.random_range(1..=shape.max_m);
    let n = rng.random_range(m.max(2)..=shape.max_n.max(m.max(2)));
    let a = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| rng.random_range(-shape.max_entry..=shape.max_entry))
                .collect()
        })
        .collect();
    let c = (0..n)
        .map(|_| rng.random_range(1..=shape.max_cost))
        .collect();
    (a, c)
}

/// Random instance with `b` drawn from the same range as `A`; it may be
/// infeasible. Returns `None` when `A` is rank deficient.
pub fn random_lp<R: Rng>(rng: &mut R, shape: &RandomShape) -> Option<ValidatedLp> {
    let (a, c) = random_matrix(rng, shape);
    let b = (0..a.len())
        .map(|_| rng.random_range(-shape.max_entry..=shape.max_entry))
        .collect();
    LinearProgram::new(a, b, c).validate().ok()
}

/// Random instance with `b = A x_hat` for an integer `x_hat >= 1`, so a
/// strictly positive feasible point exists. `None` when `A` is rank deficient
/// or `b = 0`.
pub fn random_interior_lp<R: Rng>(rng: &mut R, shape: &RandomShape) -> Option<ValidatedLp> {
    let (a, c) = random_matrix(rng, shape);
    let n = c.len();
    let x_hat: Vec<i64> = (0..n).map(|_| rng.random_range(1..=3)).collect();
    let b: Vec<i64> = a
        .iter()
        .map(|row: &Vec<i64>| row.iter().zip(&x_hat).map(|(a, x)| a * x).sum())
        .collect();
    if b.iter().all(|&v| v == 0) {
        return None;
    }
    LinearProgram::new(a, b, c).validate().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shipped_instances_validate() {
        let names: Vec<_> = shipped().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, ["simple2", "identity2", "triangle"]);
    }

    #[test]
    fn random_interior_instances_are_strictly_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let shape = RandomShape::default();
        let mut found = 0;
        while found < 20 {
            if let Some(lp) = random_interior_lp(&mut rng, &shape) {
                assert!(lp.m() <= 3 && lp.n() <= 6 && lp.m() <= lp.n());
                assert!(lp.raw().a.iter().flatten().all(|v| v.abs() <= 3));
                found += 1;
            }
        }
    }
}

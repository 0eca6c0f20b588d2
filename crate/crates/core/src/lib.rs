//! Physarum dynamics for standard-form linear programs
//! `min c^T x  s.t.  A x = b, x >= 0` with integer data and positive costs.
//!
//! The crate provides
//!
//! - pointwise evaluation of the dynamics `x' = q - x` and its decomposition
//!   into feasibility and optimization directions ([`dynamics`]),
//! - the discrete iteration `x <- (1 - h) x + h q` with a potential-function
//!   certificate ([`discrete`]),
//! - log-space adaptive integration of the continuous flow with convergence
//!   diagnostics ([`flow`]),
//! - the entropy-regularized optimizer path computed by dual Newton ascent
//!   ([`entropy_path`]),
//! - an exact vertex/ray enumeration oracle ([`oracle`]),
//! - JSON problem files and CSV traces ([`io`]), and
//! - randomized checks of the pointwise identities ([`checks`], [`sampling`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod checks;
pub mod discrete;
pub mod dynamics;
pub mod entropy_path;
pub mod error;
pub mod flow;
pub mod instances;
pub mod io;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod sampling;

pub use discrete::{DiscreteConfig, Solution, StopReason};
pub use dynamics::{evaluate, DynamicsEval};
pub use error::{Error, Result};
pub use model::{compute_params, validate, LinearProgram, Params, SubdetMode, ValidatedLp};
pub use oracle::{enumerate, interior_point, OracleResult};

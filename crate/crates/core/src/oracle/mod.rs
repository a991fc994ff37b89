//! Independent reference solvers for small instances.
//!
//! Nothing here shares code with the structured solver beyond the data types: the
//! single-constraint blocks use a dual bisection over generic linear solves, and the SCA
//! subproblems use a log-barrier Newton method on the real parametrization.

mod barrier;
mod qcqp;
mod sca;

pub use barrier::{minimize_epigraph, BarrierResult, RealConstraint};
pub use qcqp::{oracle_qcqp1, ConvexSolveReport, Quadratic};
pub use sca::{oracle_direct_sca, oracle_sca_subproblem, zero_forcing_init, SurrogatePoint, SurrogateProblem, SurrogateStream};

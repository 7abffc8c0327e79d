//! Small dense semidefinite programs over unit-trace matrices.
//!
//! The solver handles problems of the form
//!
//! ```text
//! optimize   trace(C W)
//! subject to trace(W) = 1,  W ⪰ 0,
//!            trace(A_k W) {≤, ≥} b_k   for k = 1..K
//! ```
//!
//! with `W` a real symmetric `n × n` matrix. Inequalities are turned into
//! equalities with nonnegative slack variables, each slack living in its own
//! 1×1 semidefinite block, and the resulting block problem is solved with a
//! Mehrotra predictor-corrector primal-dual interior point method using the
//! Nesterov-Todd scaling direction. Everything is dense: the solver targets
//! `n` in the tens and a handful of constraints.
//!
//! ```
//! use nalgebra::DMatrix;
//! use sdp_ipm::{solve_sdp, Sense, SdpProblem, SdpStatus, SolverOptions};
//!
//! let c = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]));
//! let problem = SdpProblem::new(c, Sense::Maximize).unwrap();
//! let solution = solve_sdp(&problem, &SolverOptions::default());
//! assert_eq!(solution.status, SdpStatus::Optimal);
//! assert!((solution.objective_value - 3.0).abs() < 1e-6);
//! ```

mod error;
mod problem;
mod solver;

pub use error::SdpError;
pub use problem::{Constraint, Relation, SdpProblem, Sense};
pub use solver::{solve_sdp, SdpSolution, SdpStatus, SolverOptions};

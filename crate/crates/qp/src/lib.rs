//! Convex quadratic programming by a primal-dual interior-point method.
//!
//! The solver handles problems of the form
//!
//! ```text
//!     maximize    ½ x'Qx + q'x
//!     subject to  A_le x <= b_le,   A_eq x = b_eq,   0 <= x <= u
//! ```
//!
//! with `Q` negative semidefinite and `A` sparse. Each iteration solves a
//! regularised quasi-definite KKT system with a sparse LDLᵀ factorisation
//! under a minimum-degree ordering, so problems with tens of thousands of
//! variables and a few dense columns solve in well under a second.
//!
//! Dual values follow the shadow-price convention of the maximisation:
//! the dual of a row is the derivative of the optimal objective with
//! respect to its right-hand side, so `<=` rows carry nonnegative duals.
//!
//! ```
//! use ldesmarket_qp::{solve, ConvexQP, Sense, SolveOptions, Status};
//!
//! // maximize x s.t. x <= 5
//! let mut qp = ConvexQP::new();
//! let x = qp.add_var(1.0, f64::INFINITY);
//! qp.add_constraint(vec![(x, 1.0)], Sense::Le, 5.0);
//! let res = solve(&qp, &SolveOptions::default()).unwrap();
//! assert_eq!(res.status, Status::Optimal);
//! assert!((res.primal[x] - 5.0).abs() < 1e-7);
//! assert!((res.duals[0] - 1.0).abs() < 1e-7);
//! ```

pub mod dump;
mod ipm;
pub mod kkt;
mod ldl;
mod ordering;
pub mod problem;
mod sparse;

pub use ipm::{solve, Residuals, SolveOptions, SolveResult, Status};
pub use kkt::{verify_kkt, KktReport};
pub use problem::{Constraint, ConvexQP, Sense};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid problem data: {0}")]
    Data(String),
    #[error("quadratic term of variable {0} is positive; objective is not concave")]
    NotConcave(usize),
}

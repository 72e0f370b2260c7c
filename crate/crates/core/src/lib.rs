//! Numerical laboratory for variable-mass inertial Newton dynamics.
//!
//! The second-order flow
//!
//! ```text
//! eps(t) x'' + alpha(t) x' + beta ∇²f(x) x' + ∇f(x) = 0
//! ```
//!
//! interpolates between the continuous Newton flow (`eps = alpha = 0`) and the
//! Levenberg-Marquardt flow (`eps = 0`). This crate provides
//!
//! * benchmark [`objectives`] with analytic gradients and Hessians,
//! * coefficient [`schedules`] and validators for the structural assumptions,
//! * semi-implicit [`integrators`] for all three flows,
//! * distance-bound envelopes in [`bounds`],
//! * the Liouville-Green analysis of quadratic eigenmodes in [`quadratic_lg`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod integrators;
pub mod linalg;
pub mod objectives;
pub mod quadratic_lg;
pub mod quadrature;
pub mod schedules;

pub use bounds::BoundEnvelope;
pub use integrators::{Scheme, SolverConfig, Trajectory};
pub use objectives::{Objective, QuadraticSpec};
pub use quadratic_lg::{LgApprox, RateClass, ScalarMode};
pub use schedules::Schedule;

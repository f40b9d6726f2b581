//! Storage-function learning and dissipativity certification for economic
//! model predictive control.
//!
//! The crate builds economic optimal-control problems ([`problem`]), solves
//! the finite-horizon parametric MPC programs that act as value-function
//! approximators ([`ocp`]), adjusts the parameters of storage, stage and
//! terminal costs by undiscounted Q-learning ([`learner`]), and certifies
//! strict dissipativity of the learned storage function on a grid
//! ([`dissip`]). [`bench`] carries the built-in case studies together with
//! their independent oracles (Riccati value iteration, analytic multipliers,
//! quadratic-storage feasibility scans).
//!
//! The crate is `no_std` + `alloc`; all file and terminal I/O lives in the
//! companion CLI crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod approx;
pub mod bench;
pub mod dissip;
mod fmath;
pub mod learner;
pub mod linalg;
pub mod nlp;
pub mod ocp;
pub mod problem;
pub mod qp;
pub mod rng;

pub use approx::ParamSet;
pub use dissip::DissipativityCertificate;
pub use learner::{LearnerConfig, TdRecord};
pub use ocp::{OcpConfig, OcpSolution, OcpSolver};
pub use problem::{ProblemDefinition, SteadyState};

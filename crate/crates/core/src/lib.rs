//! Minimum-energy finite-time reset of a thermally coupled two-level system.
//!
//! The library computes, classifies, and verifies reset protocols that drive
//! the excited-state population from `1/2` down to a target error `epsilon`
//! in a fixed dimensionless time `tau`, minimizing the work above the
//! quasistatic (Landauer) cost. Both the unconstrained problem and the
//! bounded-control problem (`lambda_H <= lambda_m`) are solved.
//!
//! Modules:
//! - [`model`]: closed-form physics (rates, equilibria, control inversion,
//!   entropy and quasistatic work).
//! - [`ode`]: adaptive Runge-Kutta integration with dense output and events,
//!   root finding, quadrature.
//! - [`trajectory`]: sampled trajectories with an internal dense backbone,
//!   work integrals.
//! - [`unbounded`]: the variational two-point boundary problem, solved by
//!   backward shooting.
//! - [`bounded`]: feasibility, critical times, the three-case
//!   classification, and the touched-case solver.
//! - [`verify`]: independent forward simulation of protocols and a second
//!   work computation, closing the loop on every optimizer output.
//!
//! All quantities are dimensionless (`beta = gamma = 1`): gaps are
//! `beta*lambda`, times `gamma*t`, work in units of `1/beta`.

pub mod bounded;
pub mod error;
pub mod model;
pub mod ode;
pub mod scalar;
pub mod trajectory;
pub mod unbounded;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` concrete aliases for the main public types.
pub type ResetTask64 = model::ResetTask<f64>;
pub type Trajectory64 = trajectory::Trajectory<f64>;
pub type WorkBreakdown64 = trajectory::WorkBreakdown<f64>;
pub type ControlProtocol64 = verify::ControlProtocol<f64>;
pub type SolverConfig64 = unbounded::SolverConfig<f64>;
pub type UnboundedSolution64 = unbounded::UnboundedSolution<f64>;
pub type BoundedSolution64 = bounded::BoundedSolution<f64>;
pub type CaseLabel64 = bounded::CaseLabel<f64>;
pub type CriticalTimes64 = bounded::CriticalTimes<f64>;

//! Mean-field stochastic LQR solvers.
//!
//! Discrete-time plants with multiplicative noise whose dynamics and cost
//! couple the state/input processes with their expectations. The crate
//! solves the infinite-horizon control problem three ways:
//!
//! - [`riccati::run_pi`] — exact policy iteration on the coupled
//!   generalized Riccati equations;
//! - [`primal_dual::run_pd`] — the model-based primal-dual iteration on
//!   the augmented moment system, iterate-identical to policy iteration;
//! - [`model_free::run_pdmf`] — the partially model-free learner, which
//!   replaces the drift-dependent dual solve with a data-driven equation
//!   built from simulated trajectories.
//!
//! All solvers are generic over the working scalar ([`Scalar`]: `f32` or
//! `f64`); the `*64` aliases fix the common choice.

pub mod ensemble;
pub mod error;
pub mod lyapunov;
pub mod model_free;
pub mod ops;
pub mod primal_dual;
pub mod riccati;
pub mod scalar;
pub mod simulator;
pub mod system;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type MfSystem64 = system::MfSystem<f64>;
pub type WeightSpec64 = system::WeightSpec<f64>;
pub type GainPair64 = system::GainPair<f64>;
pub type ValuePair64 = riccati::ValuePair<f64>;
pub type Ensemble64 = ensemble::InitialStateEnsemble<f64>;
pub type Mat64 = nalgebra::DMatrix<f64>;
pub type Vec64 = nalgebra::DVector<f64>;

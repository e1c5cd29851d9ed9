//! Error type shared by all solver modules.

/// Errors surfaced by the solvers and the simulator.
///
/// Numerical payloads are reported as `f64` regardless of the working
/// scalar type.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("indefinite weight: {condition} violated (offending eigenvalue {eigenvalue:.3e})")]
    IndefiniteWeight {
        condition: &'static str,
        eigenvalue: f64,
    },

    #[error("eigenvalue iteration did not converge")]
    EigenFailure,

    #[error("generalized Lyapunov operator is unstable (spectral radius {0:.6})")]
    Unstable(f64),

    #[error("singular linear system in Lyapunov solve")]
    SingularSystem,

    #[error("gains are not stabilizing (spectral radius {0:.6})")]
    NotStabilizing(f64),

    #[error("iteration limit {0} reached before convergence")]
    MaxIterExceeded(usize),

    #[error("{0} is not positive definite; standing assumptions violated")]
    SingularUps(&'static str),

    #[error("22-block of the dual variable is not positive definite")]
    Singular22Block,

    #[error("11-block of the primal variable is singular")]
    Singular11Block,

    #[error("fixed-point iteration diverged (norm {0:.3e})")]
    Divergence(f64),

    #[error("invalid horizon: {0}")]
    InvalidHorizon(String),

    #[error("non-finite state at ensemble {ensemble}, rollout {rollout}, step {step}")]
    NonFiniteState {
        ensemble: usize,
        rollout: usize,
        step: usize,
    },

    #[error("need at least 2 rollouts for sample means, got {0}")]
    InsufficientRollouts(usize),

    #[error("data matrix S^M is rank deficient (min eigenvalue {0:.3e}); enlarge the ensemble or horizon")]
    RankDeficient(f64),

    #[error("regressor matrix is rank deficient (rank {rank}, need {need})")]
    RankDeficientRegressor { rank: usize, need: usize },

    #[error("empirical S^M is not positive definite (min eigenvalue {0:.3e})")]
    SingularData(f64),

    #[error("data-driven dual update is ill conditioned (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("rollout diverged at learning iteration {iteration} (state norm above {limit:.1e})")]
    DivergentRollout { iteration: usize, limit: f64 },

    #[error("ensemble invalid: {0}")]
    InvalidEnsemble(String),
}

pub type Result<T> = std::result::Result<T, Error>;

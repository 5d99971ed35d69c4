//! Crate-wide error type. Variants map onto the failure families surfaced by
//! the CLI exit codes: domain errors, solver failures, and contour failures.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid physical or numerical parameter.
    #[error("domain error: {0}")]
    Domain(String),

    /// Heat release exceeds the Chapman-Jouguet limit (negative discriminant).
    #[error("CJ limit exceeded: q = {q:.6e} > q_CJ = {q_cj:.6e}")]
    CjLimitExceeded { q: f64, q_cj: f64 },

    /// The post-shock (Neumann) temperature does not exceed the ignition
    /// temperature, so no steady reaction zone exists.
    #[error("ignition failure: Neumann temperature {t_neumann:.6e} <= T_ig {t_ig:.6e}")]
    IgnitionFailure { t_neumann: f64, t_ig: f64 },

    /// The computational domain is too short to resolve the wave.
    #[error("domain too short: {0}")]
    DomainTooShort(String),

    /// Newton iteration for the profile BVP failed to converge.
    #[error("profile not found: {0}")]
    ProfileNotFound(String),

    /// Parameter continuation stalled; reports the reachable frontier.
    #[error("continuation stalled after reaching step {reached} of {total}: {reason}")]
    ContinuationStalled {
        reached: usize,
        total: usize,
        reason: String,
    },

    /// End-state Jacobian is defective or has a near-degenerate spectrum.
    #[error("ill-conditioned end states: {0}")]
    IllConditionedEnds(String),

    /// Consistent splitting of the limit matrices was lost along a path.
    #[error("consistent splitting lost at lambda = {re:.6e} + {im:.6e}i: {reason}")]
    SplittingLost { re: f64, im: f64, reason: String },

    /// The ODE integrator for the Evans system failed its tolerances.
    #[error("Evans integration failure: {0}")]
    EvansIntegrationFailure(String),

    /// Contour adaptivity hit its bisection cap before resolving a segment.
    #[error("unresolved contour: {0}")]
    UnresolvedContour(String),

    /// The Evans function (nearly) vanishes on the contour itself.
    #[error("contour passes through a zero near lambda = {re:.6e} + {im:.6e}i")]
    ContourThroughZero { re: f64, im: f64 },

    /// Bisection bracket endpoints share the same root-count status.
    #[error("bad bracket: {0}")]
    BadBracket(String),

    /// Least-squares fit failed (rank-deficient design or too few points).
    #[error("fit error: {0}")]
    FitError(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit-code family used by the CLI: 3 domain, 4 solver, 5 contour.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::CjLimitExceeded { .. }
            | Error::IgnitionFailure { .. }
            | Error::BadBracket(_)
            | Error::FitError(_) => 3,
            Error::DomainTooShort(_)
            | Error::ProfileNotFound(_)
            | Error::ContinuationStalled { .. }
            | Error::IllConditionedEnds(_)
            | Error::EvansIntegrationFailure(_) => 4,
            Error::SplittingLost { .. }
            | Error::UnresolvedContour(_)
            | Error::ContourThroughZero { .. } => 5,
        }
    }
}

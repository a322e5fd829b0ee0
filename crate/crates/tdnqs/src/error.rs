use num_complex::Complex64;
use thiserror::Error;

/// Everything that can go wrong inside the engine.
///
/// Variants split into construction problems (`Invalid`) and numerical
/// failures detected while running; the CLI maps the two groups to different
/// exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// The sigmoid denominator 1 + e^(-z) came within 1e-12 of zero.
    #[error("sigmoid pole near z = {z}: |1 + exp(-z)| = {denom:.2e}")]
    SigmoidPole { z: Complex64, denom: f64 },

    /// A NaN or infinity appeared where a finite value is required.
    #[error("non-finite {what} while {context}")]
    NonFinite {
        what: &'static str,
        context: &'static str,
    },

    /// Imaginary-time descent blew up instead of relaxing.
    #[error("energy diverged to |E| = {energy:.3e} after {steps} steps")]
    EnergyDiverged { energy: f64, steps: usize },

    /// LU factorization hit a (near-)zero pivot.
    #[error("singular system: pivot magnitude {pivot:.3e} at column {col}")]
    Singular { pivot: f64, col: usize },

    /// The regularized solve did not reproduce the right-hand side.
    #[error("linear-solve residual {residual:.3e} exceeds {tol:.0e}")]
    SolveResidual { residual: f64, tol: f64 },

    /// The regularized quantum geometric tensor is numerically unusable.
    #[error("condition number {cond:.3e} exceeds hard limit {limit:.0e}")]
    IllConditioned { cond: f64, limit: f64 },

    /// ⟨H⟩ developed a non-negligible imaginary part in real time.
    #[error("|Im<H>|/|<H>| = {ratio:.3e} exceeds {limit:.0e} in real-time evolution")]
    EnergyNotReal { ratio: f64, limit: f64 },

    /// The |δE| stopping rule never triggered.
    #[error("no convergence within {max_steps} steps (last |dE| = {last_delta:.3e})")]
    NotConverged { max_steps: usize, last_delta: f64 },

    /// A constructor or argument check failed.
    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },
}

impl Error {
    /// True for failures of the numerics (as opposed to bad inputs).
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::Invalid { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    /// A norm descriptor failed validation (non-SPD matrix, p outside (1, ∞),
    /// inadmissible Fourier coefficients, unsupported dimension, ...).
    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    /// An input vector contained NaN or infinity.
    #[error("non-finite input")]
    NonFiniteInput,

    /// A derivative quantity was requested at a point where the norm is not
    /// twice differentiable (the origin, or an axis point for a p-norm with
    /// p < 2).
    #[error("norm is not twice differentiable at the requested point")]
    DegeneratePoint,

    /// An iterative kernel (Newton inversion, projected ascent) did not reach
    /// its residual target.
    #[error("iteration failed to converge: residual {residual:.3e} after {iterations} iterations")]
    SolverFailure { residual: f64, iterations: usize },

    /// The entropic transport solver hit its sweep budget before the marginal
    /// tolerance was met.
    #[error("transport solver did not converge: marginal error {marginal_err:.3e} after {sweeps} sweeps (tolerance {tol:.1e})")]
    NonConvergence {
        marginal_err: f64,
        sweeps: usize,
        tol: f64,
    },

    /// Source and target measures disagree in total mass beyond tolerance.
    #[error("incompatible measures: source mass {source_mass:.6} vs target mass {target_mass:.6} (rel diff {rel:.3e} > {tol:.1e})")]
    IncompatibleMass {
        source_mass: f64,
        target_mass: f64,
        rel: f64,
        tol: f64,
    },

    /// A geometric precondition failed (non-convex polygon, empty node set,
    /// point outside an interpolation grid, grid too coarse, ...).
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// A grid function is malformed: shape/value-length mismatch,
    /// non-positive spacing, non-finite masked values, or an unreadable
    /// serialization.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A matrix argument violates its contract (dimensions, symmetry, or
    /// definiteness).
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    /// Interpolation was requested outside the masked region of a grid
    /// function.
    #[error("point ({0:.6}, {1:.6}) lies outside the interpolation grid")]
    OutsideGrid(f64, f64),

    /// A verifier check was invoked outside its hypotheses (e.g. a chain
    /// identity on a non-Wulff domain, or a potential that does not vanish on
    /// the boundary).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Run-configuration parsing or validation failed.
    #[error("bad configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Report serialization failed while writing artifacts.
    #[error("serialization: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

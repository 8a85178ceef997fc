//! Strang splitting for 1D evolution equations `u' = Au + f(u)` with
//! non-homogeneous Dirichlet data, together with the boundary corrections
//! that restore second (and locally third) order convergence.
//!
//! The crate is organised along the pipeline of a splitting run:
//!
//! - [`grid`]: uniform 1D grids and the semi-discrete operators
//!   (diffusion, advection in conservation form, dispersion) with the
//!   Dirichlet data folded into an affine inhomogeneity,
//! - [`phi`]: dense matrix exponentials and the `phi_k` matrix functions
//!   used to solve the linear subflow exactly for sources that are
//!   polynomial in time,
//! - [`reaction`]: the registry of reaction terms with analytic
//!   derivatives and the pointwise (shifted) reaction flow,
//! - [`correction`]: the interior correction `q` (orders two and three)
//!   and the time-polynomial boundary data of the modified linear subflow,
//! - [`stepper`]: the Strang composition and the time loop,
//! - [`reference`]: tight-tolerance unsplit integration used as ground
//!   truth for all error measurements,
//! - [`harness`]: experiment drivers emitting CSV convergence tables,
//!   scheme comparisons, resonance sweeps and error traces.

pub mod correction;
pub mod field;
pub mod grid;
pub mod harness;
pub mod phi;
pub mod reaction;
pub mod reference;
mod rk;
pub mod stepper;

pub use field::Field;
pub use grid::{
    advection_operator, apply_affine, build_grid, diffusion_operator, dispersion_operator,
    ConstrainedSides, DiscreteOperator, Grid1D, OperatorKind, StateVector,
};
pub use phi::{matrix_exponential, phi_family, propagate_polynomial_source, PhiFamily, PolynomialSource};
pub use reaction::{reaction_flow, Reaction, ShiftedReaction};
pub use stepper::{integrate, strang_step, Scheme, SplitProblem};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("unsupported coefficient: {0}")]
    UnsupportedCoefficient(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown name in registry: {0}")]
    Registry(String),
    #[error("flow left its domain: {0}")]
    FlowDomain(String),
    #[error("integrator failed to converge: {0}")]
    Convergence(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("evaluation outside function domain: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("linear algebra backend error: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code class: 2 for configuration errors, 3 for numeric failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidGrid(_)
            | Error::UnsupportedCoefficient(_)
            | Error::Registry(_)
            | Error::Config(_)
            | Error::Io { .. } => 2,
            Error::DimensionMismatch(_)
            | Error::FlowDomain(_)
            | Error::Convergence(_)
            | Error::NonFinite(_)
            | Error::Domain(_)
            | Error::Linalg(_) => 3,
        }
    }
}

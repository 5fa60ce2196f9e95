use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("field shape {found:?} does not match expected {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("axis mismatch: {0}")]
    AxisMismatch(String),
    #[error("field is not real (imaginary fraction {imag_fraction:e})")]
    NotReal { imag_fraction: f64 },
    #[error("field is not hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("not normalized (integral {integral})")]
    NotNormalized { integral: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("state not resolved on grid (boundary mass {boundary_mass:e})")]
    Unresolved { boundary_mass: f64 },
    #[error("grid too large for direct evaluation ({points} points, limit {limit})")]
    TooLarge { points: usize, limit: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("linear system is singular")]
    Singular,
}

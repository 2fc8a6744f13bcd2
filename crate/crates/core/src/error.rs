use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("root finder did not converge (residual {residual:e})")]
    NonConvergence { residual: f64 },
    #[error("multiple turning point at {0}")]
    MultipleTurningPoint(Complex64),
    #[error("branch of sqrt(q) jumped near {0}")]
    BranchJump(Complex64),
    #[error("quadrature failed to converge on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64 },
    #[error("q has the wrong sign at {0}")]
    SignError(f64),
    #[error("step size underflow near {0}")]
    StepUnderflow(Complex64),
    #[error("cutoff {0} is too small: q is not positive there")]
    CutoffTooSmall(f64),
    #[error("found {found} eigenvalues below the bound, WKB count is {expected}")]
    MissedEigenvalue { found: usize, expected: usize },
    #[error("no sign change bracket found: {0}")]
    NoBracket(String),
    #[error("argument principle aliasing: {0}")]
    PhaseAliasing(String),
    #[error("zero count mismatch: {0}")]
    LostZero(String),
    #[error("only {0} zeros available for the fit")]
    TooFewZeros(usize),
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
}

pub type Result<T> = std::result::Result<T, Error>;

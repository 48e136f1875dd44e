use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole: {0}")]
    Pole(String),
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("tail bound {bound:e} exceeds tolerance {tol:e}")]
    NonConvergentTail { bound: f64, tol: f64 },
    #[error("residue depth {depth} too small, need at least {need}")]
    DepthInsufficient { depth: u32, need: u32 },
    #[error("counter overflow")]
    Overflow,
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("quadrature error estimate {estimate:e} above tolerance {tol:e}")]
    ToleranceNotMet { estimate: f64, tol: f64 },
    #[error("prime cutoff {cutoff} insufficient (tail bound {tail:e})")]
    CutoffInsufficient { cutoff: u64, tail: f64 },
    #[error("decay fit failed: {0}")]
    DecayFitFailed(String),
    #[error("tail unbounded: {0}")]
    TailUnbounded(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

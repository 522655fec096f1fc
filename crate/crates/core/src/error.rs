use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid detector: {0}")]
    InvalidDetector(String),
    #[error("invalid binning: {0}")]
    InvalidBinning(String),
    #[error("coherence kernel is not positive semidefinite (eigenvalue {min:e}, largest {max:e})")]
    NotPositiveSemidefinite { min: f64, max: f64 },
    #[error("unphysical occupation: eigenvalue {0} outside [0, 1]")]
    UnphysicalOccupation(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("need at least {needed} shots, got {got}")]
    InsufficientShots { needed: usize, got: usize },
    #[error("need at least {needed} valid bins along axis {axis}, got {got}")]
    InsufficientBins { axis: &'static str, needed: usize, got: usize },
    #[error("fit did not converge after {iterations} iterations (best chi2 {best_chi2:e})")]
    FitDidNotConverge { iterations: usize, best_chi2: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("determinantal sampler made no progress after {0} proposals")]
    SamplerStalled(u64),
}

impl Error {
    /// True for failures of a numerical procedure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveSemidefinite { .. }
                | Error::FitDidNotConverge { .. }
                | Error::SamplerStalled(_)
                | Error::InsufficientBins { .. }
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;

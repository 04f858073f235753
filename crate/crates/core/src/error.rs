use thiserror::Error;

/// Everything that can go wrong while building inputs or evaluating click statistics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "truncation at n_max = {n_max} leaves tail mass {tail_mass:.3e} above tolerance {tolerance:.1e}; increase n_max"
    )]
    TailTolerance {
        n_max: usize,
        tail_mass: f64,
        tolerance: f64,
    },

    #[error("mode count mismatch: multiplexer has {mux} modes, detector has {det}")]
    ModeMismatch { mux: usize, det: usize },

    #[error("{n_modes} modes exceeds the limit of {cap} for {engine}")]
    TooManyModes {
        n_modes: usize,
        cap: usize,
        engine: &'static str,
    },

    #[error("instance too large for brute-force enumeration: {outcomes} outcomes (limit {limit})")]
    InstanceTooLarge { outcomes: f64, limit: f64 },

    #[error("odd-coherent mean photon number must exceed 1, got {0}")]
    UnreachableMean(f64),

    #[error("no clicks observed (mean click number is 0)")]
    NoClicks,

    #[error("every mode clicked in every trial (mean click number equals N = {0})")]
    Saturated(usize),

    #[error("degenerate Q_PB denominator D = {0:.3e}: every p_j is (nearly) 0 or 1")]
    DegenerateDenominator(f64),

    #[error("degenerate closed form: I(lambda) = {0} is 0 or 1")]
    DegenerateClosedForm(f64),

    #[error(
        "statistic `{0}` needs per-trial rows, but the click table was run without raw retention"
    )]
    RawRowsRequired(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for the errors that signal degenerate click statistics rather than bad input.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::NoClicks
                | Error::Saturated(_)
                | Error::DegenerateDenominator(_)
                | Error::DegenerateClosedForm(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Failures raised by the numerical laboratory.
///
/// Input-guard variants carry the name of the violated hypothesis so the
/// command line front end can map them to exit code 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("nonexistence guard: no radial solution exists for k <= 0 (got k = {k})")]
    NonExistence { k: f64 },

    #[error("subcritical exponent guard: power nonlinearity requires p > p_s = k + 1 = {p_s} (got p = {p})")]
    SubcriticalExponent { p: f64, p_s: f64 },

    #[error("domain guard `{guard}`: {detail}")]
    Domain { guard: &'static str, detail: String },

    #[error("Picard iteration did not converge after {iterations} sweeps (last update {last_update:e}, contraction estimate {contraction:.3})")]
    PicardNonConvergence {
        iterations: usize,
        last_update: f64,
        contraction: f64,
    },

    #[error("step size underflow at s = {s} (h = {h:e})")]
    StepUnderflow { s: f64, h: f64 },

    #[error("event refinement failed near s = {s}")]
    EventRefinement { s: f64 },

    #[error("argument s = {s} lies outside the integrated range [{lo}, {hi}]; extend the trajectory to s_min <= {s}")]
    OutOfRange { s: f64, lo: f64, hi: f64 },

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("classification discrepancy: empirical {empirical} but closed form predicts {predicted}")]
    Discrepancy { empirical: String, predicted: String },

    #[error("asymptotic start s0 = {s0} too small: truncation estimate {estimate:e} exceeds {tolerance:e}")]
    StartTooEarly {
        s0: f64,
        estimate: f64,
        tolerance: f64,
    },
}

impl Error {
    /// True for violations of input hypotheses (as opposed to numerical failures).
    pub fn is_input_guard(&self) -> bool {
        matches!(
            self,
            Error::NonExistence { .. } | Error::SubcriticalExponent { .. } | Error::Domain { .. }
        )
    }

    /// Short machine-readable name of the failure.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonExistence { .. } => "nonexistence_guard",
            Error::SubcriticalExponent { .. } => "subcritical_exponent_guard",
            Error::Domain { guard, .. } => guard,
            Error::PicardNonConvergence { .. } => "picard_non_convergence",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::EventRefinement { .. } => "event_refinement",
            Error::OutOfRange { .. } => "out_of_range",
            Error::Inconclusive(_) => "inconclusive",
            Error::Discrepancy { .. } => "discrepancy",
            Error::StartTooEarly { .. } => "start_too_early",
        }
    }

    pub(crate) fn domain(guard: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            guard,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("invalid tape state: {0}")]
    InvalidTape(String),

    #[error("inverse temperature is unbounded for p1 = {p1}")]
    UnboundedTemperature { p1: f64 },

    #[error("steady state is not unique (smallest singular values {sigma_min:e}, {sigma_next:e})")]
    DegenerateSteadyState { sigma_min: f64, sigma_next: f64 },

    #[error("tape spectrum is degenerate (gap {gap:e})")]
    DegenerateSpectrum { gap: f64 },

    #[error("tape state lies on the pure-state boundary (|c|^2 = {c2:e}, p0*p1 = {p0p1:e})")]
    PureStateBoundary { c2: f64, p0p1: f64 },

    #[error("integration did not converge after {steps} steps")]
    SteadyStateTimeout { steps: usize },

    #[error("integration step {dt:e} exceeds the stability limit {limit:e}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("optimization target is not achievable anywhere in the gap range")]
    TargetInfeasible,

    #[error("operating point matches no regime")]
    UnclassifiedPoint,

    #[error("invalid collision duration tau = {0}")]
    InvalidTau(f64),
}

impl Error {
    /// Short machine-readable tag used in CSV status columns and JSON reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfig { .. } => "invalid_config",
            Error::InvalidTape(_) => "invalid_tape",
            Error::UnboundedTemperature { .. } => "unbounded_temperature",
            Error::DegenerateSteadyState { .. } => "degenerate_steady_state",
            Error::DegenerateSpectrum { .. } => "degenerate_spectrum",
            Error::PureStateBoundary { .. } => "pure_state_boundary",
            Error::SteadyStateTimeout { .. } => "steady_state_timeout",
            Error::StepTooLarge { .. } => "step_too_large",
            Error::TargetInfeasible => "infeasible",
            Error::UnclassifiedPoint => "unclassified",
            Error::InvalidTau(_) => "invalid_tau",
        }
    }

    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig { .. } | Error::InvalidTape(_) | Error::InvalidTau(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

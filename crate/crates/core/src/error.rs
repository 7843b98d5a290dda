use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(
        "dimension mismatch: {what} is {found_units}x{found_hours}, instance is {units}x{hours}"
    )]
    Dimension {
        what: &'static str,
        units: usize,
        hours: usize,
        found_units: usize,
        found_hours: usize,
    },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("failed to parse instance: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("unit {unit}: empty power range [{lo}, {hi}]")]
    EmptyRange { unit: String, lo: f64, hi: f64 },
}

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("parameter `{name}` = {value} is out of range: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance has {bits} commitment bits; exhaustive enumeration is capped at {cap}")]
    TooLarge { bits: usize, cap: usize },
    #[error("grid oracle supports at most {cap} units, got {units}")]
    TooManyUnits { units: usize, cap: usize },
    #[error("grid step must be positive, got {0}")]
    BadStep(f64),
    #[error("no feasible allocation on the {step} MW grid for demand {demand}")]
    NoFeasiblePoint { demand: f64, step: f64 },
}

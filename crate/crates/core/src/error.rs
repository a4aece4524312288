use thiserror::Error;

/// Errors produced by the simulator and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("Gauss law violated at matter site {site}")]
    GaussViolation { site: usize },

    #[error("size limit exceeded: {what} = {got} (max {max})")]
    SizeLimit {
        what: &'static str,
        got: usize,
        max: usize,
    },

    #[error("memory limit: {0}")]
    MemoryLimit(String),

    #[error("invalid coupling profile: {0}")]
    InvalidProfile(String),

    #[error("degenerate ion geometry: {0}")]
    DegenerateGeometry(String),

    #[error("mode {mode} is resonant with the drive (|detuning| = {detuning:.3e} rad/s < floor {floor:.3e})")]
    Resonance {
        mode: usize,
        detuning: f64,
        floor: f64,
    },

    #[error(
        "optimizer did not converge after {iterations} iterations (best objective {objective:.3e})"
    )]
    NoConvergence {
        iterations: usize,
        objective: f64,
        best: Vec<f64>,
    },

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("Krylov breakdown: {0}")]
    KrylovBreakdown(String),

    #[error("propagation tolerance not met: error estimate {estimate:.3e} > {tolerance:.3e}")]
    ToleranceNotMet { estimate: f64, tolerance: f64 },

    #[error("light-cone fit needs a spreading front: {0}")]
    InsufficientSpread(String),

    #[error("no oscillation detected: {0}")]
    NoOscillation(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("resonant denominator at pair ({l1}, {l2}): |V| = {value:.3e}")]
    ResonantDenominator { l1: i32, l2: i32, value: f64 },

    #[error("target energy {energy} outside the thermal bracket ({lower}, {upper})")]
    OutOfBracket { energy: f64, lower: f64, upper: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("config error{}: {message}", location_suffix(.field, .line))]
    Config {
        message: String,
        field: Option<String>,
        line: Option<usize>,
    },

    #[error("scenario '{scenario}': {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn location_suffix(field: &Option<String>, line: &Option<usize>) -> String {
    match (field, line) {
        (Some(f), Some(l)) => format!(" (field `{f}`, line {l})"),
        (Some(f), None) => format!(" (field `{f}`)"),
        (None, Some(l)) => format!(" (line {l})"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config {
            message: message.into(),
            field: None,
            line: None,
        }
    }

    pub(crate) fn config_field(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            message: message.into(),
            field: Some(field.to_string()),
            line: None,
        }
    }

    pub(crate) fn in_scenario(self, scenario: &str) -> Self {
        Error::Scenario {
            scenario: scenario.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Exit-code policy: 0 success, 1 validation/usage errors, 2 runtime
//! failures (I/O, serialization). Contract violations reported by the
//! library map to validation; their messages carry the error name, which
//! scripted callers can match on.

use std::fmt;

use pvcast_core::arima::ArimaError;
use pvcast_core::ensemble::EnsembleError;
use pvcast_core::evolution::GaError;
use pvcast_core::hybrid::HybridError;
use pvcast_core::interpolation::InterpolationError;
use pvcast_core::neuralnet::NnError;
use pvcast_core::regressors::RegressorError;
use pvcast_core::table::CubeError;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("Io: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(format!("Json: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(format!("Csv: {e}"))
    }
}

impl From<CubeError> for CliError {
    fn from(e: CubeError) -> Self {
        match e {
            CubeError::Io(_) | CubeError::Csv(_) => CliError::Runtime(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<InterpolationError> for CliError {
    fn from(e: InterpolationError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<RegressorError> for CliError {
    fn from(e: RegressorError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<EnsembleError> for CliError {
    fn from(e: EnsembleError) -> Self {
        match e {
            EnsembleError::Ga(ga) => ga.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<GaError> for CliError {
    fn from(e: GaError) -> Self {
        match e {
            GaError::Io(_) => CliError::Runtime(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<ArimaError> for CliError {
    fn from(e: ArimaError) -> Self {
        match e {
            ArimaError::Io(_) | ArimaError::Csv(_) => CliError::Runtime(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<HybridError> for CliError {
    fn from(e: HybridError) -> Self {
        match e {
            HybridError::Arima(inner) => inner.into(),
            HybridError::Ga(inner) => inner.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

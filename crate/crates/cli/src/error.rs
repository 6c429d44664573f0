use std::fmt;

use pipediff::diffusermap::MapError;
use pipediff::explorer::ExplorerError;
use pipediff::gasdyn::GasError;
use pipediff::geometry::{DesignParseError, GeometryError, MeshError, StlError};
use pipediff::meanline::MeanlineError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_INCONSISTENT: i32 = 3;
pub const EXIT_MALFORMED: i32 = 4;
pub const EXIT_NUMERIC: i32 = 5;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, unreadable files, invalid values.
    Usage(String),
    Infeasible(String),
    Malformed {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    Numeric {
        operation: String,
        detail: String,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Malformed { .. } => EXIT_MALFORMED,
            CliError::Numeric { .. } => EXIT_NUMERIC,
        }
    }

    pub fn numeric(operation: impl Into<String>, detail: impl fmt::Display) -> Self {
        CliError::Numeric {
            operation: operation.into(),
            detail: detail.to_string(),
        }
    }

    pub fn malformed_json(path: &str, e: &serde_json::Error) -> Self {
        CliError::Malformed {
            path: path.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }

    pub fn design(path: &str, e: DesignParseError) -> Self {
        match e {
            DesignParseError::Json {
                line,
                column,
                message,
            } => CliError::Malformed {
                path: path.to_string(),
                line,
                column,
                message,
            },
            DesignParseError::Invalid(e) => CliError::Usage(format!("{path}: {e}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Infeasible(m) => write!(f, "infeasible design: {m}"),
            CliError::Malformed {
                path,
                line,
                column,
                message,
            } => write!(
                f,
                "malformed JSON in {path} at line {line}, column {column}: {message}"
            ),
            CliError::Numeric { operation, detail } => {
                write!(f, "numeric failure in {operation}: {detail}")
            }
        }
    }
}

impl From<MeanlineError> for CliError {
    fn from(e: MeanlineError) -> Self {
        let operation = match &e {
            MeanlineError::Domain { quantity, .. } => (*quantity).to_string(),
            MeanlineError::NonConvergence { operation, .. }
            | MeanlineError::NonPhysical { operation, .. } => (*operation).to_string(),
            MeanlineError::ReversedFlow { .. } => "vaneless march".into(),
            MeanlineError::EmptySpeedline { .. } => "speedline".into(),
            MeanlineError::Config(m) => return CliError::Usage(m.clone()),
            MeanlineError::Gas(_) => "gas dynamics".into(),
            MeanlineError::Map(_) => "diffuser map".into(),
        };
        CliError::numeric(operation, e)
    }
}

impl From<GasError> for CliError {
    fn from(e: GasError) -> Self {
        match e {
            GasError::Domain { .. } => CliError::Usage(e.to_string()),
            _ => CliError::numeric("blockage", e),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ExplorerError> for CliError {
    fn from(e: ExplorerError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        CliError::Usage(format!("diffuser map: {e}"))
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::Infeasible(reason) => CliError::Infeasible(format!("{reason:?}")),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<StlError> for CliError {
    fn from(e: StlError) -> Self {
        CliError::numeric("stl export", e)
    }
}

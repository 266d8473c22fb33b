use serde::Serialize;
use serde_json::{json, Value};

use shapekit::deform::DeformError;
use shapekit::geometry::GeometryError;
use shapekit::interpreter::ExecError;
use shapekit::llm::{LlmError, ProviderError};
use shapekit::search::SearchError;
use shapekit::seedset::SeedSetError;
use shapekit::shapescript::ScriptError;

/// Exit codes, one per failure family.
pub mod exit {
    pub const OTHER: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const SCRIPT: i32 = 3;
    pub const EXEC: i32 = 4;
    pub const LAYOUT_MISMATCH: i32 = 5;
    pub const PROVIDER: i32 = 6;
    pub const DESIGN: i32 = 7;
    pub const SEARCH: i32 = 8;
    pub const CONFIG: i32 = 9;
    pub const IO: i32 = 10;
}

/// A failure with a stable name, a message and an exit code.
#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[error("{code}: {message}")]
pub struct CliError {
    pub code: String,
    pub message: String,
    #[serde(skip)]
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub col: Option<u32>,
}

impl CliError {
    pub fn new(code: &str, message: impl Into<String>, exit_code: i32) -> Self {
        CliError {
            code: code.to_string(),
            message: message.into(),
            exit_code,
            line: None,
            col: None,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("Usage", message, exit::USAGE)
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self::new("IoError", format!("{}: {e}", path.display()), exit::IO)
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": self })
    }
}

impl From<ScriptError> for CliError {
    fn from(e: ScriptError) -> Self {
        let mut c = CliError::new(e.code(), e.to_string(), exit::SCRIPT);
        if let Some((l, col)) = e.position() {
            c.line = Some(l);
            c.col = Some(col);
        }
        c
    }
}

impl From<ExecError> for CliError {
    fn from(e: ExecError) -> Self {
        CliError::new(e.code(), e.to_string(), exit::EXEC)
    }
}

impl From<DeformError> for CliError {
    fn from(e: DeformError) -> Self {
        let exit_code = match &e {
            DeformError::LayoutMismatch { .. } | DeformError::StructureChanged { .. } => {
                exit::LAYOUT_MISMATCH
            }
            DeformError::Exec(_) => exit::EXEC,
            DeformError::Io(_) => exit::IO,
            _ => exit::OTHER,
        };
        CliError::new(e.code(), e.to_string(), exit_code)
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        let exit_code = match &e {
            LlmError::Provider(_) => exit::PROVIDER,
            LlmError::Config(_) => exit::CONFIG,
            LlmError::EmptyIntent | LlmError::EmptyRequest => exit::USAGE,
            _ => exit::DESIGN,
        };
        CliError::new(e.code(), e.to_string(), exit_code)
    }
}

impl From<ProviderError> for CliError {
    fn from(e: ProviderError) -> Self {
        LlmError::Provider(e).into()
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        let code = match e {
            SearchError::NoSamplers => "NoSamplers",
            SearchError::EmptyTarget => "EmptyTarget",
            SearchError::NoValidCandidate => "NoValidCandidate",
        };
        CliError::new(code, e.to_string(), exit::SEARCH)
    }
}

impl From<SeedSetError> for CliError {
    fn from(e: SeedSetError) -> Self {
        CliError::new("InvalidSeedSet", e.to_string(), exit::CONFIG)
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::new("GeometryError", e.to_string(), exit::OTHER)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::new("JsonError", e.to_string(), exit::CONFIG)
    }
}

impl From<shapekit::config::ConfigError> for CliError {
    fn from(e: shapekit::config::ConfigError) -> Self {
        CliError::new("InvalidConfig", e.to_string(), exit::CONFIG)
    }
}

pub type CliResult<T> = Result<T, CliError>;

//! The JSON document every invocation prints.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::CommandConfig;

pub const TOOL: &str = "edfilter";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    /// Canonical command line for `config`.
    pub argv: Vec<String>,
    pub config: CommandConfig,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostics: Option<Value>,
    pub runtime_ms: f64,
}

impl RunReport {
    pub fn new(
        config: CommandConfig,
        result: Value,
        diagnostics: Option<Value>,
        runtime_ms: f64,
    ) -> Self {
        RunReport {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            argv: config.argv(),
            config,
            result,
            diagnostics,
            runtime_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub tool: String,
    pub version: String,
    pub error: ErrorBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    /// `usage` (exit 2) or `data` (exit 1).
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl ErrorReport {
    pub fn new(kind: &str, message: String, exit_code: i32) -> Self {
        ErrorReport {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            error: ErrorBody {
                kind: kind.into(),
                message,
                exit_code,
            },
        }
    }
}

/// Removes every `runtime_ms` key, at any depth.
pub fn strip_runtime(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("runtime_ms");
            map.values_mut().for_each(strip_runtime);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_runtime),
        _ => {}
    }
}

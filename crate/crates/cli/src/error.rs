use netputsim_core::Error;
use serde_json::{json, Value};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Usage(_) => "usage",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(_) => 1,
            CliError::Usage(_) => 2,
        }
    }

    fn details(&self) -> Option<Value> {
        let CliError::Core(e) = self else {
            return None;
        };
        match e {
            Error::RankDeficient { columns } | Error::MissingColumns(columns) => Some(json!({ "columns": columns })),
            Error::PanelValidation(rows) => Some(json!({
                "rows": rows
                    .iter()
                    .map(|r| json!({
                        "line": r.line,
                        "farm_id": r.farm_id,
                        "column": r.column,
                        "message": r.message,
                    }))
                    .collect::<Vec<_>>()
            })),
            Error::NoConvergence { iterations, trace, .. } => Some(json!({ "iterations": iterations, "trace": trace })),
            Error::UnresolvedOverride { netput, scope } => Some(json!({ "netput": netput, "scope": scope })),
            Error::Io { path, .. } => Some(json!({ "path": path.display().to_string() })),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        let message = match self {
            CliError::Core(e) => e.to_string(),
            CliError::Usage(m) => m.clone(),
        };
        let mut body = json!({ "code": self.code(), "message": message });
        if let Some(d) = self.details() {
            body["details"] = d;
        }
        json!({ "error": body })
    }

    /// One line of JSON on stderr.
    pub fn report(&self) {
        eprintln!("{}", self.to_json());
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(Error::Json(e))
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// A single offending row found while validating panel input.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    /// 1-based line number in the source file (header is line 1).
    pub line: usize,
    pub farm_id: Option<String>,
    pub column: Option<String>,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}", self.line)?;
        if let Some(id) = &self.farm_id {
            write!(f, " (farm {id})")?;
        }
        if let Some(col) = &self.column {
            write!(f, " [{col}]")?;
        }
        write!(f, ": {}", self.message)
    }
}

fn join_rows(rows: &[RowError]) -> String {
    rows.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension { what: String, expected: usize, got: usize },

    #[error("price for {name} must be positive, got {value}")]
    NonPositivePrice { name: String, value: f64 },

    #[error("area divisor must be positive, got {0}")]
    NonPositiveArea(f64),

    #[error("unknown industry '{0}'")]
    UnknownIndustry(String),

    #[error("industry '{0}' missing from input")]
    MissingIndustry(String),

    #[error("unknown netput '{0}'")]
    UnknownNetput(String),

    #[error("unknown region '{0}'")]
    UnknownRegion(String),

    #[error("unknown exogenous variable '{0}'")]
    UnknownExogenous(String),

    #[error("invalid industry spec: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter set: {0}")]
    InvalidParameters(String),

    #[error("industry mismatch: expected {expected}, got {got}")]
    IndustryMismatch { expected: String, got: String },

    #[error("missing column(s): {}", .0.join(", "))]
    MissingColumns(Vec<String>),

    #[error("panel validation failed: {}", join_rows(.0))]
    PanelValidation(Vec<RowError>),

    #[error("empty {0}")]
    Empty(String),

    #[error("negative component '{name}': {value}")]
    NegativeComponent { name: String, value: f64 },

    #[error("expenditure shares sum to {0}, expected 1")]
    SharesNotUnit(f64),

    #[error("no record with positive hired labour")]
    NoLabourRecords,

    #[error("not enough observations: {observations} for {parameters} free parameters")]
    TooFewObservations { observations: usize, parameters: usize },

    #[error("rank-deficient design; collinear columns: {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("estimation did not converge after {iterations} iterations (last relative change {last_change:e})")]
    NoConvergence {
        iterations: usize,
        last_change: f64,
        trace: Vec<f64>,
    },

    #[error("singular information matrix")]
    SingularInformation,

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("constant actual values; R-squared undefined")]
    ConstantActual,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("override for '{netput}' scoped to '{scope}' matches no farm")]
    UnresolvedOverride { netput: String, scope: String },

    #[error("quantity deltas were computed for different prices than supplied")]
    ProvenanceMismatch,

    #[error("demand curve: {0}")]
    InvalidGrid(String),

    #[error("need at least {needed} farms, got {got}")]
    TooFewFarms { needed: usize, got: usize },

    #[error("synthetic panel config: {0}")]
    InvalidSynthConfig(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code, used by the CLI error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension_mismatch",
            Error::NonPositivePrice { .. } => "non_positive_price",
            Error::NonPositiveArea(_) => "non_positive_area",
            Error::UnknownIndustry(_) => "unknown_industry",
            Error::MissingIndustry(_) => "missing_industry",
            Error::UnknownNetput(_) => "unknown_netput",
            Error::UnknownRegion(_) => "unknown_region",
            Error::UnknownExogenous(_) => "unknown_exogenous",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::InvalidParameters(_) => "invalid_parameters",
            Error::IndustryMismatch { .. } => "industry_mismatch",
            Error::MissingColumns(_) => "missing_columns",
            Error::PanelValidation(_) => "panel_validation",
            Error::Empty(_) => "empty_input",
            Error::NegativeComponent { .. } => "negative_component",
            Error::SharesNotUnit(_) => "shares_not_unit",
            Error::NoLabourRecords => "no_labour_records",
            Error::TooFewObservations { .. } => "too_few_observations",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::NoConvergence { .. } => "no_convergence",
            Error::SingularInformation => "singular_information",
            Error::Asymmetric(_) => "asymmetric_matrix",
            Error::ConstantActual => "constant_actual",
            Error::InvalidScenario(_) => "invalid_scenario",
            Error::UnresolvedOverride { .. } => "unresolved_override",
            Error::ProvenanceMismatch => "provenance_mismatch",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::TooFewFarms { .. } => "too_few_farms",
            Error::InvalidSynthConfig(_) => "invalid_synth_config",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dim(what: impl Into<String>, expected: usize, got: usize) -> Self {
        Error::Dimension {
            what: what.into(),
            expected,
            got,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

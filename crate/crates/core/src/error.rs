use thiserror::Error;

/// A CSV row that could not be turned into an observation.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    /// 1-based line number in the source, header included.
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Outcome of one multi-start restart that did not produce a usable optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct StartDiagnostic {
    pub start: usize,
    pub evaluations: usize,
    pub best_sse: f64,
    pub status: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("{valid} valid rows, at least 2 required; rejected: {}", join_rows(.rejected))]
    TooFewRows { valid: usize, rejected: Vec<RowError> },

    #[error("rejected rows: {}", join_rows(.0))]
    InvalidRows(Vec<RowError>),

    #[error("duplicate timestamp {time} with conflicting prices {first} and {second}")]
    ConflictingDuplicate { time: f64, first: f64, second: f64 },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("window too small: {found} observations in [{t1}, {t2}], minimum {required}")]
    WindowTooSmall { t1: f64, t2: f64, found: usize, required: usize },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("time {t} is not before the critical time t_c = {t_c}")]
    BeyondCriticalTime { t: f64, t_c: f64 },

    #[error("no finite price: return {r} must exceed growth {g}")]
    NoFinitePrice { r: f64, g: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("all {} starts failed to converge", .0.len())]
    NoConvergence(Vec<StartDiagnostic>),

    #[error("no feasible (window, end date) pair; {skipped} pairs skipped")]
    NoFeasiblePair { skipped: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join_rows(rows: &[RowError]) -> String {
    rows.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl Error {
    /// Stable machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyInput => "empty_input",
            Error::MissingColumn(_) => "missing_column",
            Error::TooFewRows { .. } => "too_few_rows",
            Error::InvalidRows(_) => "invalid_rows",
            Error::ConflictingDuplicate { .. } => "conflicting_duplicate",
            Error::InvalidSeries(_) => "invalid_series",
            Error::WindowTooSmall { .. } => "window_too_small",
            Error::InvalidWindow(_) => "invalid_window",
            Error::BeyondCriticalTime { .. } => "beyond_critical_time",
            Error::NoFinitePrice { .. } => "no_finite_price",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Numerical(_) => "numerical",
            Error::NoConvergence(_) => "no_convergence",
            Error::NoFeasiblePair { .. } => "no_feasible_pair",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

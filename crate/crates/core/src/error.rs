use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid job profile `{job_id}`: {reason}")]
    InvalidProfile { job_id: String, reason: String },

    #[error("feature {index} is not finite")]
    NonFiniteFeature { index: usize },

    #[error("missing normalization bound for input slot {index}")]
    MissingBound { index: usize },

    #[error("normalization bound for input slot {index} must be finite and > 0")]
    InvalidBound { index: usize },

    #[error("invalid hardware config: {0}")]
    InvalidConfig(String),

    #[error("invalid config space: {0}")]
    InvalidSpace(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("dimension mismatch in `{field}`: expected {expected}, got {actual}")]
    Dimension {
        field: String,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in `{field}`")]
    NonFinite { field: String },

    #[error("unsupported weights format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("invalid training setup: {0}")]
    InvalidTraining(String),

    #[error("P_total = {p_total} W is unreachable on the cap grid")]
    UnreachableBudget { p_total: u32 },

    #[error("no co-run configurations satisfy P_total = {p_total} W")]
    EmptyConfigSpace { p_total: u32 },

    #[error("job index {index} out of range for a set of {len}")]
    JobIndex { index: usize, len: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph too large for brute force: n = {n} (max {max})")]
    GraphTooLarge { n: usize, max: usize },

    #[error("invalid scheduler input: {0}")]
    InvalidSchedule(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

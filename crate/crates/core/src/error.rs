use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Document does not match the model schema (missing field, wrong type).
    #[error("schema violation: {0}")]
    Schema(String),

    /// Joints do not form a tree rooted at the base link.
    #[error("tree violation at `{element}`: {reason}")]
    Tree { element: String, reason: String },

    /// Physically invalid link or joint parameters.
    #[error("physical violation at `{element}`: {reason}")]
    Physical { element: String, reason: String },

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    Dimension {
        what: String,
        expected: usize,
        actual: usize,
    },

    #[error("degenerate base quaternion (norm {norm:e})")]
    DegenerateQuaternion { norm: f64 },

    #[error("joint `{joint}` position {value} outside limits [{lower}, {upper}]")]
    LimitViolation {
        joint: String,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("unknown contact frame `{0}`")]
    UnknownFrame(String),

    /// The impact KKT system could not be factored.
    #[error("singular impact system (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },

    /// Contact Jacobian lost row rank at this configuration.
    #[error("rank-deficient contact Jacobian (smallest singular value {sigma_min:e})")]
    RankDeficient { sigma_min: f64 },

    /// A matrix expected to be symmetric positive definite was not.
    #[error("{0} is not positive definite")]
    NotPositiveDefinite(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty batch: {0}")]
    EmptyBatch(String),

    #[error("training diverged at epoch {epoch} (loss {loss:e})")]
    Diverged { epoch: usize, loss: f64 },

    #[error("undefined cost of transport: mean planar speed {speed:e} m/s below 1e-3")]
    UndefinedCot { speed: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),
}

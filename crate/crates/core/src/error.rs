use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("reward is not finite: r = {value} at candidate {candidate}, reference {reference}")]
    InvalidReward {
        value: f64,
        candidate: usize,
        reference: usize,
    },
    #[error("element is not part of the output space")]
    NotInSpace,
    #[error("output space is invalid: {0}")]
    InvalidSpace(String),
    #[error("distributions are defined over different spaces ({0} vs {1})")]
    SpaceMismatch(usize, usize),
    #[error("KL divergence undefined: q({0}) = 0 where p({0}) > 0")]
    SupportViolation(usize),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("input was not seen in the dataset")]
    UnseenInput,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("potentials contain a non-finite value at {0}")]
    NonFinitePotential(usize),
    #[error("invalid dependency tree: {0}")]
    InvalidTree(String),
    #[error("Laplacian is numerically singular (pivot {pivot:e} at column {column})")]
    SingularLaplacian { pivot: f64, column: usize },
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

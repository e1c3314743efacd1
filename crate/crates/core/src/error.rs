use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("unknown boundary configuration `{0}`")]
    UnknownBoundary(String),

    #[error("integration blew up at step {step}: non-finite state")]
    BlowUp { step: usize },

    #[error("energy shell unreachable: {0}")]
    ShellUnreachable(String),

    #[error("restriction `{0}` is empty on this ensemble")]
    EmptyRestriction(String),

    #[error("insufficient region exchange: {crossings} crossings (need {required})")]
    InsufficientExchange { crossings: usize, required: usize },

    #[error("quadrature failed to converge on [{lo}, {hi}]: error estimate {estimate:e} > {tolerance:e}")]
    Quadrature { lo: f64, hi: f64, estimate: f64, tolerance: f64 },

    #[error("substate `{substate}`: {source}")]
    Substate {
        substate: String,
        #[source]
        source: Box<Error>,
    },

    #[error("no valid trajectories: all {0} runs were flagged")]
    NoValidTrajectories(usize),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("overestimate contract violated: pi_star_rev = {star} < pi_rev = {truth}")]
    Overestimate { star: f64, truth: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing payload `{wanted}`; available: {available:?}")]
    MissingPayload { wanted: String, available: Vec<String> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn in_substate(self, label: &str) -> Self {
        Error::Substate { substate: label.to_string(), source: Box::new(self) }
    }
}

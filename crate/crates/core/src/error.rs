use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate document id {id:?} at line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("{0}")]
    Invalid(String),
}

/// Failure talking to an embedding or inference backend.
#[derive(Debug, Clone, Error)]
#[error("{message} (retryable: {retryable}, attempts: {attempts})")]
pub struct TransportError {
    pub message: String,
    pub retryable: bool,
    pub attempts: u32,
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedder transport error: {0}")]
    Transport(#[from] TransportError),
    #[error("embedder protocol error: {0}")]
    Protocol(String),
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("empty index")]
    Empty,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("duplicate chunk reference {0:?}")]
    DuplicateId(String),
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

#[derive(Debug, Error)]
pub enum DistributionError {
    #[error("probability for {token:?} is not a finite non-negative number: {p}")]
    BadProbability { token: String, p: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    BadSum { sum: f64 },
    #[error("distribution is empty")]
    Empty,
    #[error("token {token:?} is not an argmax of its distribution")]
    NotArgmax { token: String },
}

#[derive(Debug, Error)]
pub enum LmError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("max_tokens must be at least 1")]
    ZeroMaxTokens,
    #[error("model transport error: {0}")]
    Transport(#[from] TransportError),
    #[error("model protocol error: {0}")]
    Protocol(String),
    #[error("invalid distribution at step {step}: {source}")]
    Distribution {
        step: usize,
        #[source]
        source: DistributionError,
    },
}

impl LmError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, LmError::Transport(t) if t.retryable)
    }
}

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("cannot read mock script {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed mock script: {0}")]
    Parse(String),
    #[error("mock script rule {rule}: {message}")]
    Rule { rule: String, message: String },
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("unknown document {0:?}")]
    UnknownDocument(String),
    #[error("oracle mode requires a gold context")]
    MissingGoldContext,
    #[error("query is empty")]
    EmptyQuery,
    #[error("invalid mode parameters: {0}")]
    InvalidMode(String),
    #[error(transparent)]
    Model(#[from] LmError),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

impl PipelineError {
    pub fn is_backend(&self) -> bool {
        matches!(
            self,
            PipelineError::Model(LmError::Transport(_) | LmError::Protocol(_))
                | PipelineError::Embed(EmbedError::Transport(_) | EmbedError::Protocol(_))
                | PipelineError::Index(IndexError::Embed(EmbedError::Transport(_)))
        )
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("cannot read dataset {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed dataset: {0}")]
    Parse(String),
    #[error("record {id}: {message}")]
    InvalidRecord { id: String, message: String },
    #[error("record {id} failed: {source}")]
    Record {
        id: String,
        #[source]
        source: PipelineError,
    },
    #[error("no thresholds to sweep")]
    NoThresholds,
    #[error("entropy statistics need at least 2 correct and 2 incorrect results, got {correct} and {incorrect}")]
    InsufficientGroups { correct: usize, incorrect: usize },
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error)]
pub enum LatencyError {
    #[error("no scenarios")]
    NoScenarios,
    #[error("no configurations")]
    NoConfigs,
    #[error("invalid latency scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum GateError {
    #[error("entropy window n must be at least 1")]
    ZeroWindow,
    #[error("invalid distribution at step {step}: {source}")]
    Distribution {
        step: usize,
        #[source]
        source: DistributionError,
    },
}

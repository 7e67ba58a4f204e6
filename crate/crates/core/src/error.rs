use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("record {record}: {msg}")]
    Record { record: usize, msg: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("cannot balance: {0}")]
    CannotBalance(String),

    #[error("target too long: {needed} subtokens exceed budget {budget}")]
    TargetTooLong { needed: usize, budget: usize },

    #[error("nothing to explain: classifier abstained on the unperturbed input")]
    NothingToExplain,

    #[error("translation failed: {0}")]
    Translate(String),

    #[error("malformed response: {0}")]
    MalformedResponse(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

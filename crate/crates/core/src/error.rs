use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable set must not be empty")]
    EmptyVarSet,

    #[error("tuple length {got} does not match variable count {expected}")]
    TupleLength { got: usize, expected: usize },

    #[error("value {value} out of range for `{name}` (alphabet size {size})")]
    SymbolRange {
        name: String,
        value: u8,
        size: usize,
    },

    #[error("negative probability mass on tuple {tuple:?}")]
    NegativeMass { tuple: Vec<u8> },

    #[error("masses sum to {got}, expected exactly 1")]
    MassSum { got: String },

    #[error("conditional row for {given:?} sums to {got}, expected exactly 1")]
    RowSum { given: Vec<u8>, got: String },

    #[error("conditional for `{var}` has no row for base tuple {given:?}")]
    MissingRow { var: String, given: Vec<u8> },

    #[error("joint alphabet has {tuples} tuples, exceeding the cap of {max}")]
    AlphabetTooLarge { tuples: u128, max: u128 },

    #[error("parameter out of range: {0}")]
    Param(String),

    #[error("rate vector has no entry for description `{0}`")]
    MissingRate(String),

    #[error("{got} descriptions exceed the enumeration limit of {max}")]
    TooManyDescriptions { got: usize, max: usize },

    #[error("descriptions cover every variable; no source variables remain")]
    NoSourceVars,

    #[error("description `{0}` overlaps the source variables")]
    DescriptionOverlap(String),

    #[error("scheme violates the required factorization: {0}")]
    Factorization(String),

    #[error("scheme violates decodability: {0}")]
    Decodability(String),

    #[error("grid of p values must not be empty")]
    EmptyGrid,

    #[error(
        "decoder candidate band is empty at block length {l}, delta {delta}; \
         smallest feasible delta is {min_delta}"
    )]
    EmptyCandidateBand {
        l: usize,
        delta: f64,
        min_delta: f64,
    },

    #[error("exhaustive enumeration needs message length {l} <= cap {cap}")]
    AuditTooLarge { l: usize, cap: usize },

    #[error("expurgation failed: {good} good pairs, need at least {needed}")]
    NotEnoughGoodPairs { good: u64, needed: u64 },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors shared across the crate. Operations that certify something never
/// weaken the claim on failure; they return one of these instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("invalid scale: {0}")]
    InvalidScale(String),

    #[error("scale mismatch: {0}")]
    ScaleMismatch(String),

    #[error("depth {requested} out of range (truncation depth {depth})")]
    DepthOutOfRange { requested: usize, depth: usize },

    #[error("window too short: missing coordinates [{missing_start}, {missing_end})")]
    WindowTooShort { missing_start: i64, missing_end: i64 },

    #[error("window contains holes at coordinate {0}; expected a fully determined window")]
    UnexpectedHole(i64),

    #[error("phase ambiguous at window length {window_len}: candidates {candidates:?}")]
    AmbiguousPhase { window_len: usize, candidates: Vec<u64> },

    #[error("window inconsistent with every alignment of the level-{level} skeleton")]
    InconsistentPhase { level: u32 },

    #[error("p = {p} and q = {q} are not coprime")]
    NotCoprime { p: u64, q: u64 },

    #[error("word is not a generator: {0}")]
    NotGenerator(String),

    #[error("recursion depth exceeded cap {cap} while evaluating coordinate {coord}")]
    RecursionDepth { coord: i64, cap: usize },

    #[error("memory budget exceeded: need {needed} bytes, budget {budget} bytes")]
    BudgetExceeded { needed: u64, budget: u64 },

    #[error("requested range [{start}, {end}) exceeds built levels (covered [{built_start}, {built_end}))")]
    RangeNotBuilt {
        start: i64,
        end: i64,
        built_start: i64,
        built_end: i64,
    },

    #[error("block parameters too tight: {0}")]
    ParamsTooTight(String),

    #[error("component scales share prime {0}; product requires pairwise coprime periodic structures")]
    PrimeCollision(u64),

    #[error("factor enumeration not certified at length {len}: {reason}")]
    EnumerationNotCertified { len: usize, reason: String },

    #[error("invalid construction spec: {0}")]
    InvalidSpec(String),

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

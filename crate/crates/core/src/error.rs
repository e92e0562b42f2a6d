use thiserror::Error;

/// Errors surfaced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("alphabet must have at least 2 symbols, got {0}")]
    AlphabetTooSmall(usize),

    #[error("alphabet symbol names are not unique: {0:?}")]
    DuplicateSymbolName(String),

    #[error("symbol index {index} out of range for alphabet of size {size}")]
    SymbolOutOfRange { index: usize, size: usize },

    #[error("operands use different alphabets")]
    AlphabetMismatch,

    #[error("sequence must be nonempty")]
    EmptySequence,

    #[error("corpus must contain at least one item")]
    EmptyCorpus,

    #[error("duplicate corpus item id: {0}")]
    DuplicateItemId(String),

    #[error("unknown item id: {0}")]
    UnknownItemId(String),

    #[error("cluster count must be at least 1")]
    ZeroClusters,

    #[error("round count must be at least 1")]
    ZeroRounds,

    #[error("seed id {id} appears in clusters {first} and {second}")]
    ConflictingSeeds { id: String, first: usize, second: usize },

    #[error("seed set leaves {empty} of {k} clusters without seeds (at most k-2 allowed)")]
    TooManySeedlessClusters { empty: usize, k: usize },

    #[error("seed budget {budget} exceeds size {size} of cluster {cluster}")]
    BudgetExceedsCluster { budget: usize, size: usize, cluster: usize },

    #[error("no cluster owns the required fraction {threshold} of items (max ownership {max_share:.3})")]
    NotCollapsed { threshold: f64, max_share: f64 },

    #[error("segment count bound must be at least 1")]
    ZeroSegments,

    #[error("boundary index {tau} out of range 0..={max}")]
    BoundaryOutOfRange { tau: usize, max: usize },

    #[error("bitstream truncated: declared {declared} bits but only {available} available")]
    TruncatedBitstream { declared: usize, available: usize },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("value must be a unit of the field (nonzero mod {0})")]
    ZeroFieldElement(u64),

    #[error("field element {value} not reduced mod {p}")]
    UnreducedFieldElement { value: u64, p: u64 },

    #[error("invalid character index {index} for modulus {p}")]
    InvalidCharacterIndex { index: u64, p: u64 },

    #[error("modulus {p} exceeds the configured cap {cap}")]
    ModulusCapExceeded { p: u64, cap: u64 },

    #[error("candidate family of size {size} exceeds the configured cap {cap}")]
    FamilyCapExceeded { size: u64, cap: u64 },

    #[error("recovery family domain does not match the components")]
    FamilyDomainMismatch,

    #[error("determination check failed at position {position}")]
    NotADetermination { position: usize },

    #[error("components length mismatch: expected {expected}, got {got}")]
    ComponentLengthMismatch { expected: usize, got: usize },

    #[error("need at least {needed} components, got {got}")]
    TooFewComponents { needed: usize, got: usize },

    #[error("lemma inapplicable: |S| = {s_size} exceeds (alpha/2)p^2 = {cap}")]
    SamplerPreconditionViolated { s_size: usize, cap: f64 },

    #[error("vertex ({a}, {c}) outside F_p^x × F_p for p = {p}")]
    VertexOutOfRange { a: u64, c: u64, p: u64 },

    #[error("assumption {flag} claimed but the split's extractor check failed")]
    UncertifiableFlag { flag: &'static str },

    #[error("triple is not certified by the declared witness")]
    WitnessCheckFailed,

    #[error("feature function failed: {0}")]
    FeatureFailed(String),

    #[error("invalid source spec: {0}")]
    InvalidSourceSpec(String),

    #[error("serialization: {0}")]
    Serialization(String),

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

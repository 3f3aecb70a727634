use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {index} ({a}, {b}, {c}): zero area")]
    DegenerateTriangle {
        index: usize,
        a: usize,
        b: usize,
        c: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("involution rejected: {0}")]
    Involution(#[from] InvolutionError),

    #[error("mesh is disconnected; the massless operator has a nullspace larger than the constants")]
    Disconnected,

    #[error("operation requires a positive mass, got m = {0}")]
    MassRequired(f64),

    #[error("massless pairing requires mean-zero test vectors (sum = {0:e})")]
    NotMeanZero(f64),

    #[error("{what}: vertex {vertex} lies outside the allowed region")]
    SupportViolation { what: String, vertex: usize },

    #[error("polynomial context {found:016x} does not match field operator {expected:016x}")]
    ContextMismatch { expected: u64, found: u64 },

    #[error("expected a {expected} polynomial")]
    WrongOrdering { expected: &'static str },

    #[error("degree {degree} exceeds the pairing enumeration cap of {cap}")]
    DegreeTooHigh { degree: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("collar mismatch: {0}")]
    CollarMismatch(String),

    #[error("cap rejected: {0}")]
    Cap(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("potential rejected: {0}")]
    Potential(String),

    #[error("sewing setup: {0}")]
    Sewing(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// First violated condition reported by involution validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvolutionError {
    #[error("permutation has length {found}, mesh has {expected} vertices")]
    Length { expected: usize, found: usize },
    #[error("not a bijection: vertex {0} is hit twice or out of range")]
    NotBijective(usize),
    #[error("theta^2 != id at vertex {0}")]
    NotInvolutive(usize),
    #[error("stiffness not preserved at entry ({0}, {1})")]
    StiffnessNotPreserved(usize, usize),
    #[error("mass not preserved at vertex {0}")]
    MassNotPreserved(usize),
    #[error("partition not swapped: vertex {0} of omega does not map into the exterior")]
    PartitionNotSwapped(usize),
    #[error("boundary vertex {0} is not fixed")]
    BoundaryNotFixed(usize),
}

use thiserror::Error;

/// Every failure mode surfaced by the library.
///
/// Variants are grouped by the module that raises them; all of them are
/// "domain errors" in the CLI exit-code sense.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("degenerate form: determinant of the Gram matrix is zero")]
    DegenerateForm,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("integer overflow while converting {0}")]
    Overflow(String),

    // domains
    #[error("point is within tolerance of the domain boundary")]
    NearBoundary,
    #[error("point lies on the boundary hyperplane of the tube chart")]
    BoundaryPoint,
    #[error("singular denominator in {0}")]
    SingularDenominator(&'static str),
    #[error("point is not in the domain")]
    NotInDomain,

    // parab
    #[error("operation expects a {expected} cusp flag")]
    WrongFlagKind { expected: &'static str },
    #[error("matrix does not stabilize the cusp flag")]
    NotInParabolic,
    #[error("lattice cannot be put into the two-hyperbolic-plane shape: {0}")]
    UnsupportedShape(String),

    // fan
    #[error("cone is not a member of the fan")]
    ConeNotInFan,

    // corecone
    #[error("extreme-point window is not stable between heights {h} and {h2}")]
    UnstableTruncation { h: u64, h2: u64 },
    #[error("generator {index} does not preserve the decomposition")]
    NotConePreserving { index: usize },
    #[error("generator {index} does not preserve the cone")]
    NotCone { index: usize },

    // chern
    #[error("no intersection number supplied for monomial {0}")]
    MissingIntersectionNumber(String),

    // dimform
    #[error("local density counts did not stabilize by k = {k_max}")]
    NotStabilized { k_max: u32 },
    #[error("local density computation exceeds the work budget ({0} candidates)")]
    BudgetExceeded(u128),
    #[error("expected signature (2, n), found ({0}, {1})")]
    WrongSignature(usize, usize),
    #[error("out of scope: {0}")]
    OutOfScope(String),

    // cycles
    #[error("no eigenvalue of the isometry carries a positive-definite plane")]
    NoPositiveEigenplane,
    #[error("matrix is not of finite order")]
    NotRootOfUnity,
    #[error("the cyclic action has nonzero fixed vectors")]
    FixedVectorPresent,
    #[error("matrix is not an isometry of the lattice")]
    NotIsometry,
}

pub type Result<T> = std::result::Result<T, Error>;

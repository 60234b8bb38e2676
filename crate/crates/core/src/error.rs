use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("degenerate matrix (determinant {0:e})")]
    DegenerateMatrix(f64),
    #[error("coincident points in cross-ratio")]
    CoincidentPoints,
    #[error("circle degenerates to a point (1 - h^2 = {0:e})")]
    DegenerateCircle(f64),
    #[error("invalid circle: {0}")]
    InvalidCircle(String),
    #[error("disks overlap or are nested (rho = {0:e})")]
    Overlapping(f64),
    #[error("circles do not intersect transversally (cosine {0})")]
    NotTransverse(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("integration failed at s = {s}: {reason}")]
    Integration { s: f64, reason: String },
    #[error("failed to bracket: {0}")]
    Bracket(String),
    #[error("extrapolation did not converge: {0}")]
    Extrapolation(String),
    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),
    #[error("mean curvature residual {0:e} exceeds tolerance")]
    Residual(f64),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("invalid polyline: {0}")]
    InvalidPolyline(String),
    #[error("delta too large: neighbourhood self-overlaps near segment {segment}")]
    DeltaTooLarge { segment: usize },
    #[error("delta too small relative to polyline resolution near segment {segment}")]
    DeltaTooSmall { segment: usize },
    #[error("chain check failed: {0}")]
    Invalid(String),
    #[error("complement has {0} components, expected 2")]
    ComponentCount(usize),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("circle pairs collide: C_{0}^- and C_{1}^+")]
    CollidingPairs(usize, usize),
    #[error("bridges overlap: {0}")]
    BridgesOverlap(String),
    #[error("station {station}: {reason}; try a smaller epsilon or bridge_width")]
    Station { station: String, reason: String },
    #[error("chain: {0}")]
    Chain(#[from] ChainError),
    #[error("catenoid: {0}")]
    Catenoid(#[from] SolveError),
    #[error("geometry: {0}")]
    Geometry(#[from] GeomError),
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON at line {line}, column {column}: {msg}")]
    Malformed { line: usize, column: usize, msg: String },
    #[error("unsupported schema version {found} for {kind} (expected {expected})")]
    Version { kind: String, found: u32, expected: u32 },
    #[error("invalid {kind}: {msg}")]
    Invalid { kind: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid mode space: {0}")]
    InvalidModeSpace(String),
    #[error("packet too narrow: width {width} must exceed twice the spacing {spacing}")]
    PacketTooNarrow { width: f64, spacing: f64 },
    #[error("packet clipped: tail mass {tail_mass:e} outside the grid exceeds 1e-10")]
    PacketClipped { tail_mass: f64 },
    #[error("duration {duration} is not an integer multiple of the time step {step}")]
    NonCommensurateDuration { duration: f64, step: f64 },
    #[error("operands live on different spaces")]
    SpaceMismatch,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("at least {required} snapshots are required, got {got}")]
    TooFewSnapshots { required: usize, got: usize },
    #[error("snapshots must be uniformly spaced in time")]
    NonUniformSnapshots,
    #[error("time {time} lies outside the process interval [{start}, {end}]")]
    TimeOutsideInterval { time: f64, start: f64, end: f64 },
    #[error("regions do not form a partition of the space: {0}")]
    NotAPartition(String),
    #[error("process intervals differ")]
    IntervalMismatch,
    #[error("product dimension {dimension} exceeds the cap {cap}")]
    ProductDimensionTooLarge { dimension: usize, cap: usize },
    #[error("both s-set weights vanish; the overlap functional is undefined")]
    BothWeightsVanish,
    #[error("division by a vanishing weight ({0})")]
    VanishingWeight(&'static str),
    #[error("malformed candidate pair #{index}: {reason}")]
    MalformedCandidate { index: usize, reason: String },
    #[error("invalid probability space: {0}")]
    InvalidProbabilitySpace(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("frequency event size {0} exceeds the supported maximum of 1e6 trials")]
    OverflowGuard(u64),
    #[error("unknown ensemble method `{0}`")]
    UnknownMethod(String),
    #[error("coupling marginals do not match the Born weights at time index {time_index} (deviation {deviation:e})")]
    MarginalMismatch { time_index: usize, deviation: f64 },
    #[error("no coupling between consecutive marginals respects the branch constraints at time index {0}")]
    NoCompatibleCoupling(usize),
    #[error("time {0} is not on the ensemble grid")]
    TimeOffGrid(f64),
    #[error("empty s-set list")]
    EmptySSets,
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("cluster lineage ambiguous at time index {time_index}: {reason}")]
    ClusterLineageAmbiguous { time_index: usize, reason: String },
    #[error("operation unsupported: {0}")]
    Unsupported(String),
    #[error("measurement model invalid: {0}")]
    InvalidModel(String),
    #[error("POVM invariant failure: {0}")]
    PovmInvariant(String),
    #[error("state is not normalized (squared norm {0})")]
    Unnormalized(f64),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

use thiserror::Error;

/// Errors raised by the estimation pipeline, the baselines and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),

    #[error("antenna coordinate ({m_y}, {m_z}) is outside the array")]
    IndexOutOfRange { m_y: i64, m_z: i64 },

    #[error("wavelength must be positive, got {0}")]
    NonPositiveWavelength(f64),

    #[error("range must be positive, got {0}")]
    NonPositiveRange(f64),

    #[error("invalid source: {0}")]
    InvalidSource(String),

    #[error("pilot sequence must contain at least one symbol")]
    EmptyPilots,

    #[error("pilot power must be positive, got {0}")]
    NonPositivePilotPower(f64),

    #[error("pilot sequence carries zero energy")]
    ZeroPilotEnergy,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("dense solve limited to M <= {limit} elements (got {m}); use the analytic solver")]
    DenseSizeExceeded { m: usize, limit: usize },

    #[error("center element too small relative to the focus vector ({ratio:.3e}); phase reference unidentifiable")]
    IllConditioned { ratio: f64 },

    #[error("distance fit normal equations are singular")]
    SingularFit,

    #[error("distance fit produced a non-positive inverse range {inv_r:.6e}")]
    NonPositiveDistance { inv_r: f64 },

    #[error("phase wrap precondition violated: max focus phase {max_phase:.3} rad at r = {r_floor} m exceeds pi")]
    PhaseWrap { max_phase: f64, r_floor: f64 },

    #[error("search grid has {points} points, limit is {limit}")]
    GridTooLarge { points: u64, limit: u64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors shared by all laboratory modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty measure")]
    EmptyMeasure,

    #[error("separation violated: points {0:?} and {1:?} are within delta")]
    SeparationViolated([f64; 2], [f64; 2]),

    #[error("energy too concentrated: no square survives the Chebyshev cut")]
    EnergyTooConcentrated,

    #[error("support escapes domain: atom at {0:?} too close to the boundary")]
    SupportEscapesDomain([f64; 2]),

    #[error("wraparound risk: convolution grid would need {needed} cells (budget {budget})")]
    WraparoundRisk { needed: usize, budget: usize },

    #[error("grid too large for the direct route without FFT flag ({n} cells per axis)")]
    GridTooLarge { n: usize },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),

    #[error("infeasible (s,C) for the dyadic branching generator: s={s}, c={c}")]
    InfeasibleGenerator { s: f64, c: f64 },

    #[error("incidence invariant violation: anchor {anchor} does not meet square ({ix},{iy})")]
    IncidenceInvariant { anchor: usize, ix: i64, iy: i64 },

    #[error("fewer than 3 scales in the series")]
    TooFewScales,

    #[error("unsupported scale: {0}")]
    BadScale(String),

    #[error("serialization: {0}")]
    Serde(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the physics and numerics layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("oscillator offset (x0, y0) is zero; the a = 0 reduction is not supported")]
    DegenerateMomentum,

    #[error("coupling alpha must be positive, got {0}")]
    NonPositiveCoupling(f64),

    #[error("non-finite parameter `{0}`")]
    NonFinite(&'static str),

    #[error("state sits on the Coulomb center (separation {0:e})")]
    CoulombSingularity(f64),

    #[error("position is a focus of the elliptic chart; velocity branches are not isolated there")]
    FocalPoint,

    #[error("parameter point is classically forbidden")]
    ForbiddenRegion,

    #[error("initial point lies outside the allowed region")]
    OutsideAllowedRegion,

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },

    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),

    #[error("nothing to plot")]
    EmptyPlot,

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

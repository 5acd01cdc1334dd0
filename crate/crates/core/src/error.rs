use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("photon number {n} out of range for {sites} sites")]
    PhotonCount { n: usize, sites: usize },

    #[error("dimension {dim} exceeds dense eigensolver cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error(
        "integrator accuracy: norm drift {drift:.3e} exceeds 1e-6 at dt = {dt_us} us; use a smaller dt"
    )]
    IntegratorAccuracy { drift: f64, dt_us: f64 },

    #[error("integrator accuracy: trace drift {drift:.3e} exceeds 1e-6 at dt = {dt_us} us; use a smaller dt")]
    TraceDrift { drift: f64, dt_us: f64 },

    #[error("time step {dt_us} us too large: need dt <= {max_us:.3e} us for |H|/2pi = {norm_mhz:.2} MHz")]
    TimeStep { dt_us: f64, max_us: f64, norm_mhz: f64 },

    #[error("g2 is undefined for N = {0} < 2 photons")]
    UndefinedCorrelation(usize),

    #[error("states live in different sectors")]
    SectorMismatch,

    #[error("sinusoid fit failed: rms residual {residual:.3e} > {threshold:.1e}")]
    FitFailure { residual: f64, threshold: f64 },

    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

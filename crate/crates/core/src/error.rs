use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{func} is not finite at r = {r}")]
    Range { func: String, r: f64 },

    #[error("ramp needs t2 > t1, got t1 = {t1}, t2 = {t2}")]
    InvalidTransition { t1: f64, t2: f64 },

    #[error(
        "no convex increasing crossfade on [0, {r_tau}] for tau = {tau}; \
         smallest feasible width is about {min_feasible:.6}"
    )]
    InfeasibleSmoothing { tau: f64, r_tau: f64, min_feasible: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate plane: spanning vectors are linearly dependent")]
    DegeneratePlane,

    #[error("dense scan handles dimension <= {max} only, got {dim}; use the multistart optimizer")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("fiber curvature provider violates tensor symmetries (defect {defect:.3e} at r = {r})")]
    ProviderAsymmetry { defect: f64, r: f64 },

    #[error("r = {r} lies outside the model domain [{lo}, {hi}]")]
    OutsideDomain { r: f64, lo: f64, hi: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

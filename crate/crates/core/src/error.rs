use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point is within {tol:e} of the light cone (<p,p> = {pairing:e})")]
    NearLightCone { pairing: f64, tol: f64 },

    #[error("parameter ({u}, {v}) lies outside the patch domain")]
    OutOfDomain { u: f64, v: f64 },

    #[error("parameter ({u}, {v}) is masked out")]
    Masked { u: f64, v: f64 },

    #[error("radius must be positive, got {0}")]
    NonpositiveRadius(f64),

    #[error("semiaxes must be positive, got ({0}, {1}, {2})")]
    NonpositiveSemiaxis(f64, f64, f64),

    #[error("point lies on the locus of degeneracy (EG - F^2 = {0:e})")]
    OnLD(f64),

    #[error("pairing <p,p> vanishes")]
    ZeroRho,

    #[error("all principal-direction coefficients vanish at ({u}, {v})")]
    DegeneratePoint { u: f64, v: f64 },

    #[error("binary differential equation has all coefficients zero")]
    AllZero,

    #[error("cannot start a principal line at ({u}, {v}): {reason}")]
    BadStart { u: f64, v: f64, reason: String },

    #[error("line sample {index} at ({u}, {v}) is masked on the inverted patch")]
    MaskedSample { index: usize, u: f64, v: f64 },

    #[error("surface is not strictly convex: cos(theta) = {cos_theta:e} at sample {p_index}")]
    NonconvexWitness { p_index: usize, cos_theta: f64 },

    #[error("translation search exhausted at t0 = {0:e}")]
    SearchExhausted(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

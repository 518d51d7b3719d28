use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("gamma pole at nonpositive integer {0}")]
    GammaPole(f64),
    #[error("chi(s) has a pole at s = {0} (Gamma(1-s) pole)")]
    ChiPole(f64),
    #[error("cosine moment requires 0 < Re s < 1, got Re s = {0}")]
    CosineMomentStrip(f64),
    #[error("argument must be positive, got {0}")]
    NonPositive(f64),
    #[error("bump half-width must be positive, got {0}")]
    InvalidHalfWidth(f64),
    #[error("mu must lie in (0,1), got {0}")]
    InvalidMu(f64),
    #[error("mu = {0} is below the supported range (primes would exceed 101)")]
    MuTooSmall(f64),
    #[error("no disjoint placement for the counter-bump inside the support window")]
    NoRoomForCounterBump,
    #[error("rational {0}/{1} has prime support outside S'")]
    GammaOutsidePlaces(i64, u64),
    #[error("grid [{0}, {1}] does not cover the kernel support interactions")]
    GridCoverage(f64, f64),
    #[error("grid node falls on a multiplication-operator jump at x = {0}")]
    JumpOnNode(f64),
    #[error("grid is not inversion-symmetric; the J flip needs x_min = 1/x_max")]
    GridNotInversionSymmetric,
    #[error("contour tail estimate {est:e} exceeds tolerance {tol:e}")]
    ContourTruncation { est: f64, tol: f64 },
    #[error("lattice tail estimate {est:e} exceeds tolerance {tol:e}")]
    LatticeTail { est: f64, tol: f64 },
    #[error("test function is not moment-projected: |h_hat(0)| + |h_hat(1)| = {0:e}")]
    Unprojected(f64),
    #[error("invalid contour: {0}")]
    InvalidContour(String),
    #[error("quadrature produced a non-finite value")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("degenerate grid: no cell center inside the domain at spacing h = {h}")]
    DegenerateGrid { h: f64 },

    #[error("degenerate stencil: no cell has interior depth >= 2")]
    DegenerateStencil,

    #[error("invalid tube: tube radius {tube_radius} must lie in (0, {loop_radius})")]
    InvalidTube { tube_radius: f64, loop_radius: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("source field has no nonzero cells")]
    EmptySource,

    #[error("curve is not closed")]
    OpenCurve,

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("curves intersect or touch (minimum vertex distance {distance:e})")]
    IntersectingCurves { distance: f64 },

    #[error("domains overlap")]
    OverlappingDomains,

    #[error("singular flow: Jacobian determinant {det:e} at t = {t}")]
    SingularFlow { t: f64, det: f64 },

    #[error("point lies outside the image domain")]
    OutsideImage,

    #[error("field is not curl-free: relative stencil curl {residual:.3e} exceeds {tolerance:.1e}")]
    NotCurlFree { residual: f64, tolerance: f64 },

    #[error("vector potential mismatch: relative |curl A - B| = {residual:.3e} exceeds {tolerance:.1e}")]
    CurlMismatch { residual: f64, tolerance: f64 },

    #[error("flow does not map the domain onto itself")]
    NonPreservingFlow,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

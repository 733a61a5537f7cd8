use thiserror::Error;

/// Errors raised by CGF evaluation, approximation and inversion.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown distribution family `{0}`")]
    UnknownFamily(String),

    #[error("theta = {theta} lies outside the domain ({lower}, {upper})")]
    OutsideStrip { theta: f64, lower: f64, upper: f64 },

    #[error("level y = {y} is not attained by K0'")]
    OutOfRange { y: f64 },

    #[error("no root of the convolution saddlepoint equation in branch {branch} (theta = {theta}, y = {y})")]
    NoRootInBranch { branch: u8, theta: f64, y: f64 },

    #[error("root finder did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("non-finite function value at stencil point x = {x}")]
    NonFiniteStencil { x: f64 },

    #[error("degenerate window ({a}, {b}): {reason}")]
    DegenerateWindow { a: f64, b: f64, reason: String },

    #[error("approximation breakdown at theta = {theta}: {reason}")]
    Breakdown { theta: f64, reason: String },

    #[error("non-finite second-order correction at theta = {theta} (s = {s})")]
    NonFiniteCorrection { theta: f64, s: f64 },

    #[error("method {method} does not apply to window ({a}, {b})")]
    NotApplicable { method: &'static str, a: f64, b: f64 },

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("model `{0}` has no density")]
    MissingDensity(String),

    #[error("model `{0}` has no sampler")]
    MissingSampler(String),

    #[error("acceptance probability {p:e} is below 1e-6")]
    AcceptanceTooLow { p: f64 },

    #[error("CGF is not strictly convex at theta = {theta} (k2 = {k2})")]
    NonConvex { theta: f64, k2: f64 },

    #[error("k1 is not monotone between theta = {from} and theta = {to}")]
    NonMonotone { from: f64, to: f64 },

    #[error("geometric series diverges at theta = {theta}")]
    SeriesDivergence { theta: f64 },

    #[error("empty list of CGF evaluators")]
    Empty,

    #[error("evaluator domains do not intersect around zero")]
    EmptyDomain,

    #[error("mass underflow: {0}")]
    Underflow(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::UnknownFamily(_) => "unknown-family",
            Error::OutsideStrip { .. } => "outside-strip",
            Error::OutOfRange { .. } => "y-out-of-range",
            Error::NoRootInBranch { .. } => "no-root-in-branch",
            Error::NoConvergence { .. } => "no-convergence",
            Error::NonFiniteStencil { .. } => "non-finite-stencil",
            Error::DegenerateWindow { .. } => "degenerate-window",
            Error::Breakdown { .. } => "approximation-breakdown",
            Error::NonFiniteCorrection { .. } => "non-finite-correction",
            Error::NotApplicable { .. } => "not-applicable",
            Error::Quadrature { .. } => "quadrature-tolerance",
            Error::MissingDensity(_) => "density-missing",
            Error::MissingSampler(_) => "sampler-missing",
            Error::AcceptanceTooLow { .. } => "acceptance-too-low",
            Error::NonConvex { .. } => "non-convex",
            Error::NonMonotone { .. } => "non-monotone",
            Error::SeriesDivergence { .. } => "series-divergence",
            Error::Empty => "empty",
            Error::EmptyDomain => "empty-domain",
            Error::Underflow(_) => "mass-underflow",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

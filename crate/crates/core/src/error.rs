use std::fmt;

/// Error type shared by all numerical routines in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A dispersion needs at least one nonzero Fourier coefficient.
    EmptyDispersion,
    /// The sampled energy loop crosses itself; the single-loop machinery
    /// (continuation, jump, interior poles) refuses to run on it.
    SelfIntersectingLoop,
    /// The loop encloses no area, so its orientation is undefined.
    DegenerateLoop,
    /// The query point sits on the loop within the on-loop tolerance, where
    /// the self-energy is discontinuous. No verdict or value is produced.
    OnLoop { re: f64, im: f64 },
    /// The winding number came out far from an integer; the Brillouin-zone
    /// grid is too coarse for this query point.
    AmbiguousWinding { winding: f64 },
    /// Quadrature did not reach the requested tolerance before the grid cap.
    QuadratureNotConverged { achieved: f64 },
    /// Newton iteration failed to converge.
    NewtonFailed { context: &'static str },
    /// No saddle point was found anywhere in the search strip.
    NoSaddleFound,
    /// No saddle exists for the requested drift velocity.
    NoSaddleForDrift { velocity: f64 },
    /// Analytic continuation in k stalled (ran into a branch point).
    ContinuationStalled,
    /// The discrete-state energy sits on the loop, so the pole equation
    /// cannot be set up on either sheet.
    PoleOnLoop,
    /// exp(h*n) overflows for this gauge strength and lattice extent.
    GaugeOverflow { h: f64, n: i64 },
    /// The imaginary gauge transformation needs kappa1*kappa2 > 0.
    NotPseudoHermitian,
    /// The requested closed-form solution only exists for kappa2 = 0.
    RequiresUnidirectional,
    /// Hopping rates must satisfy kappa1 > 0.
    InvalidModel(String),
    /// log of a nonpositive survival probability was requested.
    NonpositiveProbability { t: f64 },
    /// The trajectory was flagged (containment or overflow), so derived
    /// estimates would be unreliable.
    FlaggedTrajectory,
    /// A structured text config could not be parsed.
    InvalidConfig(String),
    /// Not enough oscillation cycles in the window to estimate a frequency.
    TooFewCrossings,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyDispersion => {
                write!(f, "dispersion has no nonzero Fourier coefficient")
            }
            Error::SelfIntersectingLoop => {
                write!(f, "energy loop is not simple (self-intersects)")
            }
            Error::DegenerateLoop => write!(f, "energy loop encloses no area"),
            Error::OnLoop { re, im } => {
                write!(f, "energy {re}+{im}i lies on the loop within tolerance")
            }
            Error::AmbiguousWinding { winding } => {
                write!(f, "winding number {winding} is not close to an integer; refine the grid")
            }
            Error::QuadratureNotConverged { achieved } => {
                write!(f, "quadrature stalled at error {achieved:.3e}")
            }
            Error::NewtonFailed { context } => write!(f, "Newton iteration failed: {context}"),
            Error::NoSaddleFound => {
                write!(f, "no saddle point converged from any seed; widen the strip or check the dispersion")
            }
            Error::NoSaddleForDrift { velocity } => {
                write!(f, "no saddle point exists for drift velocity {velocity}")
            }
            Error::ContinuationStalled => {
                write!(f, "analytic continuation in k stalled near a branch point")
            }
            Error::PoleOnLoop => {
                write!(f, "discrete-state energy sits on the loop; pole equation is ill-posed")
            }
            Error::GaugeOverflow { h, n } => {
                write!(f, "gauge factor exp({h}*{n}) overflows; lattice too wide for this h")
            }
            Error::NotPseudoHermitian => {
                write!(f, "imaginary gauge transformation cannot be applied (kappa1*kappa2 <= 0)")
            }
            Error::RequiresUnidirectional => {
                write!(f, "closed-form solution requires kappa2 = 0")
            }
            Error::InvalidModel(msg) => write!(f, "invalid model: {msg}"),
            Error::NonpositiveProbability { t } => {
                write!(f, "survival probability is nonpositive at t = {t}")
            }
            Error::FlaggedTrajectory => {
                write!(f, "trajectory was flagged (containment or overflow)")
            }
            Error::InvalidConfig(msg) => write!(f, "config error: {msg}"),
            Error::TooFewCrossings => {
                write!(f, "too few level crossings to estimate an oscillation frequency")
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

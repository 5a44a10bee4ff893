use thiserror::Error;

use crate::degeneracy::DegeneracyFlag;

/// Errors raised anywhere in the linkage pipeline.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum LinkError {
    #[error("declination {delta} too close to a pole")]
    PolarSingularity { delta: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("position vector has zero length")]
    ZeroRadius,

    #[error("rectilinear orbit: angular momentum vanishes")]
    RectilinearOrbit,

    #[error("unsupported orbit: eccentricity {e} is not elliptic")]
    UnsupportedOrbit { e: f64 },

    #[error("Kepler equation did not converge (mean anomaly {mean_anomaly}, e = {e})")]
    KeplerNonConvergence { mean_anomaly: f64, e: f64 },

    #[error("degenerate pencil: leading coefficients vanish identically")]
    DegeneratePencil,

    #[error("numerical conditioning failure: {0}")]
    Conditioning(String),

    #[error("resultant vanishes identically")]
    IdenticallyZero,

    #[error("Aberth iteration left {} root(s) unconverged", unconverged.len())]
    RootsNotConverged {
        roots: Vec<num_complex::Complex64>,
        unconverged: Vec<usize>,
    },

    #[error("polynomial of degree 0 has no roots")]
    NoRoots,

    #[error("degenerate configuration: {0:?}")]
    Degenerate(Vec<DegeneracyFlag>),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("least-squares fit failed: {0}")]
    FitFailed(String),

    #[error("epoch {t} outside ephemeris span [{start}, {end}]")]
    Extrapolation { t: f64, start: f64, end: f64 },

    #[error("identification penalty unavailable: {0}")]
    SelectionUnavailable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl LinkError {
    /// Process exit code for batch use: 2 input, 3 degeneracy, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            LinkError::Parse(_)
            | LinkError::Io(_)
            | LinkError::InsufficientData(_)
            | LinkError::Extrapolation { .. }
            | LinkError::Domain(_) => 2,
            LinkError::Degenerate(_)
            | LinkError::PolarSingularity { .. }
            | LinkError::DegeneratePencil
            | LinkError::RectilinearOrbit
            | LinkError::ZeroRadius => 3,
            _ => 4,
        }
    }

    /// Short machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            LinkError::PolarSingularity { .. } => "polar_singularity",
            LinkError::Domain(_) => "domain",
            LinkError::ZeroRadius => "zero_radius",
            LinkError::RectilinearOrbit => "rectilinear_orbit",
            LinkError::UnsupportedOrbit { .. } => "unsupported_orbit",
            LinkError::KeplerNonConvergence { .. } => "kepler_non_convergence",
            LinkError::DegeneratePencil => "degenerate_pencil",
            LinkError::Conditioning(_) => "conditioning",
            LinkError::IdenticallyZero => "identically_zero",
            LinkError::RootsNotConverged { .. } => "roots_not_converged",
            LinkError::NoRoots => "no_roots",
            LinkError::Degenerate(_) => "degenerate",
            LinkError::InsufficientData(_) => "insufficient_data",
            LinkError::FitFailed(_) => "fit_failed",
            LinkError::Extrapolation { .. } => "extrapolation",
            LinkError::SelectionUnavailable(_) => "selection_unavailable",
            LinkError::Parse(_) => "parse",
            LinkError::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for LinkError {
    fn from(e: std::io::Error) -> Self {
        LinkError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LinkError {
    fn from(e: serde_json::Error) -> Self {
        LinkError::Parse(e.to_string())
    }
}

impl From<csv::Error> for LinkError {
    fn from(e: csv::Error) -> Self {
        LinkError::Parse(e.to_string())
    }
}

pub type Result<T, E = LinkError> = std::result::Result<T, E>;

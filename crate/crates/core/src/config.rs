use serde::{Deserialize, Serialize};

use crate::error::{LinkError, Result};
use crate::units::{Physics, UnitSystem};

/// Numerical options of the linkage solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkOptions {
    /// Candidates with `|(L1 - L2) . v| / |v|` at or above this are discarded as spurious.
    pub spurious_tol: f64,
    /// Roots with `|Im| < real_tol * max(1, |Re|)` count as real.
    pub real_tol: f64,
    /// Interpolation nodes for the resultant; chosen from the degree bound when `None`.
    pub fft_points: Option<usize>,
    /// Smallest accepted topocentric distance, length units.
    pub min_rho: f64,
    /// Condition number above which a solution's covariance is flagged.
    pub cond_threshold: f64,
    /// Whether to compute covariances of the solutions.
    pub covariance: bool,
}

impl Default for LinkOptions {
    fn default() -> Self {
        Self { spurious_tol: 1e-6, real_tol: 1e-6, fft_points: None, min_rho: 1e-7, cond_threshold: 1e12, covariance: true }
    }
}

/// Run-level configuration shared by all commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub units: UnitSystem,
    pub mu: f64,
    pub c_light: f64,
    pub link: LinkOptions,
    pub chi4_threshold: f64,
}

impl RunConfig {
    pub fn new(units: UnitSystem) -> Self {
        Self { units, mu: units.mu(), c_light: units.c_light(), link: LinkOptions::default(), chi4_threshold: 100.0 }
    }

    pub fn physics(&self) -> Physics {
        Physics { units: self.units, mu: self.mu, c_light: self.c_light }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(LinkError::Domain(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.c_light > 0.0) {
            return Err(LinkError::Domain("speed of light must be positive".into()));
        }
        if let Some(n) = self.link.fft_points {
            if !n.is_power_of_two() || n < 32 {
                return Err(LinkError::Domain(format!("fft points must be a power of two >= 32, got {n}")));
            }
        }
        if !(self.chi4_threshold >= 0.0) {
            return Err(LinkError::Domain("chi4 threshold must be non-negative".into()));
        }
        Ok(())
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::new(UnitSystem::AuDay)
    }
}

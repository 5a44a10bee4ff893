//! Run-level unit systems.
//!
//! Lengths, times and the gravitational parameter are never mixed between
//! systems inside a run. Epochs are always MJD (days); durations are converted
//! to the system's time unit before entering the dynamics.

use serde::{Deserialize, Serialize};

/// Gaussian gravitational constant, AU^(3/2) day^-1.
pub const GAUSS_K: f64 = 0.017_202_098_95;
/// Astronomical unit in km.
pub const AU_KM: f64 = 149_597_870.7;
/// Speed of light in km/s.
pub const C_LIGHT_KM_S: f64 = 299_792.458;
/// Earth gravitational parameter, km^3 s^-2.
pub const GM_EARTH_KM3_S2: f64 = 398_600.441_8;
pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum UnitSystem {
    /// AU, days, radians; center of attraction is the Sun.
    #[default]
    AuDay,
    /// km, seconds, radians; center of attraction is the Earth.
    KmS,
}

impl UnitSystem {
    pub fn mu(self) -> f64 {
        match self {
            UnitSystem::AuDay => GAUSS_K * GAUSS_K,
            UnitSystem::KmS => GM_EARTH_KM3_S2,
        }
    }

    pub fn c_light(self) -> f64 {
        match self {
            UnitSystem::AuDay => C_LIGHT_KM_S * SECONDS_PER_DAY / AU_KM,
            UnitSystem::KmS => C_LIGHT_KM_S,
        }
    }

    /// Length of one time unit in days.
    pub fn time_unit_days(self) -> f64 {
        match self {
            UnitSystem::AuDay => 1.0,
            UnitSystem::KmS => 1.0 / SECONDS_PER_DAY,
        }
    }

    /// Convert an MJD difference to the system's time unit.
    pub fn days_to_units(self, days: f64) -> f64 {
        days / self.time_unit_days()
    }

    pub fn units_to_days(self, t: f64) -> f64 {
        t * self.time_unit_days()
    }

    /// Whether observer states should be taken at the light-time corrected epoch.
    pub fn heliocentric(self) -> bool {
        matches!(self, UnitSystem::AuDay)
    }

    pub fn label(self) -> &'static str {
        match self {
            UnitSystem::AuDay => "au-day",
            UnitSystem::KmS => "km-s",
        }
    }
}

impl std::str::FromStr for UnitSystem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "au-day" | "au" | "heliocentric" => Ok(UnitSystem::AuDay),
            "km-s" | "km" | "geocentric" => Ok(UnitSystem::KmS),
            other => Err(format!("unknown unit system `{other}` (expected au-day or km-s)")),
        }
    }
}

/// Physical constants for a run, with optional overrides of the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Physics {
    pub units: UnitSystem,
    pub mu: f64,
    pub c_light: f64,
}

impl Physics {
    pub fn new(units: UnitSystem) -> Self {
        Self { units, mu: units.mu(), c_light: units.c_light() }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    /// Light-time corrected epoch `tbar - rho / c`, in MJD.
    pub fn aberration_correct(&self, tbar_mjd: f64, rho: f64) -> f64 {
        tbar_mjd - self.units.units_to_days(rho / self.c_light)
    }
}

impl Default for Physics {
    fn default() -> Self {
        Physics::new(UnitSystem::AuDay)
    }
}

/// Light-time corrected epoch `tbar - rho / c` for the given unit system.
pub fn aberration_correct(tbar_mjd: f64, rho: f64, units: UnitSystem) -> f64 {
    Physics::new(units).aberration_correct(tbar_mjd, rho)
}

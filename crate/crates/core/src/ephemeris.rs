//! Observer ephemerides: analytic two-body orbits, a rotating ground station, and tables.

use serde::{Deserialize, Serialize};

use crate::attributable::ObserverState;
use crate::error::{LinkError, Result};
use crate::frames::Vec3;
use crate::kepler::{propagate_kepler, KeplerianElements};
use crate::units::{Physics, UnitSystem};

/// MJD of J2000.0.
pub const MJD_J2000: f64 = 51_544.5;
/// Equatorial Earth radius, km.
pub const EARTH_RADIUS_KM: f64 = 6378.137;
/// Earth rotation rate, rad/s.
pub const EARTH_ROTATION_RAD_S: f64 = 7.292_115_9e-5;

/// Tabulated observer states on strictly increasing MJD nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EphemerisTable {
    pub mjd: Vec<f64>,
    pub q: Vec<Vec3>,
    pub qdot: Vec<Vec3>,
}

impl EphemerisTable {
    pub fn new(mjd: Vec<f64>, q: Vec<Vec3>, qdot: Vec<Vec3>) -> Result<Self> {
        if mjd.len() < 2 || q.len() != mjd.len() || qdot.len() != mjd.len() {
            return Err(LinkError::InsufficientData("ephemeris table needs at least two complete rows".into()));
        }
        if mjd.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LinkError::Domain("ephemeris epochs must be strictly increasing".into()));
        }
        Ok(Self { mjd, q, qdot })
    }

    pub fn span(&self) -> (f64, f64) {
        (self.mjd[0], self.mjd[self.mjd.len() - 1])
    }

    /// Samples a model on `n` equally spaced epochs.
    pub fn sample(model: &EphemerisModel, start: f64, end: f64, n: usize, phys: &Physics) -> Result<Self> {
        let n = n.max(2);
        let mut mjd = Vec::with_capacity(n);
        let mut q = Vec::with_capacity(n);
        let mut qdot = Vec::with_capacity(n);
        for k in 0..n {
            let t = start + (end - start) * k as f64 / (n - 1) as f64;
            let s = model.state(t, phys)?;
            mjd.push(t);
            q.push(s.q);
            qdot.push(s.qdot);
        }
        Self::new(mjd, q, qdot)
    }

    /// Cubic Hermite interpolation of positions (from positions and velocities) and of
    /// velocities (from velocities and finite-difference accelerations); exact at the nodes.
    fn interpolate(&self, t: f64, units: UnitSystem) -> Result<ObserverState> {
        let (start, end) = self.span();
        if !(t >= start && t <= end) {
            return Err(LinkError::Extrapolation { t, start, end });
        }
        let k = match self.mjd.partition_point(|&x| x <= t) {
            0 => 0,
            p if p >= self.mjd.len() => self.mjd.len() - 2,
            p => p - 1,
        };
        let (t0, t1) = (self.mjd[k], self.mjd[k + 1]);
        let h = units.days_to_units(t1 - t0);
        let s = (t - t0) / (t1 - t0);
        let (p0, p1, v0, v1) = (self.q[k], self.q[k + 1], self.qdot[k], self.qdot[k + 1]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let q = p0 * h00 + v0 * (h * h10) + p1 * h01 + v1 * (h * h11);
        let a = (v1 - v0) / h;
        let (a0, a1) = (self.accel_at(k, units).unwrap_or(a), self.accel_at(k + 1, units).unwrap_or(a));
        let qdot = v0 * h00 + a0 * (h * h10) + v1 * h01 + a1 * (h * h11);
        Ok(ObserverState::new(q, qdot, t))
    }

    /// Acceleration at node `k` from the three-point Lagrange derivative of the tabulated velocities.
    fn accel_at(&self, k: usize, units: UnitSystem) -> Option<Vec3> {
        let n = self.mjd.len();
        if n < 3 {
            return None;
        }
        let i0 = k.saturating_sub(1).min(n - 3);
        let x: Vec<f64> = (i0..i0 + 3).map(|i| units.days_to_units(self.mjd[i] - self.mjd[k])).collect();
        let mut acc = Vec3::zeros();
        for j in 0..3 {
            let others: Vec<usize> = (0..3).filter(|&l| l != j).collect();
            let denom: f64 = others.iter().map(|&l| x[j] - x[l]).product();
            // derivative of the basis polynomial at x = 0 (node k)
            let num = -(x[others[0]] + x[others[1]]);
            acc += self.qdot[i0 + j] * (num / denom);
        }
        Some(acc)
    }
}

/// Source of observer states as a function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum EphemerisModel {
    /// Observer center on a two-body orbit about the attracting body, plus a fixed inertial offset.
    Keplerian { elements: KeplerianElements, offset: Vec3 },
    /// Ground station on a uniformly rotating sphere centered at the origin.
    RotatingStation {
        radius: f64,
        latitude: f64,
        /// Inertial longitude at `epoch`.
        longitude: f64,
        /// Rotation rate, radians per time unit.
        rate: f64,
        epoch: f64,
    },
    Tabulated(EphemerisTable),
}

impl EphemerisModel {
    /// Earth on a circular 1 AU orbit in the reference plane, phase zero at J2000.
    pub fn circular_earth() -> Self {
        EphemerisModel::Keplerian {
            elements: KeplerianElements::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, MJD_J2000),
            offset: Vec3::zeros(),
        }
    }

    /// Equatorial station on the rotating Earth (km, s).
    pub fn equatorial_station(longitude: f64) -> Self {
        EphemerisModel::RotatingStation {
            radius: EARTH_RADIUS_KM,
            latitude: 0.0,
            longitude,
            rate: EARTH_ROTATION_RAD_S,
            epoch: MJD_J2000,
        }
    }

    /// Default observer for a unit system.
    pub fn default_for(units: UnitSystem) -> Self {
        match units {
            UnitSystem::AuDay => Self::circular_earth(),
            UnitSystem::KmS => Self::equatorial_station(0.0),
        }
    }

    pub fn state(&self, t: f64, phys: &Physics) -> Result<ObserverState> {
        match self {
            EphemerisModel::Keplerian { elements, offset } => {
                let s = propagate_kepler(elements, t, phys)?;
                Ok(ObserverState::new(s.r + offset, s.rdot, t))
            }
            EphemerisModel::RotatingStation { radius, latitude, longitude, rate, epoch } => {
                let th = longitude + rate * phys.units.days_to_units(t - epoch);
                let (sl, cl) = latitude.sin_cos();
                let (st, ct) = th.sin_cos();
                let q = Vec3::new(cl * ct, cl * st, sl) * *radius;
                let qdot = Vec3::new(-cl * st, cl * ct, 0.0) * (radius * rate);
                Ok(ObserverState::new(q, qdot, t))
            }
            EphemerisModel::Tabulated(table) => table.interpolate(t, phys.units),
        }
    }
}

/// Observer state at epoch `t` (MJD).
pub fn observer_state(model: &EphemerisModel, t: f64, phys: &Physics) -> Result<ObserverState> {
    model.state(t, phys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circular_earth_is_periodic() {
        let phys = Physics::default();
        let m = EphemerisModel::circular_earth();
        let period = 2.0 * std::f64::consts::PI / phys.mu.sqrt();
        let a = m.state(58000.0, &phys).unwrap();
        let b = m.state(58000.0 + period, &phys).unwrap();
        assert!((a.q - b.q).norm() < 1e-10);
        assert!((a.qdot - b.qdot).norm() < 1e-12);
        assert!((a.q.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn table_reproduces_nodes() {
        let phys = Physics::default();
        let m = EphemerisModel::circular_earth();
        let t = EphemerisTable::sample(&m, 58000.0, 58010.0, 241, &phys).unwrap();
        for k in [0, 17, 120, 240] {
            let s = t.interpolate(t.mjd[k], phys.units).unwrap();
            assert_eq!(s.q, t.q[k]);
            assert!((s.qdot - t.qdot[k]).norm() == 0.0);
        }
    }

    #[test]
    fn hourly_table_matches_analytic_model() {
        let phys = Physics::default();
        let m = EphemerisModel::circular_earth();
        let table = EphemerisTable::sample(&m, 58000.0, 58010.0, 241, &phys).unwrap();
        let tab = EphemerisModel::Tabulated(table);
        for k in 0..200 {
            let t = 58000.0 + 0.0137 + 0.0497 * k as f64;
            let a = m.state(t, &phys).unwrap();
            let b = tab.state(t, &phys).unwrap();
            assert!((a.q - b.q).norm() < 1e-9, "position error {}", (a.q - b.q).norm());
            assert!((a.qdot - b.qdot).norm() < 1e-9 * a.qdot.norm(), "velocity error {}", (a.qdot - b.qdot).norm() / a.qdot.norm());
        }
    }

    #[test]
    fn extrapolation_is_refused() {
        let phys = Physics::default();
        let table = EphemerisTable::sample(&EphemerisModel::circular_earth(), 58000.0, 58001.0, 5, &phys).unwrap();
        assert!(matches!(
            EphemerisModel::Tabulated(table).state(58002.0, &phys),
            Err(LinkError::Extrapolation { .. })
        ));
    }

    #[test]
    fn station_velocity_is_derivative_of_position() {
        let phys = Physics::new(UnitSystem::KmS);
        let m = EphemerisModel::RotatingStation { radius: 6378.0, latitude: 0.6, longitude: 0.3, rate: 7.29e-5, epoch: 0.0 };
        let t = 0.37;
        let h = 1e-4;
        let a = m.state(t - h, &phys).unwrap();
        let b = m.state(t + h, &phys).unwrap();
        let fd = (b.q - a.q) / phys.units.days_to_units(2.0 * h);
        let s = m.state(t, &phys).unwrap();
        assert!((fd - s.qdot).norm() < 1e-6 * s.qdot.norm());
        assert!((s.q.norm() - 6378.0).abs() < 1e-9);
    }
}

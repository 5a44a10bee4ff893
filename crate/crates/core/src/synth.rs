//! Synthetic attributables generated from a known orbit, with their hidden unknowns.

use nalgebra::Matrix4;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::attributable::{Attributable, Observation, ObservationArc, ObserverState, OpticalAttributable, RadarAttributable};
use crate::ephemeris::EphemerisModel;
use crate::error::{LinkError, Result};
use crate::frames::AttributableCoords;
use crate::kepler::{propagate_kepler, CartesianState, KeplerianElements};
use crate::units::Physics;

/// Radians per arcsecond.
pub const ARCSEC: f64 = std::f64::consts::PI / 648_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributableKind {
    Optical,
    Radar,
}

/// Standard deviations of the attributable components.
///
/// These always define the attributable covariances; noise is drawn only when a
/// random generator is supplied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Tangent-plane angle noise, radians (alpha gets `sigma / cos(delta)`).
    pub sigma_angle: f64,
    /// Angular rate noise, radians per time unit.
    pub sigma_rate: f64,
    pub sigma_rho: f64,
    pub sigma_rhodot: f64,
}

impl Default for NoiseModel {
    /// 0.5 arcsec on the angles and rates consistent with a one-day arc in AU-day units.
    fn default() -> Self {
        Self { sigma_angle: 0.5 * ARCSEC, sigma_rate: 1.0 * ARCSEC, sigma_rho: 1e-8, sigma_rhodot: 1e-9 }
    }
}

impl NoiseModel {
    fn covariance(&self, kind: AttributableKind, delta: f64) -> Matrix4<f64> {
        let c = delta.cos();
        let d = match kind {
            AttributableKind::Optical => [
                (self.sigma_angle / c).powi(2),
                self.sigma_angle.powi(2),
                (self.sigma_rate / c).powi(2),
                self.sigma_rate.powi(2),
            ],
            AttributableKind::Radar => [
                (self.sigma_angle / c).powi(2),
                self.sigma_angle.powi(2),
                self.sigma_rho.powi(2),
                self.sigma_rhodot.powi(2),
            ],
        };
        Matrix4::from_diagonal(&d.into())
    }
}

/// Exact topocentric quantities of the body at one observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthEpoch {
    pub tbar: f64,
    /// Light-time corrected epoch `tbar - rho / c`.
    pub t_emit: f64,
    pub coords: AttributableCoords,
    pub state: CartesianState,
    pub observer: ObserverState,
}

/// A synthetic pair of attributables: the first optical or radar, the second optical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPair {
    pub first: Attributable,
    pub second: OpticalAttributable,
    pub truth: [TruthEpoch; 2],
    pub elements: KeplerianElements,
}

/// Body state at the emission epoch seen by an observer at `tbar`, solving the light-time equation.
pub fn observe(elements: &KeplerianElements, tbar: f64, model: &EphemerisModel, phys: &Physics) -> Result<TruthEpoch> {
    let obs = model.state(tbar, phys)?;
    let mut t = tbar;
    let mut state = propagate_kepler(elements, t, phys)?;
    for _ in 0..20 {
        let rho = (state.r - obs.q).norm();
        let next = phys.aberration_correct(tbar, rho);
        let done = (next - t).abs() <= 1e-15 * tbar.abs().max(1.0);
        t = next;
        state = propagate_kepler(elements, t, phys)?;
        if done {
            break;
        }
    }
    let coords = AttributableCoords::from_cartesian(&state.r, &state.rdot, &obs.q, &obs.qdot)
        .map_err(|_| LinkError::Domain("synthesis geometry places the body at the observer".into()))?;
    // keep the epoch consistent with the final range
    let t_emit = phys.aberration_correct(tbar, coords.rho);
    Ok(TruthEpoch { tbar, t_emit, coords, state, observer: obs })
}

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Attributables of a known orbit at two mean epochs, with optional Gaussian noise.
pub fn synthesize_attributables(
    elements: &KeplerianElements,
    epochs: (f64, f64),
    model: &EphemerisModel,
    noise: &NoiseModel,
    kind: AttributableKind,
    phys: &Physics,
    mut rng: Option<&mut dyn rand::RngCore>,
) -> Result<SyntheticPair> {
    let t1 = observe(elements, epochs.0, model, phys)?;
    let t2 = observe(elements, epochs.1, model, phys)?;

    let mut draw = |s: f64| match rng.as_deref_mut() {
        Some(r) => s * gauss(r),
        None => 0.0,
    };

    let c1 = t1.coords;
    let first = match kind {
        AttributableKind::Optical => {
            let cd = c1.delta.cos();
            let a = OpticalAttributable::new(
                c1.alpha + draw(noise.sigma_angle) / cd,
                c1.delta + draw(noise.sigma_angle),
                c1.alphadot + draw(noise.sigma_rate) / cd,
                c1.deltadot + draw(noise.sigma_rate),
                epochs.0,
                noise.covariance(kind, c1.delta),
            )?;
            Attributable::Optical(a)
        }
        AttributableKind::Radar => {
            let cd = c1.delta.cos();
            let a = RadarAttributable::new(
                c1.alpha + draw(noise.sigma_angle) / cd,
                c1.delta + draw(noise.sigma_angle),
                c1.rho + draw(noise.sigma_rho),
                c1.rhodot + draw(noise.sigma_rhodot),
                epochs.0,
                noise.covariance(kind, c1.delta),
            )?;
            Attributable::Radar(a)
        }
    };
    let c2 = t2.coords;
    let cd = c2.delta.cos();
    let second = OpticalAttributable::new(
        c2.alpha + draw(noise.sigma_angle) / cd,
        c2.delta + draw(noise.sigma_angle),
        c2.alphadot + draw(noise.sigma_rate) / cd,
        c2.deltadot + draw(noise.sigma_rate),
        epochs.1,
        noise.covariance(AttributableKind::Optical, c2.delta),
    )?;
    Ok(SyntheticPair { first, second, truth: [t1, t2], elements: *elements })
}

/// Observations of a known orbit at the given MJDs, with tangent-plane Gaussian noise.
pub fn synthesize_arc(
    elements: &KeplerianElements,
    times: &[f64],
    model: &EphemerisModel,
    sigma_angle: f64,
    sigma_rho: f64,
    phys: &Physics,
    mut rng: Option<&mut dyn rand::RngCore>,
) -> Result<ObservationArc> {
    let mut obs = Vec::with_capacity(times.len());
    for &t in times {
        let tr = observe(elements, t, model, phys)?;
        let (mut a, mut d, mut r) = (tr.coords.alpha, tr.coords.delta, tr.coords.rho);
        if let Some(g) = rng.as_deref_mut() {
            a += sigma_angle * gauss(g) / d.cos();
            d += sigma_angle * gauss(g);
            r += sigma_rho * gauss(g);
        }
        obs.push(Observation { t, alpha: a, delta: d, rho: Some(r) });
    }
    ObservationArc::new(obs, sigma_angle, sigma_rho)
}

/// Orbit with the magnitudes of a near-Earth asteroid on an Earth-crossing orbit
/// (`a = 0.92 AU`, `e = 0.19`), epoch at `epoch`.
pub fn near_earth_orbit(epoch: f64) -> KeplerianElements {
    KeplerianElements::new(0.92, 0.19, 3.3f64.to_radians(), 204.9f64.to_radians(), 124.8f64.to_radians(), 249.0f64.to_radians(), epoch)
}

/// Smaller of the two true topocentric distances.
pub fn min_range(pair: &SyntheticPair) -> f64 {
    pair.truth.iter().map(|t| t.coords.rho).fold(f64::INFINITY, f64::min)
}

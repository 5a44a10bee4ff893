//! Attributables and their least-squares estimation from short arcs.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{LinkError, Result};
use crate::frames::{wrap_pi, Vec3, POLAR_MARGIN};
use crate::units::UnitSystem;

/// Angles and angular rates at the mean epoch of an optical arc.
///
/// Rates are per time unit of the run's unit system; `tbar` is an MJD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalAttributable {
    pub alpha: f64,
    pub delta: f64,
    pub alphadot: f64,
    pub deltadot: f64,
    pub tbar: f64,
    /// Covariance of `(alpha, delta, alphadot, deltadot)`.
    pub cov: Matrix4<f64>,
    pub station: Option<String>,
}

/// Angles, range and range rate at the mean epoch of a radar arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarAttributable {
    pub alpha: f64,
    pub delta: f64,
    pub rho: f64,
    pub rhodot: f64,
    pub tbar: f64,
    /// Covariance of `(alpha, delta, rho, rhodot)`.
    pub cov: Matrix4<f64>,
    pub station: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Attributable {
    Optical(OpticalAttributable),
    Radar(RadarAttributable),
}

impl Attributable {
    pub fn tbar(&self) -> f64 {
        match self {
            Attributable::Optical(a) => a.tbar,
            Attributable::Radar(a) => a.tbar,
        }
    }

    pub fn values(&self) -> Vector4<f64> {
        match self {
            Attributable::Optical(a) => a.values(),
            Attributable::Radar(a) => a.values(),
        }
    }

    pub fn cov(&self) -> &Matrix4<f64> {
        match self {
            Attributable::Optical(a) => &a.cov,
            Attributable::Radar(a) => &a.cov,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Attributable::Optical(_) => "optical",
            Attributable::Radar(_) => "radar",
        }
    }
}

fn check_angles(alpha: f64, delta: f64) -> Result<()> {
    if !alpha.is_finite() || !delta.is_finite() {
        return Err(LinkError::Domain("non-finite angle".into()));
    }
    if delta.abs() >= std::f64::consts::FRAC_PI_2 - POLAR_MARGIN {
        return Err(LinkError::PolarSingularity { delta });
    }
    Ok(())
}

impl OpticalAttributable {
    pub fn new(alpha: f64, delta: f64, alphadot: f64, deltadot: f64, tbar: f64, cov: Matrix4<f64>) -> Result<Self> {
        check_angles(alpha, delta)?;
        Ok(Self { alpha: wrap_pi(alpha), delta, alphadot, deltadot, tbar, cov, station: None })
    }

    pub fn from_values(v: &Vector4<f64>, tbar: f64, cov: Matrix4<f64>) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3], tbar, cov)
    }

    pub fn values(&self) -> Vector4<f64> {
        Vector4::new(self.alpha, self.delta, self.alphadot, self.deltadot)
    }
}

impl RadarAttributable {
    pub fn new(alpha: f64, delta: f64, rho: f64, rhodot: f64, tbar: f64, cov: Matrix4<f64>) -> Result<Self> {
        check_angles(alpha, delta)?;
        if !(rho > 0.0) {
            return Err(LinkError::Domain(format!("radar range must be positive, got {rho}")));
        }
        Ok(Self { alpha: wrap_pi(alpha), delta, rho, rhodot, tbar, cov, station: None })
    }

    pub fn from_values(v: &Vector4<f64>, tbar: f64, cov: Matrix4<f64>) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3], tbar, cov)
    }

    pub fn values(&self) -> Vector4<f64> {
        Vector4::new(self.alpha, self.delta, self.rho, self.rhodot)
    }
}

/// Observer position and velocity in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObserverState {
    pub q: Vec3,
    pub qdot: Vec3,
    pub epoch: f64,
}

impl ObserverState {
    pub fn new(q: Vec3, qdot: Vec3, epoch: f64) -> Self {
        Self { q, qdot, epoch }
    }
}

/// One astrometric (and possibly ranging) measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: f64,
    pub alpha: f64,
    pub delta: f64,
    pub rho: Option<f64>,
}

/// A short arc of observations from one station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationArc {
    pub obs: Vec<Observation>,
    /// Angular noise on the tangent plane, radians.
    pub sigma_angle: f64,
    /// Range noise, length units.
    pub sigma_rho: f64,
    pub station: Option<String>,
}

impl ObservationArc {
    pub fn new(obs: Vec<Observation>, sigma_angle: f64, sigma_rho: f64) -> Result<Self> {
        if obs.len() < 2 {
            return Err(LinkError::InsufficientData(format!("an arc needs at least 2 observations, got {}", obs.len())));
        }
        if obs.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(LinkError::Domain("observation times must be strictly increasing".into()));
        }
        Ok(Self { obs, sigma_angle, sigma_rho, station: None })
    }

    pub fn mean_epoch(&self) -> f64 {
        self.obs.iter().map(|o| o.t).sum::<f64>() / self.obs.len() as f64
    }

    /// Right ascensions with branch cuts removed.
    pub fn unwrapped_alpha(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::with_capacity(self.obs.len());
        for o in &self.obs {
            let a = match out.last() {
                Some(&prev) => prev + wrap_pi(o.alpha - prev),
                None => o.alpha,
            };
            out.push(a);
        }
        out
    }
}

/// Weighted polynomial fit `y(tau) = c0 + c1 tau + c2 tau^2`; returns the value and
/// slope at `tau = 0` and their 2x2 covariance.
fn fit_value_and_rate(tau: &[f64], y: &[f64], sigma: f64) -> Result<(f64, f64, [[f64; 2]; 2])> {
    let m = tau.len();
    let ncoef = if m >= 3 { 3 } else { 2 };
    let a = DMatrix::from_fn(m, ncoef, |i, j| tau[i].powi(j as i32));
    let normal = a.transpose() * &a;
    let inv = normal
        .clone()
        .try_inverse()
        .filter(|inv| inv.iter().all(|v| v.is_finite()))
        .ok_or_else(|| LinkError::FitFailed("singular normal matrix (repeated epochs?)".into()))?;
    let rhs = a.transpose() * DVector::from_column_slice(y);
    let c = &inv * rhs;
    let s2 = sigma * sigma;
    let cov = [[inv[(0, 0)] * s2, inv[(0, 1)] * s2], [inv[(1, 0)] * s2, inv[(1, 1)] * s2]];
    Ok((c[0], c[1], cov))
}

struct AngularFit {
    tbar: f64,
    alpha: (f64, f64, [[f64; 2]; 2]),
    delta: (f64, f64, [[f64; 2]; 2]),
    tau: Vec<f64>,
}

fn fit_angles(arc: &ObservationArc, units: UnitSystem) -> Result<AngularFit> {
    if arc.obs.len() < 2 {
        return Err(LinkError::InsufficientData("an arc needs at least 2 observations".into()));
    }
    let tbar = arc.mean_epoch();
    let tau: Vec<f64> = arc.obs.iter().map(|o| units.days_to_units(o.t - tbar)).collect();
    let alpha = arc.unwrapped_alpha();
    let delta: Vec<f64> = arc.obs.iter().map(|o| o.delta).collect();
    let dfit = fit_value_and_rate(&tau, &delta, arc.sigma_angle)?;
    // tangent-plane noise: sigma_alpha = sigma / cos(delta)
    let sigma_alpha = arc.sigma_angle / dfit.0.cos();
    let afit = fit_value_and_rate(&tau, &alpha, sigma_alpha)?;
    Ok(AngularFit { tbar, alpha: afit, delta: dfit, tau })
}

/// Least-squares optical attributable at the mean epoch of the arc.
///
/// Fits degree 2 when at least three observations are available, degree 1 otherwise;
/// the covariance is the inverse normal matrix scaled by the observation variance.
pub fn fit_optical_attributable(arc: &ObservationArc, units: UnitSystem) -> Result<OpticalAttributable> {
    let f = fit_angles(arc, units)?;
    let mut cov = Matrix4::zeros();
    let (ca, cd) = (f.alpha.2, f.delta.2);
    // order (alpha, delta, alphadot, deltadot)
    cov[(0, 0)] = ca[0][0];
    cov[(0, 2)] = ca[0][1];
    cov[(2, 0)] = ca[1][0];
    cov[(2, 2)] = ca[1][1];
    cov[(1, 1)] = cd[0][0];
    cov[(1, 3)] = cd[0][1];
    cov[(3, 1)] = cd[1][0];
    cov[(3, 3)] = cd[1][1];
    let mut att = OpticalAttributable::new(f.alpha.0, f.delta.0, f.alpha.1, f.delta.1, f.tbar, cov)?;
    att.station = arc.station.clone();
    Ok(att)
}

/// Least-squares radar attributable `(alpha, delta, rho, rhodot)` at the mean epoch.
pub fn fit_radar_attributable(arc: &ObservationArc, units: UnitSystem) -> Result<RadarAttributable> {
    let f = fit_angles(arc, units)?;
    let ranges: Vec<f64> = arc
        .obs
        .iter()
        .map(|o| o.rho.ok_or_else(|| LinkError::InsufficientData("radar arc is missing ranges".into())))
        .collect::<Result<_>>()?;
    let rfit = fit_value_and_rate(&f.tau, &ranges, arc.sigma_rho)?;
    let mut cov = Matrix4::zeros();
    cov[(0, 0)] = f.alpha.2[0][0];
    cov[(1, 1)] = f.delta.2[0][0];
    cov[(2, 2)] = rfit.2[0][0];
    cov[(2, 3)] = rfit.2[0][1];
    cov[(3, 2)] = rfit.2[1][0];
    cov[(3, 3)] = rfit.2[1][1];
    let mut att = RadarAttributable::new(f.alpha.0, f.delta.0, rfit.0, rfit.1, f.tbar, cov)?;
    att.station = arc.station.clone();
    Ok(att)
}

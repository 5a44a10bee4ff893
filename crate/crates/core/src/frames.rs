//! Line-of-sight geometry: the spherical observation basis, composition of
//! topocentric and central-body states, and the hat map.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix3, Matrix6, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{LinkError, Result};

pub type Vec3 = Vector3<f64>;

/// Declinations closer than this to a pole are rejected.
pub const POLAR_MARGIN: f64 = 1e-9;

/// Wrap an angle into [-pi, pi).
pub fn wrap_pi(angle: f64) -> f64 {
    let a = (angle + PI).rem_euclid(TAU) - PI;
    if a >= PI {
        a - TAU
    } else {
        a
    }
}

/// Wrap an angle into [0, 2pi).
pub fn wrap_two_pi(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Wrap a difference of angles into (-pi, pi].
pub fn wrap_difference(d: f64) -> f64 {
    let w = wrap_pi(d);
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Positively oriented orthonormal triple attached to a line of sight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationBasis {
    pub e_rho: Vec3,
    pub e_alpha: Vec3,
    pub e_delta: Vec3,
    pub alpha: f64,
    pub delta: f64,
}

impl ObservationBasis {
    pub fn new(alpha: f64, delta: f64) -> Result<Self> {
        if !(delta.abs() < FRAC_PI_2 - POLAR_MARGIN) {
            return Err(LinkError::PolarSingularity { delta });
        }
        let alpha = wrap_pi(alpha);
        let (sa, ca) = alpha.sin_cos();
        let (sd, cd) = delta.sin_cos();
        Ok(Self {
            e_rho: Vec3::new(cd * ca, cd * sa, sd),
            e_alpha: Vec3::new(-sa, ca, 0.0),
            e_delta: Vec3::new(-sd * ca, -sd * sa, cd),
            alpha,
            delta,
        })
    }

    pub fn cos_delta(&self) -> f64 {
        self.delta.cos()
    }

    /// Line-of-sight angular velocity vector `alphadot cos(delta) e_alpha + deltadot e_delta`.
    pub fn transverse_rate(&self, alphadot: f64, deltadot: f64) -> Vec3 {
        self.e_alpha * (alphadot * self.cos_delta()) + self.e_delta * deltadot
    }
}

/// Basis at the given angles; see [`ObservationBasis::new`].
pub fn observation_basis(alpha: f64, delta: f64) -> Result<ObservationBasis> {
    ObservationBasis::new(alpha, delta)
}

/// `r = q + rho e_rho`.
pub fn body_position(q: &Vec3, rho: f64, basis: &ObservationBasis) -> Result<Vec3> {
    if !(rho > 0.0) {
        return Err(LinkError::Domain(format!("topocentric distance must be positive, got {rho}")));
    }
    Ok(q + basis.e_rho * rho)
}

/// `rdot = qdot + rhodot e_rho + rho (alphadot cos(delta) e_alpha + deltadot e_delta)`.
pub fn body_velocity(
    qdot: &Vec3,
    rhodot: f64,
    rho: f64,
    rates: (f64, f64),
    basis: &ObservationBasis,
) -> Result<Vec3> {
    if !(rho > 0.0) {
        return Err(LinkError::Domain(format!("topocentric distance must be positive, got {rho}")));
    }
    Ok(qdot + basis.e_rho * rhodot + basis.transverse_rate(rates.0, rates.1) * rho)
}

/// Skew-symmetric matrix with `hat(u) w = u x w`.
pub fn hat_map(u: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -u.z, u.y, u.z, 0.0, -u.x, -u.y, u.x, 0.0)
}

/// Attributable coordinates `(alpha, delta, alphadot, deltadot, rho, rhodot)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributableCoords {
    pub alpha: f64,
    pub delta: f64,
    pub alphadot: f64,
    pub deltadot: f64,
    pub rho: f64,
    pub rhodot: f64,
}

impl AttributableCoords {
    pub fn to_array(&self) -> [f64; 6] {
        [self.alpha, self.delta, self.alphadot, self.deltadot, self.rho, self.rhodot]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self { alpha: a[0], delta: a[1], alphadot: a[2], deltadot: a[3], rho: a[4], rhodot: a[5] }
    }

    /// Body position and velocity seen from an observer at `(q, qdot)`.
    pub fn to_cartesian(&self, q: &Vec3, qdot: &Vec3) -> Result<(Vec3, Vec3)> {
        let basis = ObservationBasis::new(self.alpha, self.delta)?;
        let r = body_position(q, self.rho, &basis)?;
        let v = body_velocity(qdot, self.rhodot, self.rho, (self.alphadot, self.deltadot), &basis)?;
        Ok((r, v))
    }

    /// Inverse of [`Self::to_cartesian`].
    pub fn from_cartesian(r: &Vec3, rdot: &Vec3, q: &Vec3, qdot: &Vec3) -> Result<Self> {
        let d = r - q;
        let rho = d.norm();
        if !(rho > 0.0) {
            return Err(LinkError::Domain("body coincides with the observer".into()));
        }
        let alpha = wrap_pi(d.y.atan2(d.x));
        let delta = (d.z / rho).clamp(-1.0, 1.0).asin();
        let basis = ObservationBasis::new(alpha, delta)?;
        let dv = rdot - qdot;
        Ok(Self {
            alpha,
            delta,
            alphadot: dv.dot(&basis.e_alpha) / (rho * basis.cos_delta()),
            deltadot: dv.dot(&basis.e_delta) / rho,
            rho,
            rhodot: dv.dot(&basis.e_rho),
        })
    }
}

/// Jacobian of `(r, rdot)` with respect to `(alpha, delta, alphadot, deltadot, rho, rhodot)`
/// for a fixed observer state.
pub fn attributable_to_cartesian_jacobian(att: &AttributableCoords) -> Result<Matrix6<f64>> {
    let b = ObservationBasis::new(att.alpha, att.delta)?;
    let (sd, cd) = att.delta.sin_cos();
    let AttributableCoords { alphadot: ad, deltadot: dd, rho, rhodot: rd, .. } = *att;

    let d_ealpha_dalpha = -b.e_rho * cd + b.e_delta * sd;

    let dr = [b.e_alpha * (rho * cd), b.e_delta * rho, Vec3::zeros(), Vec3::zeros(), b.e_rho, Vec3::zeros()];
    let dv = [
        b.e_alpha * (rd * cd) + d_ealpha_dalpha * (rho * ad * cd) - b.e_alpha * (rho * dd * sd),
        b.e_delta * rd - b.e_alpha * (rho * ad * sd) - b.e_rho * (rho * dd),
        b.e_alpha * (rho * cd),
        b.e_delta * rho,
        b.e_alpha * (ad * cd) + b.e_delta * dd,
        b.e_rho,
    ];
    let mut jac = Matrix6::zeros();
    for (col, (p, v)) in dr.iter().zip(dv.iter()).enumerate() {
        jac.fixed_view_mut::<3, 1>(0, col).copy_from(p);
        jac.fixed_view_mut::<3, 1>(3, col).copy_from(v);
    }
    Ok(jac)
}

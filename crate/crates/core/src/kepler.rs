//! Two-body first integrals, element conversions and Keplerian propagation.

use std::f64::consts::PI;

use nalgebra::Matrix6;
use serde::{Deserialize, Serialize};

use crate::error::{LinkError, Result};
use crate::frames::{wrap_difference, wrap_pi, wrap_two_pi, Vec3};
use crate::units::Physics;

/// Eccentricity below which the argument of pericenter is set to zero.
pub const CIRCULAR_EPS: f64 = 1e-10;
/// Inclination below which the node longitude is set to zero.
pub const EQUATORIAL_EPS: f64 = 1e-10;

const KEPLER_TOL: f64 = 1e-14;
const KEPLER_MAX_ITER: usize = 100;

/// Osculating Keplerian elements; angles in radians, epoch in MJD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerianElements {
    pub a: f64,
    pub e: f64,
    pub i: f64,
    /// Longitude of the ascending node.
    pub node: f64,
    /// Argument of pericenter.
    pub peri: f64,
    pub mean_anomaly: f64,
    pub epoch: f64,
}

impl KeplerianElements {
    /// Builds elements with angles normalized to [0, 2pi).
    pub fn new(a: f64, e: f64, i: f64, node: f64, peri: f64, mean_anomaly: f64, epoch: f64) -> Self {
        Self {
            a,
            e,
            i,
            node: wrap_two_pi(node),
            peri: wrap_two_pi(peri),
            mean_anomaly: wrap_two_pi(mean_anomaly),
            epoch,
        }
    }

    pub fn mean_motion(&self, mu: f64) -> f64 {
        (mu / self.a.powi(3)).sqrt()
    }

    pub fn period(&self, mu: f64) -> f64 {
        2.0 * PI / self.mean_motion(mu)
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.a, self.e, self.i, self.node, self.peri, self.mean_anomaly]
    }

    pub fn from_array(x: [f64; 6], epoch: f64) -> Self {
        Self::new(x[0], x[1], x[2], x[3], x[4], x[5], epoch)
    }

    /// Element difference with the four angles wrapped into (-pi, pi].
    pub fn difference(&self, other: &Self) -> [f64; 6] {
        let a = self.to_array();
        let b = other.to_array();
        let mut d = [0.0; 6];
        for k in 0..6 {
            d[k] = if k >= 2 { wrap_difference(a[k] - b[k]) } else { a[k] - b[k] };
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianState {
    pub r: Vec3,
    pub rdot: Vec3,
    pub epoch: f64,
}

impl CartesianState {
    pub fn new(r: Vec3, rdot: Vec3, epoch: f64) -> Self {
        Self { r, rdot, epoch }
    }

    pub fn angular_momentum(&self) -> Vec3 {
        angular_momentum(&self.r, &self.rdot)
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.r.x, self.r.y, self.r.z, self.rdot.x, self.rdot.y, self.rdot.z]
    }
}

pub fn angular_momentum(r: &Vec3, rdot: &Vec3) -> Vec3 {
    r.cross(rdot)
}

/// Laplace-Lenz (eccentricity) vector `L` with
/// `mu L = (|rdot|^2 - mu/|r|) r - (rdot . r) rdot`.
pub fn laplace_lenz(r: &Vec3, rdot: &Vec3, mu: f64) -> Result<Vec3> {
    let rn = r.norm();
    if !(rn > 0.0) {
        return Err(LinkError::ZeroRadius);
    }
    Ok((r * (rdot.norm_squared() - mu / rn) - rdot * rdot.dot(r)) / mu)
}

pub fn two_body_energy(r: &Vec3, rdot: &Vec3, mu: f64) -> Result<f64> {
    let rn = r.norm();
    if !(rn > 0.0) {
        return Err(LinkError::ZeroRadius);
    }
    Ok(0.5 * rdot.norm_squared() - mu / rn)
}

/// Solves `E - e sin E = ell` by Newton iteration safeguarded with bisection.
/// Returns `E` on the same branch as `ell` (i.e. `E - ell` is small).
pub fn solve_kepler(ell: f64, e: f64) -> Result<f64> {
    let m = wrap_pi(ell);
    let shift = ell - m;
    let (mut lo, mut hi) = (-PI, PI);
    let mut ecc = m + e * m.sin();
    for _ in 0..KEPLER_MAX_ITER {
        let f = ecc - e * ecc.sin() - m;
        if f > 0.0 {
            hi = ecc;
        } else {
            lo = ecc;
        }
        let step = f / (1.0 - e * ecc.cos());
        let mut next = ecc - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - ecc).abs() < KEPLER_TOL {
            return Ok(next + shift);
        }
        ecc = next;
    }
    Err(LinkError::KeplerNonConvergence { mean_anomaly: ell, e })
}

/// Orientation unit vectors (P toward pericenter, Q, and the node direction N).
fn orientation(node: f64, i: f64, peri: f64) -> (Vec3, Vec3, Vec3) {
    let (so, co) = node.sin_cos();
    let (si, ci) = i.sin_cos();
    let (sw, cw) = peri.sin_cos();
    let p = Vec3::new(co * cw - so * sw * ci, so * cw + co * sw * ci, sw * si);
    let q = Vec3::new(-co * sw - so * cw * ci, -so * sw + co * cw * ci, cw * si);
    (p, q, Vec3::new(co, so, 0.0))
}

pub fn cartesian_to_keplerian(state: &CartesianState, mu: f64) -> Result<KeplerianElements> {
    let r = &state.r;
    let v = &state.rdot;
    let rn = r.norm();
    if !(rn > 0.0) {
        return Err(LinkError::ZeroRadius);
    }
    let h = r.cross(v);
    let hn = h.norm();
    if hn <= 1e-14 * rn * v.norm() {
        return Err(LinkError::RectilinearOrbit);
    }
    let energy = 0.5 * v.norm_squared() - mu / rn;
    let lenz = laplace_lenz(r, v, mu)?;
    let e = lenz.norm();
    if energy >= 0.0 || e >= 1.0 {
        return Err(LinkError::UnsupportedOrbit { e });
    }
    let a = -mu / (2.0 * energy);
    let w = h / hn;
    let i = w.z.clamp(-1.0, 1.0).acos();
    let node = if i < EQUATORIAL_EPS || PI - i < EQUATORIAL_EPS { 0.0 } else { w.x.atan2(-w.y) };
    let n_hat = Vec3::new(node.cos(), node.sin(), 0.0);
    let m_hat = w.cross(&n_hat);
    let (peri, p_hat) = if e < CIRCULAR_EPS {
        (0.0, n_hat)
    } else {
        (lenz.dot(&m_hat).atan2(lenz.dot(&n_hat)), lenz / e)
    };
    let q_hat = w.cross(&p_hat);
    let f = r.dot(&q_hat).atan2(r.dot(&p_hat));
    let beta = (1.0 - e * e).sqrt();
    let ecc = (beta * f.sin()).atan2(e + f.cos());
    let ell = ecc - e * ecc.sin();
    Ok(KeplerianElements::new(a, e, i, node, peri, ell, state.epoch))
}

pub fn keplerian_to_cartesian(el: &KeplerianElements, mu: f64) -> Result<CartesianState> {
    let (r, v) = perifocal_state(el, el.mean_anomaly, mu)?;
    Ok(CartesianState::new(r, v, el.epoch))
}

fn check_elliptic(el: &KeplerianElements) -> Result<()> {
    if !(el.e >= 0.0 && el.e < 1.0) || !(el.a > 0.0) {
        return Err(LinkError::UnsupportedOrbit { e: el.e });
    }
    Ok(())
}

fn perifocal_state(el: &KeplerianElements, ell: f64, mu: f64) -> Result<(Vec3, Vec3)> {
    check_elliptic(el)?;
    let ecc = solve_kepler(ell, el.e)?;
    let (se, ce) = ecc.sin_cos();
    let beta = (1.0 - el.e * el.e).sqrt();
    let n = el.mean_motion(mu);
    let denom = 1.0 - el.e * ce;
    let (p, q, _) = orientation(el.node, el.i, el.peri);
    let x = el.a * (ce - el.e);
    let y = el.a * beta * se;
    let vx = -n * el.a * se / denom;
    let vy = n * el.a * beta * ce / denom;
    Ok((p * x + q * y, p * vx + q * vy))
}

/// Elements advanced to `target_epoch` along the two-body flow.
pub fn advance_elements(el: &KeplerianElements, target_epoch: f64, phys: &Physics) -> Result<KeplerianElements> {
    check_elliptic(el)?;
    let dt = phys.units.days_to_units(target_epoch - el.epoch);
    let ell = el.mean_anomaly + el.mean_motion(phys.mu) * dt;
    Ok(KeplerianElements::new(el.a, el.e, el.i, el.node, el.peri, ell, target_epoch))
}

pub fn propagate_kepler(el: &KeplerianElements, target_epoch: f64, phys: &Physics) -> Result<CartesianState> {
    check_elliptic(el)?;
    let dt = phys.units.days_to_units(target_epoch - el.epoch);
    // Keep the unwrapped mean anomaly so that a full period maps to the same E branch.
    let ell = el.mean_anomaly + el.mean_motion(phys.mu) * dt;
    let (r, v) = perifocal_state(el, ell, phys.mu)?;
    Ok(CartesianState::new(r, v, target_epoch))
}

/// Jacobian of the element flow, `d E(target) / d E(epoch)`, in element coordinates.
pub fn propagation_jacobian(el: &KeplerianElements, target_epoch: f64, phys: &Physics) -> Result<Matrix6<f64>> {
    check_elliptic(el)?;
    let dt = phys.units.days_to_units(target_epoch - el.epoch);
    let n = el.mean_motion(phys.mu);
    let mut jac = Matrix6::identity();
    jac[(5, 0)] = -1.5 * n / el.a * dt;
    Ok(jac)
}

/// Analytic Jacobian of `(r, rdot)` with respect to `(a, e, i, node, peri, mean_anomaly)`.
pub fn keplerian_to_cartesian_jacobian(el: &KeplerianElements, mu: f64) -> Result<Matrix6<f64>> {
    check_elliptic(el)?;
    let e = el.e;
    let a = el.a;
    let ecc = solve_kepler(el.mean_anomaly, e)?;
    let (se, ce) = ecc.sin_cos();
    let beta = (1.0 - e * e).sqrt();
    let n = el.mean_motion(mu);
    let d = 1.0 - e * ce;
    let (p, q, nhat) = orientation(el.node, el.i, el.peri);

    let x = a * (ce - e);
    let y = a * beta * se;
    let vx = -n * a * se / d;
    let vy = n * a * beta * ce / d;

    // derivatives of the perifocal coordinates along E
    let dx_de = -a * se;
    let dy_de = a * beta * ce;
    let dvx_de = -n * a * (ce - e) / (d * d);
    let dvy_de = -n * a * beta * se / (d * d);

    // mean anomaly column
    let de_dl = 1.0 / d;
    // eccentricity column, holding the mean anomaly fixed
    let de_de = se / d;
    let dd_de = -ce + e * se * de_de;
    let dx_decc = a * (-se * de_de - 1.0);
    let dy_decc = a * (-e / beta * se + beta * ce * de_de);
    let dvx_decc = -n * a * (ce * de_de * d - se * dd_de) / (d * d);
    let dvy_decc = n * a * ((-e / beta) * ce / d + beta * (-se * de_de * d - ce * dd_de) / (d * d));

    let rot_z = |u: &Vec3| Vec3::new(-u.y, u.x, 0.0);
    let cols: [(Vec3, Vec3); 6] = [
        ((p * x + q * y) / a, -(p * vx + q * vy) / (2.0 * a)),
        (p * dx_decc + q * dy_decc, p * dvx_decc + q * dvy_decc),
        (nhat.cross(&p) * x + nhat.cross(&q) * y, nhat.cross(&p) * vx + nhat.cross(&q) * vy),
        (rot_z(&p) * x + rot_z(&q) * y, rot_z(&p) * vx + rot_z(&q) * vy),
        (q * x - p * y, q * vx - p * vy),
        ((p * dx_de + q * dy_de) * de_dl, (p * dvx_de + q * dvy_de) * de_dl),
    ];
    let mut jac = Matrix6::zeros();
    for (k, (dr, dv)) in cols.iter().enumerate() {
        jac.fixed_view_mut::<3, 1>(0, k).copy_from(dr);
        jac.fixed_view_mut::<3, 1>(3, k).copy_from(dv);
    }
    Ok(jac)
}

/// `d elements / d (r, rdot)`, the inverse of [`keplerian_to_cartesian_jacobian`].
pub fn cartesian_to_keplerian_jacobian(el: &KeplerianElements, mu: f64) -> Result<Matrix6<f64>> {
    let fwd = keplerian_to_cartesian_jacobian(el, mu)?;
    fwd.try_inverse()
        .ok_or_else(|| LinkError::Conditioning("element Jacobian is singular".into()))
}

/// Diagnostics from the two remaining compatibility conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompatResiduals {
    /// `(L1 - L2) . e_rho2`
    pub lenz_radial: f64,
    /// `ell1 - ell2 - n1 (t1 - t2)` wrapped into (-pi, pi]; absent for non-elliptic states.
    pub mean_anomaly: Option<f64>,
}

pub fn compatibility_residuals(
    s1: &CartesianState,
    s2: &CartesianState,
    e_rho2: &Vec3,
    phys: &Physics,
) -> Result<CompatResiduals> {
    let l1 = laplace_lenz(&s1.r, &s1.rdot, phys.mu)?;
    let l2 = laplace_lenz(&s2.r, &s2.rdot, phys.mu)?;
    let lenz_radial = (l1 - l2).dot(e_rho2);
    let mean_anomaly = match (cartesian_to_keplerian(s1, phys.mu), cartesian_to_keplerian(s2, phys.mu)) {
        (Ok(k1), Ok(k2)) => {
            let dt = phys.units.days_to_units(s1.epoch - s2.epoch);
            Some(wrap_difference(k1.mean_anomaly - k2.mean_anomaly - k1.mean_motion(phys.mu) * dt))
        }
        _ => None,
    };
    Ok(CompatResiduals { lenz_radial, mean_anomaly })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn phys_unit() -> Physics {
        Physics::default().with_mu(1.0)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn angular_momentum_examples() {
        assert_eq!(angular_momentum(&Vec3::x(), &Vec3::y()), Vec3::z());
        assert_eq!(angular_momentum(&Vec3::new(1.0, 2.0, 3.0), &Vec3::new(2.0, 4.0, 6.0)), Vec3::zeros());
    }

    #[test]
    fn lenz_examples() {
        let mu: f64 = 0.3;
        let l = laplace_lenz(&Vec3::x(), &Vec3::new(0.0, mu.sqrt(), 0.0), mu).unwrap();
        assert!(l.norm() < 1e-15);
        let v = 1.3;
        let l = laplace_lenz(&Vec3::x(), &Vec3::new(0.0, v, 0.0), 1.0).unwrap();
        assert!((l - Vec3::new(v * v - 1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!(laplace_lenz(&Vec3::zeros(), &Vec3::y(), 1.0).is_err());
    }

    #[test]
    fn energy_examples() {
        assert_eq!(two_body_energy(&Vec3::x(), &Vec3::y(), 1.0).unwrap(), -0.5);
        let r = Vec3::new(2.0, 0.0, 0.0);
        let v = Vec3::new(0.0, (2.0f64 * 1.0 / 2.0).sqrt(), 0.0);
        assert!(two_body_energy(&r, &v, 1.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn circular_equatorial_elements() {
        let s = CartesianState::new(Vec3::x(), Vec3::y(), 0.0);
        let el = cartesian_to_keplerian(&s, 1.0).unwrap();
        assert!((el.a - 1.0).abs() < 1e-14);
        assert!(el.e < 1e-14);
        assert!(el.i.abs() < 1e-14);

        let el = KeplerianElements::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let s = keplerian_to_cartesian(&el, 1.0).unwrap();
        assert!((s.r - Vec3::x()).norm() < 1e-14);
        assert!((s.rdot - Vec3::y()).norm() < 1e-14);
    }

    #[test]
    fn perihelion_at_zero_mean_anomaly() {
        let el = KeplerianElements::new(1.7, 0.4, 0.3, 1.0, 2.0, 0.0, 0.0);
        let s = keplerian_to_cartesian(&el, 1.0).unwrap();
        assert!((s.r.norm() - 1.7 * 0.6).abs() < 1e-14);
    }

    #[test]
    fn hyperbolic_and_rectilinear_rejected() {
        let s = CartesianState::new(Vec3::x(), Vec3::new(0.0, 2.0, 0.0), 0.0);
        assert!(matches!(cartesian_to_keplerian(&s, 1.0), Err(LinkError::UnsupportedOrbit { .. })));
        let s = CartesianState::new(Vec3::x(), Vec3::new(0.3, 0.0, 0.0), 0.0);
        assert!(matches!(cartesian_to_keplerian(&s, 1.0), Err(LinkError::RectilinearOrbit)));
        let el = KeplerianElements::new(1.0, 1.2, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(keplerian_to_cartesian(&el, 1.0).is_err());
    }

    #[test]
    fn kepler_equation_high_eccentricity() {
        for k in 0..200 {
            let ell = -7.0 + 0.07 * k as f64;
            for e in [0.0, 0.3, 0.9, 0.99] {
                let ecc = solve_kepler(ell, e).unwrap();
                assert!((ecc - e * ecc.sin() - ell).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_step_and_full_period() {
        let phys = Physics::default();
        let el = KeplerianElements::new(0.92, 0.19, 0.06, 3.5, 2.2, 4.3, 53175.0);
        let s0 = keplerian_to_cartesian(&el, phys.mu).unwrap();
        let s = propagate_kepler(&el, el.epoch, &phys).unwrap();
        assert!((s.r - s0.r).norm() < 1e-15 && (s.rdot - s0.rdot).norm() < 1e-17);
        let period_days = phys.units.units_to_days(el.period(phys.mu));
        let s = propagate_kepler(&el, el.epoch + period_days, &phys).unwrap();
        assert!((s.r - s0.r).norm() < 1e-10 * s0.r.norm());
        assert!((s.rdot - s0.rdot).norm() < 1e-10 * s0.rdot.norm());
        assert_eq!(propagation_jacobian(&el, el.epoch, &phys).unwrap(), Matrix6::identity());
    }

    /// Fixed-step classical Runge-Kutta on the two-body equation.
    fn rk4_two_body(r0: Vec3, v0: Vec3, mu: f64, dt: f64, steps: usize) -> (Vec3, Vec3) {
        let acc = |r: &Vec3| -r * (mu / r.norm().powi(3));
        let h = dt / steps as f64;
        let (mut r, mut v) = (r0, v0);
        for _ in 0..steps {
            let (k1r, k1v) = (v, acc(&r));
            let (k2r, k2v) = (v + k1v * (h / 2.0), acc(&(r + k1r * (h / 2.0))));
            let (k3r, k3v) = (v + k2v * (h / 2.0), acc(&(r + k2r * (h / 2.0))));
            let (k4r, k4v) = (v + k3v * h, acc(&(r + k3r * h)));
            r += (k1r + k2r * 2.0 + k3r * 2.0 + k4r) * (h / 6.0);
            v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        }
        (r, v)
    }

    #[test]
    fn propagation_matches_numerical_integration() {
        let phys = Physics::default();
        let el = KeplerianElements::new(0.923, 0.189, 0.0574, 3.576, 2.178, 4.346, 53175.59);
        let s0 = keplerian_to_cartesian(&el, phys.mu).unwrap();
        let dt = 181.86;
        let s1 = propagate_kepler(&el, el.epoch + dt, &phys).unwrap();
        let (r, v) = rk4_two_body(s0.r, s0.rdot, phys.mu, dt, 40_000);
        assert!((s1.r - r).norm() < 1e-9 * r.norm(), "{}", (s1.r - r).norm());
        assert!((s1.rdot - v).norm() < 1e-9 * v.norm());
    }

    #[test]
    fn mean_motion_sensitivity() {
        let phys = Physics::default();
        let el = KeplerianElements::new(0.92, 0.19, 0.05, 1.0, 2.0, 3.0, 100.0);
        let dt = 50.0;
        let jac = propagation_jacobian(&el, el.epoch + dt, &phys).unwrap();
        let n = el.mean_motion(phys.mu);
        assert!(rel(jac[(5, 0)], -1.5 * n / el.a * dt) < 1e-15);
        // central differences on the advanced elements
        let h = 1e-7;
        for k in 0..6 {
            let mut xp = el.to_array();
            let mut xm = el.to_array();
            xp[k] += h;
            xm[k] -= h;
            let ep = advance_elements(&KeplerianElements::from_array(xp, el.epoch), el.epoch + dt, &phys).unwrap();
            let em = advance_elements(&KeplerianElements::from_array(xm, el.epoch), el.epoch + dt, &phys).unwrap();
            let d = ep.difference(&em);
            for i in 0..6 {
                let fd = d[i] / (2.0 * h);
                assert!((fd - jac[(i, k)]).abs() < 1e-6 * (1.0 + jac[(i, k)].abs()), "{i},{k}: {fd} vs {}", jac[(i, k)]);
            }
        }
    }

    #[test]
    fn element_jacobian_matches_finite_differences() {
        let mu = 0.3;
        for el in [
            KeplerianElements::new(1.3, 0.35, 0.8, 1.2, 4.0, 2.5, 0.0),
            KeplerianElements::new(0.92, 0.19, 0.057, 3.57, 2.17, 4.34, 0.0),
        ] {
            let jac = keplerian_to_cartesian_jacobian(&el, mu).unwrap();
            let x0 = el.to_array();
            for k in 0..6 {
                let h = 1e-6;
                let mut xp = x0;
                let mut xm = x0;
                xp[k] += h;
                xm[k] -= h;
                let sp = keplerian_to_cartesian(&KeplerianElements::from_array(xp, 0.0), mu).unwrap().to_array();
                let sm = keplerian_to_cartesian(&KeplerianElements::from_array(xm, 0.0), mu).unwrap().to_array();
                for i in 0..6 {
                    let fd = (sp[i] - sm[i]) / (2.0 * h);
                    assert!((fd - jac[(i, k)]).abs() < 1e-7 * (1.0 + fd.abs()), "{i},{k}: {fd} vs {}", jac[(i, k)]);
                }
            }
            let inv = cartesian_to_keplerian_jacobian(&el, mu).unwrap();
            assert!((inv * jac - Matrix6::identity()).abs().max() < 1e-10);
        }
    }

    #[test]
    fn compatibility_on_exact_orbit() {
        let phys = Physics::default();
        let el = KeplerianElements::new(0.92, 0.19, 0.05, 1.0, 2.0, 3.0, 100.0);
        let s1 = keplerian_to_cartesian(&el, phys.mu).unwrap();
        let s2 = propagate_kepler(&el, 282.0, &phys).unwrap();
        let e = Vec3::new(0.3, -0.2, 0.9).normalize();
        let c = compatibility_residuals(&s1, &s2, &e, &phys).unwrap();
        assert!(c.lenz_radial.abs() < 1e-9);
        assert!(c.mean_anomaly.unwrap().abs() < 1e-9);
    }

    #[test]
    fn mean_anomaly_residual_wraps() {
        // ell1 - ell2 = 2pi + n1 dt exactly
        let phys = phys_unit();
        let el1 = KeplerianElements::new(1.0, 0.1, 0.2, 0.3, 0.4, 1.0, 0.0);
        let dt_days = 0.25;
        let n = el1.mean_motion(1.0);
        let el2 = KeplerianElements { mean_anomaly: wrap_two_pi(1.0 - n * dt_days - 2.0 * PI), epoch: -dt_days, ..el1 };
        let s1 = keplerian_to_cartesian(&el1, 1.0).unwrap();
        let s2 = keplerian_to_cartesian(&el2, 1.0).unwrap();
        let c = compatibility_residuals(&s1, &s2, &Vec3::x(), &phys).unwrap();
        assert!(c.mean_anomaly.unwrap().abs() < 1e-12);
    }

    #[test]
    fn non_elliptic_compatibility_flagged() {
        let phys = phys_unit();
        let s1 = CartesianState::new(Vec3::x(), Vec3::new(0.0, 2.0, 0.0), 0.0);
        let c = compatibility_residuals(&s1, &s1, &Vec3::x(), &phys).unwrap();
        assert!(c.mean_anomaly.is_none());
    }

    fn state_strategy() -> impl Strategy<Value = (Vec3, Vec3)> {
        (prop::array::uniform3(-3.0..3.0f64), prop::array::uniform3(-2.0..2.0f64))
            .prop_filter("nonzero radius", |(r, _)| Vec3::from(*r).norm() > 0.1)
            .prop_map(|(r, v)| (Vec3::from(r), Vec3::from(v)))
    }

    fn elliptic_elements() -> impl Strategy<Value = KeplerianElements> {
        (0.3..5.0f64, 0.0..0.95f64, 0.01..(PI - 0.01), 0.0..(2.0 * PI), 0.0..(2.0 * PI), 0.0..(2.0 * PI))
            .prop_map(|(a, e, i, o, w, l)| KeplerianElements::new(a, e, i, o, w, l, 0.0))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn lenz_forms_agree_and_orthogonal((r, v) in state_strategy(), mu in 0.1..3.0f64) {
            let rn = r.norm();
            let c = r.cross(&v);
            let direct = (v.cross(&c) - r * (mu / rn)) / mu;
            let l = laplace_lenz(&r, &v, mu).unwrap();
            prop_assert!((l - direct).norm() <= 1e-12 * l.norm().max(direct.norm()).max(1e-300) * 10.0 + 1e-15);
            prop_assert!(l.dot(&c).abs() <= 1e-12 * l.norm() * c.norm() + 1e-300);
        }

        #[test]
        fn element_round_trip(el in elliptic_elements(), mu in 0.1..2.0f64) {
            let s = keplerian_to_cartesian(&el, mu).unwrap();
            let back = cartesian_to_keplerian(&s, mu).unwrap();
            let s2 = keplerian_to_cartesian(&back, mu).unwrap();
            prop_assert!((s.r - s2.r).norm() <= 1e-10 * s.r.norm());
            prop_assert!((s.rdot - s2.rdot).norm() <= 1e-10 * s.rdot.norm());
            if el.e > 1e-6 {
                let d = el.difference(&back);
                let max = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                prop_assert!(max < 1e-9, "{:?}", d);
            }
        }

        #[test]
        fn element_integrals(el in elliptic_elements(), mu in 0.1..2.0f64) {
            let s = keplerian_to_cartesian(&el, mu).unwrap();
            let c = s.angular_momentum().norm();
            let expect = (mu * el.a * (1.0 - el.e * el.e)).sqrt();
            prop_assert!(rel(c, expect) < 1e-12);
            let en = two_body_energy(&s.r, &s.rdot, mu).unwrap();
            prop_assert!(rel(en, -mu / (2.0 * el.a)) < 1e-12);
        }

        #[test]
        fn propagation_conserves_integrals(el in elliptic_elements(), periods in 0.0..10.0f64) {
            let phys = phys_unit();
            let s0 = keplerian_to_cartesian(&el, 1.0).unwrap();
            let target = el.epoch + periods * el.period(1.0);
            let s1 = propagate_kepler(&el, target, &phys).unwrap();
            let c0 = s0.angular_momentum();
            let c1 = s1.angular_momentum();
            prop_assert!((c0 - c1).norm() <= 1e-12 * c0.norm());
            let l0 = laplace_lenz(&s0.r, &s0.rdot, 1.0).unwrap();
            let l1 = laplace_lenz(&s1.r, &s1.rdot, 1.0).unwrap();
            prop_assert!((l0 - l1).norm() <= 1e-12 * l0.norm().max(1.0));
            let e0 = two_body_energy(&s0.r, &s0.rdot, 1.0).unwrap();
            let e1 = two_body_energy(&s1.r, &s1.rdot, 1.0).unwrap();
            prop_assert!(rel(e1, e0) <= 1e-12);
        }

        #[test]
        fn energy_matches_semimajor_axis(el in elliptic_elements()) {
            let s = keplerian_to_cartesian(&el, 1.0).unwrap();
            let back = cartesian_to_keplerian(&s, 1.0).unwrap();
            let en = two_body_energy(&s.r, &s.rdot, 1.0).unwrap();
            prop_assert!(rel(en, -1.0 / (2.0 * back.a)) < 1e-12);
        }
    }
}

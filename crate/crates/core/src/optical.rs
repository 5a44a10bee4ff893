//! Linkage of two optical attributables through the angular momentum and the
//! projected Laplace-Lenz integrals.

use serde::{Deserialize, Serialize};

use crate::attributable::{ObserverState, OpticalAttributable};
use crate::config::LinkOptions;
use crate::covariance::{solution_covariance, LinkVariant};
use crate::degeneracy::{DegeneracyFlag, DEGENERACY_REL};
use crate::error::{LinkError, Result};
use crate::frames::{AttributableCoords, ObservationBasis, Vec3};
use crate::kepler::{cartesian_to_keplerian, compatibility_residuals, laplace_lenz, CartesianState};
use crate::poly::{aberth_roots, real_positive_roots, sylvester_resultant, AberthOptions, BivariatePoly, ResultantOptions, UnivariatePoly};
use crate::solution::{LinkageKind, LinkageSolution};
use crate::units::Physics;

/// Length and time scales used to nondimensionalize a problem so that `mu = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub length: f64,
    pub time: f64,
}

impl Scaling {
    /// Length from the first observer distance (1 when the observer sits at the origin).
    pub fn from_observer(q: &Vec3, mu: f64) -> Self {
        let length = if q.norm() > 0.0 { q.norm() } else { 1.0 };
        Self { length, time: (length.powi(3) / mu).sqrt() }
    }

    pub fn identity() -> Self {
        Self { length: 1.0, time: 1.0 }
    }

    pub fn speed(&self) -> f64 {
        self.length / self.time
    }

    pub fn observer(&self, o: &ObserverState) -> ObserverState {
        ObserverState::new(o.q / self.length, o.qdot / self.speed(), o.epoch)
    }

    pub fn optical(&self, a: &OpticalAttributable) -> OpticalAttributable {
        OpticalAttributable { alphadot: a.alphadot * self.time, deltadot: a.deltadot * self.time, ..a.clone() }
    }
}

/// Coefficients of `c(rho, rhodot) = D rhodot + E rho^2 + F rho + G` at one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalCoefficients {
    pub d: Vec3,
    pub e: Vec3,
    pub f: Vec3,
    pub g: Vec3,
    pub basis: ObservationBasis,
    pub q: Vec3,
    pub qdot: Vec3,
    /// Transverse rate vector `alphadot cos(delta) e_alpha + deltadot e_delta`.
    pub u: Vec3,
}

impl OpticalCoefficients {
    pub fn angular_momentum(&self, rho: f64, rhodot: f64) -> Vec3 {
        self.d * rhodot + self.e * (rho * rho) + self.f * rho + self.g
    }

    pub fn position(&self, rho: f64) -> Vec3 {
        self.q + self.basis.e_rho * rho
    }

    pub fn velocity(&self, rho: f64, rhodot: f64) -> Vec3 {
        self.qdot + self.basis.e_rho * rhodot + self.u * rho
    }
}

pub fn compute_optical_coefficients(att: &OpticalAttributable, obs: &ObserverState) -> Result<OpticalCoefficients> {
    let basis = ObservationBasis::new(att.alpha, att.delta)?;
    let (q, qdot) = (obs.q, obs.qdot);
    let ad_c = att.alphadot * basis.cos_delta();
    let u = basis.e_alpha * ad_c + basis.e_delta * att.deltadot;
    Ok(OpticalCoefficients {
        d: q.cross(&basis.e_rho),
        e: basis.e_delta * ad_c - basis.e_alpha * att.deltadot,
        f: q.cross(&basis.e_alpha) * ad_c + q.cross(&basis.e_delta) * att.deltadot + basis.e_rho.cross(&qdot),
        g: q.cross(&qdot),
        basis,
        q,
        qdot,
        u,
    })
}

/// Projection vector `v = e_rho2 x q2`.
pub fn projection_vector(c2: &OpticalCoefficients) -> Vec3 {
    c2.basis.e_rho.cross(&c2.q)
}

fn tiny(x: f64, scale: f64) -> bool {
    x.abs() <= DEGENERACY_REL * scale
}

/// `D1 x D2`, or the coincident-lines-of-sight degeneracy.
fn pencil(c1: &OpticalCoefficients, c2: &OpticalCoefficients) -> Result<Vec3> {
    let k = c1.d.cross(&c2.d);
    if tiny(k.norm(), c1.d.norm() * c2.d.norm()) {
        return Err(LinkError::Degenerate(vec![DegeneracyFlag::CoincidentLinesOfSight]));
    }
    Ok(k)
}

/// Degeneracies of the optical system: coincident lines of sight, completely
/// degenerate quadratic form, zenith observation at the second epoch.
pub fn detect_degenerate_optical(c1: &OpticalCoefficients, c2: &OpticalCoefficients) -> Vec<DegeneracyFlag> {
    let mut flags = Vec::new();
    let k = c1.d.cross(&c2.d);
    if tiny(k.norm(), c1.d.norm() * c2.d.norm()) {
        flags.push(DegeneracyFlag::CoincidentLinesOfSight);
    } else if tiny(c1.e.dot(&k), c1.e.norm() * k.norm()) && tiny(c2.e.dot(&k), c2.e.norm() * k.norm()) {
        flags.push(DegeneracyFlag::CompletelyDegenerateQuadratic);
    }
    if tiny(projection_vector(c2).norm(), c2.q.norm()) {
        flags.push(DegeneracyFlag::ZenithObservation);
    }
    flags
}

/// `J(rho1, rho2) . w` as a separable quadratic, for a constant vector `w`.
fn j_dot(c1: &OpticalCoefficients, c2: &OpticalCoefficients, w: &Vec3) -> BivariatePoly {
    BivariatePoly::separable_quadratic(
        [(c2.g - c1.g).dot(w), -c1.f.dot(w), -c1.e.dot(w)],
        [c2.f.dot(w), c2.e.dot(w)],
    )
}

/// `q(rho1, rho2) = (D1 x D2) . J(rho1, rho2)`, the angular momentum compatibility condition.
pub fn build_q_poly(c1: &OpticalCoefficients, c2: &OpticalCoefficients) -> Result<BivariatePoly> {
    let k = pencil(c1, c2)?;
    Ok(j_dot(c1, c2, &k))
}

/// `J = E2 rho2^2 - E1 rho1^2 + F2 rho2 - F1 rho1 + G2 - G1`.
pub fn j_vector(rho1: f64, rho2: f64, c1: &OpticalCoefficients, c2: &OpticalCoefficients) -> Vec3 {
    c2.e * (rho2 * rho2) - c1.e * (rho1 * rho1) + c2.f * rho2 - c1.f * rho1 + c2.g - c1.g
}

/// Radial velocities solving `D1 rhodot1 - D2 rhodot2 = J` in the least-squares sense.
pub fn radial_velocities(rho1: f64, rho2: f64, c1: &OpticalCoefficients, c2: &OpticalCoefficients) -> Result<(f64, f64)> {
    let k = pencil(c1, c2)?;
    let j = j_vector(rho1, rho2, c1, c2);
    let k2 = k.norm_squared();
    Ok((j.dot(&c2.d.cross(&k)) / k2, j.dot(&c1.d.cross(&k)) / k2))
}

/// The radial velocities as quadratic polynomials in `(rho1, rho2)`.
pub fn radial_velocity_polys(c1: &OpticalCoefficients, c2: &OpticalCoefficients) -> Result<(BivariatePoly, BivariatePoly)> {
    let k = pencil(c1, c2)?;
    let k2 = k.norm_squared();
    Ok((j_dot(c1, c2, &c2.d.cross(&k)).scale(1.0 / k2), j_dot(c1, c2, &c1.d.cross(&k)).scale(1.0 / k2)))
}

fn x_linear(a: f64, b: f64) -> BivariatePoly {
    BivariatePoly::linear(a, b, 0.0)
}

fn y_linear(a: f64, b: f64) -> BivariatePoly {
    BivariatePoly::linear(a, 0.0, b)
}

/// `W(rho1, rho2) = [|r1'|^2 r1 - (r1'.r1) r1' + (r2'.r2) r2'] . v` with the
/// radial velocities substituted, built so that its degree is 4.
pub fn build_w_poly(c1: &OpticalCoefficients, c2: &OpticalCoefficients) -> Result<BivariatePoly> {
    let v = projection_vector(c2);
    let (rd1, rd2) = radial_velocity_polys(c1, c2)?;
    let (e1, q1, qd1, u1) = (c1.basis.e_rho, c1.q, c1.qdot, c1.u);
    let (e2, q2, qd2, u2) = (c2.basis.e_rho, c2.q, c2.qdot, c2.u);

    // first epoch, x = rho1: r1' = rhodot1 e1 + s1 with s1 = q1' + x u1
    let r1_v = x_linear(q1.dot(&v), e1.dot(&v));
    let s1_v = x_linear(qd1.dot(&v), u1.dot(&v));
    let s1_sq = BivariatePoly::from_coeffs(vec![vec![qd1.norm_squared()], vec![2.0 * qd1.dot(&u1)], vec![u1.norm_squared()]]);
    let s1_r1 = BivariatePoly::from_coeffs(vec![vec![qd1.dot(&q1)], vec![qd1.dot(&e1) + u1.dot(&q1)], vec![u1.dot(&e1)]]);
    let q1e1 = q1.dot(&e1);
    let perp = (q1 - e1 * q1e1).dot(&v);

    // |r1'|^2 r1 - (r1'.r1) r1', the rhodot1^2 rho1 e1 terms cancelled
    let rd1_sq = &rd1 * &rd1;
    let mut w = rd1_sq.scale(perp);
    w = &w + &(&rd1 * &r1_v).scale(2.0 * e1.dot(&qd1));
    w = &w + &(&s1_sq * &r1_v);
    w = &w - &(&(&rd1 * &x_linear(q1e1, 1.0)) * &s1_v);
    w = &w - &(&s1_r1 * &rd1).scale(e1.dot(&v));
    w = &w - &(&s1_r1 * &s1_v);

    // (r2'.r2)(r2'.v): r2'.v = q2'.v + rho2 u2.v does not involve rhodot2 since e2 . v = 0
    let r2d_v = y_linear(qd2.dot(&v), u2.dot(&v));
    let s2_r2 = BivariatePoly::from_coeffs(vec![vec![qd2.dot(&q2), qd2.dot(&e2) + u2.dot(&q2), u2.dot(&e2)]]);
    let r2d_r2 = &(&rd2 * &y_linear(q2.dot(&e2), 1.0)) + &s2_r2;
    w = &w + &(&r2d_r2 * &r2d_v);
    Ok(w)
}

/// `p(rho1, rho2) = mu^2 (r1 . v)^2 - |r1|^2 W^2`, the squared projected Laplace-Lenz condition.
pub fn build_p_poly(c1: &OpticalCoefficients, c2: &OpticalCoefficients, mu: f64) -> Result<BivariatePoly> {
    let v = projection_vector(c2);
    let w = build_w_poly(c1, c2)?;
    let (e1, q1) = (c1.basis.e_rho, c1.q);
    let r1_v = x_linear(q1.dot(&v), e1.dot(&v));
    let r1_sq = BivariatePoly::from_coeffs(vec![vec![q1.norm_squared()], vec![2.0 * q1.dot(&e1)], vec![1.0]]);
    Ok(&(&r1_v * &r1_v).scale(mu * mu) - &(&r1_sq * &(&w * &w)))
}

/// Position and velocity.
pub type StatePair = (Vec3, Vec3);

/// Body states at both epochs for given distances, using the radial velocities of the system.
pub fn states_at(
    rho1: f64,
    rho2: f64,
    c1: &OpticalCoefficients,
    c2: &OpticalCoefficients,
) -> Result<(StatePair, StatePair, (f64, f64))> {
    let (rd1, rd2) = radial_velocities(rho1, rho2, c1, c2)?;
    Ok(((c1.position(rho1), c1.velocity(rho1, rd1)), (c2.position(rho2), c2.velocity(rho2, rd2)), (rd1, rd2)))
}

/// Normalized unsquared residual `(L1 - L2) . v / |v|` at `(rho1, rho2)`.
pub fn lenz_residual(rho1: f64, rho2: f64, c1: &OpticalCoefficients, c2: &OpticalCoefficients, mu: f64) -> Result<f64> {
    if !(rho1 > 0.0 && rho2 > 0.0) {
        return Err(LinkError::Domain("topocentric distances must be positive".into()));
    }
    let v = projection_vector(c2);
    if tiny(v.norm(), c2.q.norm()) {
        return Err(LinkError::Degenerate(vec![DegeneracyFlag::ZenithObservation]));
    }
    let ((r1, v1), (r2, v2), _) = states_at(rho1, rho2, c1, c2)?;
    let l1 = laplace_lenz(&r1, &v1, mu)?;
    let l2 = laplace_lenz(&r2, &v2, mu)?;
    Ok((l1 - l2).dot(&v) / v.norm())
}

/// Two-body energies at both epochs.
pub fn energies_at(rho1: f64, rho2: f64, c1: &OpticalCoefficients, c2: &OpticalCoefficients, mu: f64) -> Result<(f64, f64)> {
    let ((r1, v1), (r2, v2), _) = states_at(rho1, rho2, c1, c2)?;
    Ok((v1.norm_squared() / 2.0 - mu / r1.norm(), v2.norm_squared() / 2.0 - mu / r2.norm()))
}

/// The scaled polynomial system of an optical pair.
#[derive(Debug, Clone)]
pub struct OpticalSystem {
    pub scaling: Scaling,
    /// Coefficients in scaled units.
    pub c1: OpticalCoefficients,
    pub c2: OpticalCoefficients,
    /// `p` and `q` in the scaled variables with `mu = 1`.
    pub p: BivariatePoly,
    pub q: BivariatePoly,
}

impl OpticalSystem {
    pub fn new(
        att1: &OpticalAttributable,
        att2: &OpticalAttributable,
        obs1: &ObserverState,
        obs2: &ObserverState,
        phys: &Physics,
    ) -> Result<Self> {
        let scaling = Scaling::from_observer(&obs1.q, phys.mu);
        let c1 = compute_optical_coefficients(&scaling.optical(att1), &scaling.observer(obs1))?;
        let c2 = compute_optical_coefficients(&scaling.optical(att2), &scaling.observer(obs2))?;
        let flags = detect_degenerate_optical(&c1, &c2);
        if !flags.is_empty() {
            return Err(LinkError::Degenerate(flags));
        }
        let q = build_q_poly(&c1, &c2)?;
        let p = build_p_poly(&c1, &c2, 1.0)?;
        Ok(Self { scaling, c1, c2, p, q })
    }

    /// `q` at physical distances (value in scaled units).
    pub fn q_at(&self, rho1: f64, rho2: f64) -> f64 {
        let l = self.scaling.length;
        self.q.eval(rho1 / l, rho2 / l)
    }

    pub fn p_at(&self, rho1: f64, rho2: f64) -> f64 {
        let l = self.scaling.length;
        self.p.eval(rho1 / l, rho2 / l)
    }

    pub fn lenz_at(&self, rho1: f64, rho2: f64) -> Result<f64> {
        let l = self.scaling.length;
        lenz_residual(rho1 / l, rho2 / l, &self.c1, &self.c2, 1.0)
    }

    /// Energy difference and its squared polynomial form
    /// `(A + B - dk^2 A B)^2 - 4 A B`, with `A = |r1|^2`, `B = |r2|^2` and
    /// `dk = (|r1'|^2 - |r2'|^2) / 2`, in scaled units.
    pub fn energy_at(&self, rho1: f64, rho2: f64) -> Result<(f64, f64)> {
        let l = self.scaling.length;
        let (x, y) = (rho1 / l, rho2 / l);
        let ((r1, v1), (r2, v2), _) = states_at(x, y, &self.c1, &self.c2)?;
        let diff = (v1.norm_squared() / 2.0 - 1.0 / r1.norm()) - (v2.norm_squared() / 2.0 - 1.0 / r2.norm());
        let (a, b) = (r1.norm_squared(), r2.norm_squared());
        let dk = (v1.norm_squared() - v2.norm_squared()) / 2.0;
        let t = a + b - dk * dk * a * b;
        Ok((diff, t * t - 4.0 * a * b))
    }

    /// Resultant of `p` and `q` with respect to `rho2`, in the scaled variable.
    pub fn resultant(&self, fft_points: Option<usize>) -> Result<UnivariatePoly> {
        let opts = ResultantOptions { n_points: fft_points, ..ResultantOptions::default() };
        sylvester_resultant(&self.p, &self.q, &opts)
    }
}

/// A common root of `p` and `q` before the spurious-solution test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub rho1: f64,
    pub rho2: f64,
    pub rhodot1: f64,
    pub rhodot2: f64,
    /// Normalized unsquared Laplace-Lenz residual.
    pub lenz_residual: f64,
    pub spurious: bool,
}

/// Output of [`link_optical`]: accepted solutions plus the diagnostics that led to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalLinkReport {
    pub solutions: Vec<LinkageSolution>,
    pub candidates: Vec<Candidate>,
    pub resultant_degree: usize,
    /// Positive real roots of the resultant, physical units.
    pub rho1_roots: Vec<f64>,
    pub roots_converged: bool,
}

/// Pairs closer than this (relative, in both distances) are one solution.
const CLUSTER_REL: f64 = 1e-4;

/// Solve `a y^2 + b y + c = 0`, keeping both real roots and tolerating a slightly negative discriminant.
fn real_quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        return if b != 0.0 { vec![-c / b] } else { Vec::new() };
    }
    let mut disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        if disc >= -1e-10 * (b * b + (4.0 * a * c).abs()) {
            disc = 0.0;
        } else {
            return Vec::new();
        }
    }
    // stable form avoiding cancellation
    let s = disc.sqrt();
    let t = -0.5 * (b + b.signum() * s);
    if t == 0.0 {
        return vec![0.0, 0.0];
    }
    vec![t / a, c / t]
}

/// Seeds for the common roots: real parts of resultant roots this close to the real axis.
/// Nearly tangent zero sets push genuine real roots off the axis by far more than `real_tol`.
const SEED_IMAG: f64 = 0.1;

/// `|p| / sum |p_ij x^i y^j|` at which a refined pair counts as a common root.
const ROOT_TOL: f64 = 1e-10;

fn relative_p(p: &BivariatePoly, x: f64, y: f64) -> f64 {
    (p.eval(x, y) / p.eval_abs(x, y).max(f64::MIN_POSITIVE)).abs()
}

/// Root of `q(x, .)` closest to `near`.
fn branch_point(q: &BivariatePoly, x: f64, near: f64) -> Option<f64> {
    let c = q.at_x(x);
    real_quadratic_roots(c.coeff(2), c.coeff(1), c.coeff(0)).into_iter().min_by(|a, b| (a - near).abs().total_cmp(&(b - near).abs()))
}

/// Safeguarded Newton iteration on `x -> p(x, y(x))`, with `y(x)` the branch of `q = 0`
/// through the starting point. The restriction stays well conditioned when the two zero
/// sets run nearly parallel, which is where the resultant loses its digits.
fn refine_on_branch(p: &BivariatePoly, q: &BivariatePoly, x0: f64, y0: f64) -> Option<(f64, f64)> {
    let (px, py, qx, qy) = (p.d_dx(), p.d_dy(), q.d_dx(), q.d_dy());
    let (mut x, mut y) = (x0, branch_point(q, x0, y0)?);
    let mut g = relative_p(p, x, y);
    for _ in 0..60 {
        if g == 0.0 {
            return Some((x, y));
        }
        let dq = qy.eval(x, y);
        let slope = px.eval(x, y) - py.eval(x, y) * qx.eval(x, y) / dq;
        let mut step = p.eval(x, y) / slope;
        if !step.is_finite() {
            break;
        }
        let mut moved = false;
        for _ in 0..40 {
            if let Some(ny) = branch_point(q, x - step, y) {
                let ng = relative_p(p, x - step, ny);
                if ng < g {
                    (x, y, g) = (x - step, ny, ng);
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved || step.abs() <= 4.0 * f64::EPSILON * x.abs() {
            break;
        }
    }
    (g <= ROOT_TOL).then_some((x, y))
}

/// Secant refinement of an accepted pair on the unsquared Laplace-Lenz residual along its
/// branch of `q = 0`. The squared `p` pins the root less sharply whenever its spurious
/// factor is also small nearby.
fn polish_on_lenz(q: &BivariatePoly, c1: &OpticalCoefficients, c2: &OpticalCoefficients, x: f64, y: f64) -> (f64, f64) {
    let f = |x: f64, near: f64| -> Option<(f64, f64)> {
        let y = branch_point(q, x, near)?;
        Some((lenz_residual(x, y, c1, c2, 1.0).ok()?, y))
    };
    let Some((mut f0, _)) = f(x, y) else { return (x, y) };
    let mut best = (x, y, f0.abs());
    let mut x0 = x;
    let mut x1 = x * (1.0 + 1e-8);
    let Some((mut f1, mut y1)) = f(x1, y) else { return (x, y) };
    for _ in 0..12 {
        if f1.abs() < best.2 {
            best = (x1, y1, f1.abs());
        }
        if f1 == 0.0 || f1 == f0 || (x1 - x0).abs() <= 4.0 * f64::EPSILON * x1.abs() {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !x2.is_finite() || (x2 - x).abs() > 1e-6 * x {
            break;
        }
        let Some((f2, y2)) = f(x2, y1) else { break };
        (x0, f0) = (x1, f1);
        (x1, f1, y1) = (x2, f2, y2);
    }
    (best.0, best.1)
}

/// Build a solution record from physical distances and radial velocities.
#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble_solution(
    kind: LinkageKind,
    coords1: AttributableCoords,
    coords2: AttributableCoords,
    tbar: (f64, f64),
    obs1: &ObserverState,
    obs2: &ObserverState,
    lenz_residual: f64,
    phys: &Physics,
) -> Result<LinkageSolution> {
    let (r1, v1) = coords1.to_cartesian(&obs1.q, &obs1.qdot)?;
    let (r2, v2) = coords2.to_cartesian(&obs2.q, &obs2.qdot)?;
    let s1 = CartesianState::new(r1, v1, phys.aberration_correct(tbar.0, coords1.rho));
    let s2 = CartesianState::new(r2, v2, phys.aberration_correct(tbar.1, coords2.rho));
    let e_rho2 = ObservationBasis::new(coords2.alpha, coords2.delta)?.e_rho;
    Ok(LinkageSolution {
        kind,
        rho1: coords1.rho,
        rhodot1: coords1.rhodot,
        rho2: coords2.rho,
        rhodot2: coords2.rhodot,
        alphadot1: coords1.alphadot,
        deltadot1: coords1.deltadot,
        cartesian1: s1,
        cartesian2: s2,
        elements1: cartesian_to_keplerian(&s1, phys.mu).ok(),
        lenz_residual,
        compat: compatibility_residuals(&s1, &s2, &e_rho2, phys).ok(),
        covariance: None,
        chi4: None,
        accepted: None,
        flags: Vec::new(),
    })
}

/// Preliminary orbits linking two optical attributables.
///
/// The observer states are taken at the mean epochs of the attributables; the
/// solution states carry the light-time corrected epochs.
pub fn link_optical(
    att1: &OpticalAttributable,
    att2: &OpticalAttributable,
    obs1: &ObserverState,
    obs2: &ObserverState,
    phys: &Physics,
    opts: &LinkOptions,
) -> Result<OpticalLinkReport> {
    if att1.tbar == att2.tbar {
        return Err(LinkError::Domain("the two attributables share the same epoch".into()));
    }
    let sys = OpticalSystem::new(att1, att2, obs1, obs2, phys)?;
    let l = sys.scaling.length;
    let res = sys.resultant(opts.fft_points)?.normalized();
    let resultant_degree = res.degree();

    let (roots, roots_converged) = match aberth_roots(&res, &AberthOptions::default()) {
        Ok(r) => (r, true),
        Err(LinkError::RootsNotConverged { roots, .. }) => (roots, false),
        Err(LinkError::NoRoots) => (Vec::new(), true),
        Err(e) => return Err(e),
    };
    let rho1_roots: Vec<f64> = real_positive_roots(&roots, opts.real_tol).into_iter().map(|x| res.newton_polish(x, 3)).collect();
    let seeds = rho1_roots.iter().copied().chain(
        roots.iter().filter(|z| z.re > 0.0 && z.im.abs() >= opts.real_tol * z.re.max(1.0) && z.im.abs() < SEED_IMAG * z.re).map(|z| z.re),
    );

    let min_rho = opts.min_rho / l;
    let (p, q) = (&sys.p, &sys.q);
    let mut pairs: Vec<(f64, f64, f64)> = Vec::new();
    for x0 in seeds {
        let qy = q.at_x(x0);
        for y0 in real_quadratic_roots(qy.coeff(2), qy.coeff(1), qy.coeff(0)) {
            if !(y0 > 0.0) {
                continue;
            }
            let Some((x, y)) = refine_on_branch(p, q, x0, y0) else { continue };
            if !(x > min_rho && y > min_rho) {
                continue;
            }
            // several seeds may refine to the same pair; keep the best
            let score = relative_p(p, x, y);
            match pairs.iter_mut().find(|(a, b, _)| (*a - x).abs() <= CLUSTER_REL * x && (*b - y).abs() <= CLUSTER_REL * y) {
                Some(slot) if score < slot.2 => *slot = (x, y, score),
                Some(_) => {}
                None => pairs.push((x, y, score)),
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut candidates = Vec::new();
    let mut solutions = Vec::new();
    for (x, y, _) in pairs {
        let mut lenz = lenz_residual(x, y, &sys.c1, &sys.c2, 1.0)?;
        let spurious = !(lenz.abs() < opts.spurious_tol);
        let (x, y) = if spurious { (x, y) } else { polish_on_lenz(q, &sys.c1, &sys.c2, x, y) };
        if !spurious {
            lenz = lenz_residual(x, y, &sys.c1, &sys.c2, 1.0)?;
        }
        let (rd1, rd2) = radial_velocities(x, y, &sys.c1, &sys.c2)?;
        let v = sys.scaling.speed();
        let cand = Candidate { rho1: x * l, rho2: y * l, rhodot1: rd1 * v, rhodot2: rd2 * v, lenz_residual: lenz, spurious };
        candidates.push(cand);
        if spurious {
            continue;
        }
        let coords1 = AttributableCoords {
            alpha: att1.alpha,
            delta: att1.delta,
            alphadot: att1.alphadot,
            deltadot: att1.deltadot,
            rho: cand.rho1,
            rhodot: cand.rhodot1,
        };
        let coords2 = AttributableCoords {
            alpha: att2.alpha,
            delta: att2.delta,
            alphadot: att2.alphadot,
            deltadot: att2.deltadot,
            rho: cand.rho2,
            rhodot: cand.rhodot2,
        };
        let mut sol = assemble_solution(LinkageKind::Optical, coords1, coords2, (att1.tbar, att2.tbar), obs1, obs2, lenz, phys)?;
        if opts.covariance {
            sol.covariance =
                solution_covariance(LinkVariant::Optical, &coords1, &coords2, obs1, obs2, &att1.cov, &att2.cov, None, phys, opts.cond_threshold)
                    .ok();
        }
        solutions.push(sol);
    }
    Ok(OpticalLinkReport {
        solutions,
        candidates,
        resultant_degree,
        rho1_roots: rho1_roots.iter().map(|x| x * l).collect(),
        roots_converged,
    })
}

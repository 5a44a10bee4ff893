//! Linkage of a radar attributable with an optical one: linear elimination of the
//! unknown rates followed by a quartic in the second topocentric distance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::attributable::{ObserverState, OpticalAttributable, RadarAttributable};
use crate::config::LinkOptions;
use crate::covariance::{solution_covariance, LinkVariant};
use crate::degeneracy::{DegeneracyFlag, DEGENERACY_REL};
use crate::error::{LinkError, Result};
use crate::frames::{AttributableCoords, ObservationBasis, Vec3};
use crate::kepler::laplace_lenz;
use crate::optical::{assemble_solution, compute_optical_coefficients, projection_vector, OpticalCoefficients, Scaling};
use crate::poly::{real_positive_roots, UnivariatePoly};
use crate::solution::{LinkageKind, LinkageSolution};
use crate::units::Physics;

/// `c(xi, zeta) = A xi + B zeta + C` for a radar attributable, with
/// `xi = rho alphadot cos(delta)` and `zeta = rho deltadot`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarCoefficients {
    pub a: Vec3,
    pub b: Vec3,
    pub c: Vec3,
    pub basis: ObservationBasis,
    pub r: Vec3,
    pub q: Vec3,
    pub qdot: Vec3,
    pub rho: f64,
    pub rhodot: f64,
}

impl RadarCoefficients {
    pub fn angular_momentum(&self, xi: f64, zeta: f64) -> Vec3 {
        self.a * xi + self.b * zeta + self.c
    }

    pub fn velocity(&self, xi: f64, zeta: f64) -> Vec3 {
        self.qdot + self.basis.e_rho * self.rhodot + self.basis.e_alpha * xi + self.basis.e_delta * zeta
    }
}

pub fn radar_coefficients(att: &RadarAttributable, obs: &ObserverState) -> Result<RadarCoefficients> {
    if !(att.rho > 0.0) {
        return Err(LinkError::Domain("radar range must be positive".into()));
    }
    let basis = ObservationBasis::new(att.alpha, att.delta)?;
    let r = obs.q + basis.e_rho * att.rho;
    Ok(RadarCoefficients {
        a: r.cross(&basis.e_alpha),
        b: r.cross(&basis.e_delta),
        c: r.cross(&obs.qdot) + obs.q.cross(&basis.e_rho) * att.rhodot,
        basis,
        r,
        q: obs.q,
        qdot: obs.qdot,
        rho: att.rho,
        rhodot: att.rhodot,
    })
}

/// `xi1`, `zeta1` and `rhodot2` as quadratics in `rho2`; index `k` multiplies `rho2^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EliminationQuadratics {
    pub x: [f64; 3],
    pub z: [f64; 3],
    pub r: [f64; 3],
}

impl EliminationQuadratics {
    fn eval(c: &[f64; 3], y: f64) -> f64 {
        (c[2] * y + c[1]) * y + c[0]
    }

    /// `(xi1, zeta1, rhodot2)` at `rho2`.
    pub fn at(&self, rho2: f64) -> (f64, f64, f64) {
        (Self::eval(&self.x, rho2), Self::eval(&self.z, rho2), Self::eval(&self.r, rho2))
    }
}

fn triple_degenerate(rc1: &RadarCoefficients, oc2: &OpticalCoefficients) -> bool {
    let t = rc1.a.dot(&rc1.b.cross(&oc2.d));
    t.abs() <= DEGENERACY_REL * rc1.a.norm() * rc1.b.norm() * oc2.d.norm()
}

/// Cramer's rule on `A1 xi + B1 zeta - D2 rhodot2 = E2 rho2^2 + F2 rho2 + G2 - C1`.
pub fn eliminate_linear(rc1: &RadarCoefficients, oc2: &OpticalCoefficients) -> Result<EliminationQuadratics> {
    if triple_degenerate(rc1, oc2) {
        return Err(LinkError::Degenerate(vec![DegeneracyFlag::RadarLinearSystem]));
    }
    let gamma = 1.0 / rc1.a.dot(&rc1.b.cross(&oc2.d));
    let h = [oc2.g - rc1.c, oc2.f, oc2.e];
    let bd = rc1.b.cross(&oc2.d);
    let ad = rc1.a.cross(&oc2.d);
    let ab = rc1.a.cross(&rc1.b);
    Ok(EliminationQuadratics {
        x: h.map(|v| gamma * v.dot(&bd)),
        z: h.map(|v| -gamma * v.dot(&ad)),
        r: h.map(|v| -gamma * v.dot(&ab)),
    })
}

/// Polynomial with vector coefficients.
#[derive(Debug, Clone)]
struct VecPoly(Vec<Vec3>);

impl VecPoly {
    fn dot_const(&self, w: &Vec3) -> UnivariatePoly {
        UnivariatePoly::new(self.0.iter().map(|c| c.dot(w)).collect())
    }

    fn dot(&self, other: &VecPoly) -> UnivariatePoly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a.dot(b);
            }
        }
        UnivariatePoly::new(out)
    }
}

/// `mu (L1 - L2) . v` as a polynomial of degree at most 4 in `rho2`, with `v = e_rho2 x q2`.
pub fn build_quartic(rc1: &RadarCoefficients, oc2: &OpticalCoefficients, mu: f64) -> Result<UnivariatePoly> {
    let el = eliminate_linear(rc1, oc2)?;
    let v = projection_vector(oc2);
    let (ea, ed) = (rc1.basis.e_alpha, rc1.basis.e_delta);
    let base = rc1.qdot + rc1.basis.e_rho * rc1.rhodot;
    let rdot1 = VecPoly((0..3).map(|k| ea * el.x[k] + ed * el.z[k] + if k == 0 { base } else { Vec3::zeros() }).collect());
    let r1 = rc1.r;
    let r1v = r1.dot(&v);

    // mu L1 . v = |r1'|^2 (r1.v) - (r1'.r1)(r1'.v) - mu (r1.v) / |r1|
    let mut poly = rdot1.dot(&rdot1).scale(r1v) - &rdot1.dot_const(&r1) * &rdot1.dot_const(&v);
    poly = poly - UnivariatePoly::constant(mu * r1v / r1.norm());

    // (r2'.r2)(r2'.v); r2 . v = 0 and e2 . v = 0 remove the other terms
    let (e2, q2, qd2, u2) = (oc2.basis.e_rho, oc2.q, oc2.qdot, oc2.u);
    let rd2 = UnivariatePoly::new(el.r.to_vec());
    let r2_dot_r2d = &(&rd2 * &UnivariatePoly::new(vec![q2.dot(&e2), 1.0]))
        + &UnivariatePoly::new(vec![qd2.dot(&q2), qd2.dot(&e2) + u2.dot(&q2), u2.dot(&e2)]);
    let r2d_v = UnivariatePoly::new(vec![qd2.dot(&v), u2.dot(&v)]);
    Ok(&poly + &(&r2_dot_r2d * &r2d_v))
}

fn cbrt_complex(z: Complex64) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        z
    } else {
        z.powf(1.0 / 3.0)
    }
}

fn newton_complex(coeffs: &[f64], mut z: Complex64, steps: usize) -> Complex64 {
    let p = UnivariatePoly::new(coeffs.to_vec());
    let dp = p.derivative();
    for _ in 0..steps {
        let f = p.eval_complex_compensated(z);
        let d = dp.eval_complex(z);
        if d == Complex64::new(0.0, 0.0) {
            break;
        }
        let next = z - f / d;
        if !(p.eval_complex_compensated(next).norm() < f.norm()) {
            break;
        }
        z = next;
    }
    z
}

/// Roots of `a3 m^3 + a2 m^2 + a1 m + a0` by Cardano's formula in complex arithmetic.
fn cubic_roots(a: [f64; 4]) -> Vec<Complex64> {
    let [d, c, b, a3] = a;
    let (b, c, d) = (b / a3, c / a3, d / a3);
    // m = t - b/3: t^3 + p t + q
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = Complex64::new(q * q / 4.0 + p * p * p / 27.0, 0.0).sqrt();
    let mut u = cbrt_complex(Complex64::new(-q / 2.0, 0.0) + disc);
    if u.norm() < 1e-300 {
        u = cbrt_complex(Complex64::new(-q / 2.0, 0.0) - disc);
    }
    let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut out = Vec::with_capacity(3);
    for k in 0..3 {
        let uk = u * omega.powu(k);
        let t = if uk.norm() > 1e-300 { uk - p / (3.0 * uk) } else { Complex64::new(0.0, 0.0) };
        out.push(t - b / 3.0);
    }
    out
}

/// Closed-form roots of a polynomial of degree 1 to 4 (Ferrari for quartics),
/// refined by a few Newton steps on the original polynomial.
pub fn solve_quartic(poly: &UnivariatePoly) -> Result<Vec<Complex64>> {
    let c = poly.coeffs();
    let max = poly.max_abs_coeff();
    if c.len() > 5 && c[5..].iter().any(|&x| x.abs() > 1e-12 * max) {
        return Err(LinkError::Domain(format!("polynomial of degree {} passed to the quartic solver", poly.degree())));
    }
    let mut n = c.len().min(5);
    while n > 1 && c[n - 1].abs() <= 1e-12 * max {
        n -= 1;
    }
    let coeffs = &c[..n];
    let deg = n.saturating_sub(1);
    if deg == 0 || max == 0.0 {
        return Err(LinkError::NoRoots);
    }
    let lead = coeffs[deg];
    let mon: Vec<f64> = coeffs.iter().map(|x| x / lead).collect();
    let zero = Complex64::new(0.0, 0.0);
    let roots = match deg {
        1 => vec![Complex64::new(-mon[0], 0.0)],
        2 => {
            let s = Complex64::new(mon[1] * mon[1] - 4.0 * mon[0], 0.0).sqrt();
            vec![(-mon[1] + s) / 2.0, (-mon[1] - s) / 2.0]
        }
        3 => cubic_roots([mon[0], mon[1], mon[2], 1.0]),
        _ => {
            let (b, c2, d, e) = (mon[3], mon[2], mon[1], mon[0]);
            let shift = -b / 4.0;
            let p = c2 - 3.0 * b * b / 8.0;
            let q = b * b * b / 8.0 - b * c2 / 2.0 + d;
            let r = -3.0 * b.powi(4) / 256.0 + b * b * c2 / 16.0 - b * d / 4.0 + e;
            let scale = p.abs().max(q.abs()).max(r.abs()).max(1e-300);
            let t: Vec<Complex64> = if q.abs() <= 1e-14 * scale {
                let s = Complex64::new(p * p - 4.0 * r, 0.0).sqrt();
                let (z1, z2) = ((-p + s) / 2.0, (-p - s) / 2.0);
                vec![z1.sqrt(), -z1.sqrt(), z2.sqrt(), -z2.sqrt()]
            } else {
                let ms = cubic_roots([-q * q, 2.0 * p * p - 8.0 * r, 8.0 * p, 8.0]);
                let m = ms.into_iter().fold(zero, |best, m| if m.norm() > best.norm() { m } else { best });
                let w = (2.0 * m).sqrt();
                let mut t = Vec::with_capacity(4);
                for s in [1.0, -1.0] {
                    let root = (-(2.0 * p + 2.0 * m + s * 2.0 * q / w)).sqrt();
                    t.push((s * w + root) / 2.0);
                    t.push((s * w - root) / 2.0);
                }
                t
            };
            t.into_iter().map(|t| t + shift).collect()
        }
    };
    Ok(roots.into_iter().map(|z| newton_complex(coeffs, z, 3)).collect())
}

/// Degeneracies of the radar-optical system: singular linear system, zenith observation.
pub fn detect_degenerate_radar(rc1: &RadarCoefficients, oc2: &OpticalCoefficients) -> Vec<DegeneracyFlag> {
    let mut flags = Vec::new();
    if triple_degenerate(rc1, oc2) {
        flags.push(DegeneracyFlag::RadarLinearSystem);
    }
    if projection_vector(oc2).norm() <= DEGENERACY_REL * oc2.q.norm() {
        flags.push(DegeneracyFlag::ZenithObservation);
    }
    flags
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarLinkReport {
    pub solutions: Vec<LinkageSolution>,
    /// All roots of the quartic in `rho2`, length units.
    pub roots: Vec<Complex64>,
    pub degree: usize,
}

fn scaled_radar(s: &Scaling, a: &RadarAttributable) -> RadarAttributable {
    RadarAttributable { rho: a.rho / s.length, rhodot: a.rhodot / s.speed(), ..a.clone() }
}

/// Preliminary orbits from a radar attributable at the first epoch and an optical one at the second.
///
/// The first epoch is light-time corrected with the measured range.
/// Secant steps on the direct Laplace-Lenz residual; the quartic loses digits to
/// cancellation for distant roots. Steps are confined to `1e-6 y` and the best
/// iterate is kept.
fn polish_radar_root(f: &impl Fn(f64) -> Result<f64>, y: f64) -> Result<(f64, f64)> {
    let mut best = (y, f(y)?);
    let (mut y0, mut f0) = best;
    let mut y1 = y * (1.0 + 1e-8);
    let Ok(mut f1) = f(y1) else { return Ok(best) };
    for _ in 0..12 {
        if f1.abs() < best.1.abs() {
            best = (y1, f1);
        }
        if f1 == 0.0 || f1 == f0 || (y1 - y0).abs() <= 4.0 * f64::EPSILON * y1.abs() {
            break;
        }
        let y2 = y1 - f1 * (y1 - y0) / (f1 - f0);
        if !y2.is_finite() || (y2 - y).abs() > 1e-6 * y {
            break;
        }
        let Ok(f2) = f(y2) else { break };
        (y0, f0, y1, f1) = (y1, f1, y2, f2);
    }
    Ok(best)
}

pub fn link_radar_optical(
    att1: &RadarAttributable,
    att2: &OpticalAttributable,
    obs1: &ObserverState,
    obs2: &ObserverState,
    phys: &Physics,
    opts: &LinkOptions,
) -> Result<RadarLinkReport> {
    if att1.tbar == att2.tbar {
        return Err(LinkError::Domain("the two attributables share the same epoch".into()));
    }
    let s = Scaling::from_observer(&obs1.q, phys.mu);
    let rc1 = radar_coefficients(&scaled_radar(&s, att1), &s.observer(obs1))?;
    let oc2 = compute_optical_coefficients(&s.optical(att2), &s.observer(obs2))?;
    let flags = detect_degenerate_radar(&rc1, &oc2);
    if !flags.is_empty() {
        return Err(LinkError::Degenerate(flags));
    }
    let el = eliminate_linear(&rc1, &oc2)?;
    let quartic = build_quartic(&rc1, &oc2, 1.0)?;
    let roots = match solve_quartic(&quartic) {
        Ok(r) => r,
        Err(LinkError::NoRoots) => Vec::new(),
        Err(e) => return Err(e),
    };
    let l = s.length;
    let v = projection_vector(&oc2);
    let mut solutions = Vec::new();
    for y in real_positive_roots(&roots, opts.real_tol) {
        let y = quartic.newton_polish(y, 3);
        if !(y * l > opts.min_rho) {
            continue;
        }
        let cd1 = rc1.basis.cos_delta();
        if !(cd1 > 1e-9) {
            return Err(LinkError::PolarSingularity { delta: att1.delta });
        }
        let lenz_at = |y: f64| -> Result<f64> {
            let (xi, zeta, rd2) = el.at(y);
            let (v1, r2, v2) = (rc1.velocity(xi, zeta), oc2.position(y), oc2.velocity(y, rd2));
            Ok((laplace_lenz(&rc1.r, &v1, 1.0)? - laplace_lenz(&r2, &v2, 1.0)?).dot(&v) / v.norm())
        };
        let (y, lenz) = polish_radar_root(&lenz_at, y)?;
        let (xi, zeta, rd2) = el.at(y);

        let coords1 = AttributableCoords {
            alpha: att1.alpha,
            delta: att1.delta,
            alphadot: xi / (rc1.rho * cd1) / s.time,
            deltadot: zeta / rc1.rho / s.time,
            rho: att1.rho,
            rhodot: att1.rhodot,
        };
        let coords2 = AttributableCoords {
            alpha: att2.alpha,
            delta: att2.delta,
            alphadot: att2.alphadot,
            deltadot: att2.deltadot,
            rho: y * l,
            rhodot: rd2 * s.speed(),
        };
        let mut sol = assemble_solution(LinkageKind::RadarOptical, coords1, coords2, (att1.tbar, att2.tbar), obs1, obs2, lenz, phys)?;
        if opts.covariance {
            sol.covariance = solution_covariance(
                LinkVariant::RadarOptical,
                &coords1,
                &coords2,
                obs1,
                obs2,
                &att1.cov,
                &att2.cov,
                None,
                phys,
                opts.cond_threshold,
            )
            .ok();
        }
        solutions.push(sol);
    }
    Ok(RadarLinkReport { solutions, roots: roots.iter().map(|z| z * l).collect(), degree: quartic.degree() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{aberth_roots, AberthOptions};
    use nalgebra::Matrix4;
    use rand::{Rng, SeedableRng};

    fn rv(rng: &mut impl Rng, s: f64) -> Vec3 {
        Vec3::new(rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s))
    }

    fn random_pair(rng: &mut impl Rng) -> (RadarCoefficients, OpticalCoefficients) {
        let rad = RadarAttributable::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(-1.2..1.2),
            rng.random_range(0.1..2.0),
            rng.random_range(-0.5..0.5),
            0.0,
            Matrix4::identity(),
        )
        .unwrap();
        let opt = OpticalAttributable::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(-1.2..1.2),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            1.0,
            Matrix4::identity(),
        )
        .unwrap();
        let rc = radar_coefficients(&rad, &ObserverState::new(rv(rng, 1.0), rv(rng, 1.0), 0.0)).unwrap();
        let oc = compute_optical_coefficients(&opt, &ObserverState::new(rv(rng, 1.0), rv(rng, 1.0), 1.0)).unwrap();
        (rc, oc)
    }

    #[test]
    fn coefficients_reproduce_angular_momentum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let (rc, _) = random_pair(&mut rng);
            let (xi, zeta) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let direct = rc.r.cross(&rc.velocity(xi, zeta));
            assert!((rc.angular_momentum(xi, zeta) - direct).norm() <= 1e-12 * direct.norm().max(1.0));
            assert!(rc.a.dot(&rc.r).abs() < 1e-14 * rc.r.norm_squared().max(1.0));
            assert!(rc.b.dot(&rc.r).abs() < 1e-14 * rc.r.norm_squared().max(1.0));
        }
    }

    #[test]
    fn central_observer_at_rest() {
        let rad = RadarAttributable::new(0.2, 0.3, 1.5, 0.1, 0.0, Matrix4::identity()).unwrap();
        let rc = radar_coefficients(&rad, &ObserverState::new(Vec3::zeros(), Vec3::zeros(), 0.0)).unwrap();
        assert_eq!(rc.c, Vec3::zeros());
    }

    #[test]
    fn elimination_back_substitutes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let (rc, oc) = random_pair(&mut rng);
            let el = eliminate_linear(&rc, &oc).unwrap();
            let y = rng.random_range(0.1..3.0);
            let (xi, zeta, rd2) = el.at(y);
            let lhs = rc.angular_momentum(xi, zeta);
            let rhs = oc.angular_momentum(y, rd2);
            assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(rhs.norm()).max(1.0));
        }
    }

    #[test]
    fn elimination_signs_and_homogeneous_case() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let (rc, mut oc) = random_pair(&mut rng);
        let el = eliminate_linear(&rc, &oc).unwrap();
        let gamma = 1.0 / rc.a.dot(&rc.b.cross(&oc.d));
        assert_eq!(el.x[2], gamma * oc.e.dot(&rc.b.cross(&oc.d)));
        assert_eq!(el.z[2], -gamma * oc.e.dot(&rc.a.cross(&oc.d)));
        oc.e = Vec3::zeros();
        oc.f = Vec3::zeros();
        oc.g = rc.c;
        let el = eliminate_linear(&rc, &oc).unwrap();
        assert!(el.x.iter().chain(el.z.iter()).chain(el.r.iter()).all(|&c| c == 0.0));
    }

    #[test]
    fn degeneracy_identity_and_flag() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(24);
        for _ in 0..200 {
            let (rc, oc) = random_pair(&mut rng);
            let lhs = rc.a.dot(&rc.b.cross(&oc.d));
            let rhs = rc.r.dot(&rc.basis.e_rho) * rc.r.dot(&oc.d);
            assert!((lhs - rhs).abs() <= 1e-12 * rc.r.norm_squared() * oc.d.norm());
        }
        // r1 parallel to r2 makes r1 . D2 vanish
        let (rc, _) = random_pair(&mut rng);
        let b2 = ObservationBasis::new(0.4, -0.2).unwrap();
        let q2 = rc.r - b2.e_rho * 0.7;
        let opt = OpticalAttributable::new(0.4, -0.2, 0.01, 0.02, 1.0, Matrix4::identity()).unwrap();
        let oc = compute_optical_coefficients(&opt, &ObserverState::new(q2, Vec3::y(), 1.0)).unwrap();
        assert!(detect_degenerate_radar(&rc, &oc).contains(&DegeneracyFlag::RadarLinearSystem));
    }

    #[test]
    fn quartic_degree_and_direct_evaluation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(25);
        for _ in 0..100 {
            let (rc, oc) = random_pair(&mut rng);
            let mu = rng.random_range(0.5..2.0);
            let p = build_quartic(&rc, &oc, mu).unwrap();
            assert!(p.degree() <= 4);
            let el = eliminate_linear(&rc, &oc).unwrap();
            let v = projection_vector(&oc);
            for _ in 0..10 {
                let y = rng.random_range(0.1..3.0);
                let (xi, zeta, rd2) = el.at(y);
                let l1 = laplace_lenz(&rc.r, &rc.velocity(xi, zeta), mu).unwrap();
                let l2 = laplace_lenz(&oc.position(y), &oc.velocity(y, rd2), mu).unwrap();
                let direct = mu * (l1 - l2).dot(&v);
                assert!((p.eval(y) - direct).abs() <= 1e-10 * p.eval_abs(y).max(1e-300));
            }
        }
    }

    #[test]
    fn r2dot_v_does_not_depend_on_rhodot2() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(26);
        let (_, oc) = random_pair(&mut rng);
        let v = projection_vector(&oc);
        let a = oc.velocity(0.8, -0.3).dot(&v);
        let b = oc.velocity(0.8, 2.7).dot(&v);
        assert!((a - b).abs() < 1e-14);
    }

    fn sorted(mut r: Vec<Complex64>) -> Vec<Complex64> {
        r.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        r
    }

    #[test]
    fn simple_quartics() {
        let r = sorted(solve_quartic(&UnivariatePoly::new(vec![-1.0, 0.0, 0.0, 0.0, 1.0])).unwrap());
        let expect = [Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0)];
        for (a, b) in r.iter().zip(expect.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
        // (x - 2)^2 (x^2 + 1) = x^4 - 4x^3 + 5x^2 - 4x + 4
        let r = solve_quartic(&UnivariatePoly::new(vec![4.0, -4.0, 5.0, -4.0, 1.0])).unwrap();
        assert_eq!(r.len(), 4);
        assert_eq!(r.iter().filter(|z| (*z - Complex64::new(2.0, 0.0)).norm() < 1e-6).count(), 2);
        assert!(r.iter().any(|z| (z - Complex64::new(0.0, 1.0)).norm() < 1e-12));
        assert!(matches!(solve_quartic(&UnivariatePoly::constant(3.0)), Err(LinkError::NoRoots)));
        let r = solve_quartic(&UnivariatePoly::new(vec![-6.0, 11.0, -6.0, 1.0])).unwrap();
        let mut re: Vec<f64> = r.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        for (a, b) in re.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        // deflation of a vanishing leading coefficient
        let r = solve_quartic(&UnivariatePoly::new(vec![-2.0, 1.0, 0.0, 0.0, 1e-20])).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].re - 2.0).abs() < 1e-14);
    }

    pub(crate) fn match_roots(a: &[Complex64], b: &[Complex64]) -> f64 {
        let mut used = vec![false; b.len()];
        let mut worst = 0.0f64;
        for z in a {
            let (k, d) = b
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, w)| (k, (z - w).norm() / z.norm().max(1.0)))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            used[k] = true;
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn closed_form_agrees_with_aberth() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(27);
        for _ in 0..1000 {
            let roots: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mut p = UnivariatePoly::from_roots(&roots[..2]);
            // a complex pair half of the time
            if rng.random_bool(0.5) {
                let (re, im) = (rng.random_range(-2.0..2.0), rng.random_range(0.1..2.0));
                p = &p * &UnivariatePoly::new(vec![re * re + im * im, -2.0 * re, 1.0]);
            } else {
                p = &p * &UnivariatePoly::from_roots(&roots[2..]);
            }
            let p = p.scale(rng.random_range(0.5..2.0));
            // skip near-multiple roots, which are ill-posed for any method
            let c = solve_quartic(&p).unwrap();
            let min_gap = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).map(|(i, j)| (c[i] - c[j]).norm()).fold(f64::INFINITY, f64::min);
            if min_gap < 1e-2 {
                continue;
            }
            let a = aberth_roots(&p, &AberthOptions::default()).unwrap();
            assert!(match_roots(&c, &a) < 1e-10, "{c:?} vs {a:?}");
        }
    }
}

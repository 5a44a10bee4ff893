//! Simultaneous (Ehrlich-Aberth) root finding.

use num_complex::Complex64;

use super::UnivariatePoly;
use crate::error::{LinkError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AberthOptions {
    /// Relative size of the last correction at which a root is frozen.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for AberthOptions {
    fn default() -> Self {
        Self { tol: 1e-14, max_iter: 200 }
    }
}

/// Initial approximations placed on circles whose radii come from the upper
/// convex hull of `(k, ln|c_k|)` (the Newton polygon), with golden-ratio angular offsets.
fn initial_guesses(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let pts: Vec<(usize, f64)> =
        coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(k, c)| (k, c.abs().ln())).collect();
    let mut hull: Vec<(usize, f64)> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 as f64 - a.0 as f64) * (p.1 - a.1) - (b.1 - a.1) * (p.0 as f64 - a.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let golden = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut out = Vec::with_capacity(n);
    for (edge, w) in hull.windows(2).enumerate() {
        let (i, li) = w[0];
        let (k, lk) = w[1];
        let count = k - i;
        let radius = ((li - lk) / count as f64).exp();
        let offset = std::f64::consts::TAU * (golden * (edge + 1) as f64).fract() + 0.4;
        for j in 0..count {
            let theta = std::f64::consts::TAU * j as f64 / count as f64 + offset;
            out.push(Complex64::from_polar(radius, theta));
        }
    }
    out
}

/// All complex roots of `poly` by Ehrlich-Aberth iteration.
///
/// Roots at the origin (trailing zero coefficients) are returned exactly.
pub fn aberth_roots(poly: &UnivariatePoly, opts: &AberthOptions) -> Result<Vec<Complex64>> {
    let poly = UnivariatePoly::new(poly.coeffs().to_vec());
    if poly.degree() == 0 {
        return Err(LinkError::NoRoots);
    }
    let zeros_at_origin = poly.coeffs().iter().take_while(|c| **c == 0.0).count();
    let stripped = poly.coeffs()[zeros_at_origin..].to_vec();
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
    if stripped.len() == 1 {
        return Ok(roots);
    }
    let n = stripped.len() - 1;
    let p = UnivariatePoly::new(stripped);
    let dp = p.derivative();
    let abs_coeffs: Vec<f64> = p.coeffs().iter().map(|c| c.abs()).collect();
    // compensated evaluation is accurate to about eps^2 times the absolute bound
    let noise = (4.0 * (n as f64) * f64::EPSILON).powi(2);
    let eps = f64::EPSILON;

    let mut z = initial_guesses(p.coeffs());
    let mut done = vec![false; n];
    for _ in 0..opts.max_iter {
        for i in 0..n {
            if done[i] {
                continue;
            }
            let zi = z[i];
            let pz = p.eval_complex_compensated(zi);
            // stop once |p(z)| is at the roundoff level of the evaluation itself
            let az = zi.norm();
            let bound = abs_coeffs.iter().rev().fold(0.0, |acc, c| acc * az + c);
            if pz.norm() <= noise * bound {
                done[i] = true;
                continue;
            }
            let ratio = pz / dp.eval_complex(zi);
            let sum: Complex64 = (0..n).filter(|&j| j != i).map(|j| (zi - z[j]).inv()).sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if !step.is_finite() {
                z[i] = zi + Complex64::new(eps.sqrt(), eps.sqrt()) * (1.0 + az);
                continue;
            }
            z[i] = zi - step;
            if step.norm() <= opts.tol * z[i].norm() {
                done[i] = true;
            }
        }
        if done.iter().all(|d| *d) {
            roots.extend(z);
            return Ok(roots);
        }
    }
    let unconverged: Vec<usize> = (0..n).filter(|&i| !done[i]).map(|i| i + zeros_at_origin).collect();
    roots.extend(z);
    Err(LinkError::RootsNotConverged { roots, unconverged })
}

/// Real parts of roots with `|Im| < real_tol * max(1, |Re|)` and `Re > 0`, sorted,
/// with values within `1e-9` relative merged.
pub fn real_positive_roots(roots: &[Complex64], real_tol: f64) -> Vec<f64> {
    let mut vals: Vec<f64> = roots
        .iter()
        .filter(|z| z.re > 0.0 && z.im.abs() < real_tol * z.re.abs().max(1.0))
        .map(|z| z.re)
        .collect();
    vals.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(vals.len());
    for v in vals {
        match out.last() {
            Some(&last) if (v - last).abs() <= 1e-9 * v.abs().max(last.abs()) => {}
            _ => out.push(v),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn sorted_re(mut r: Vec<Complex64>) -> Vec<Complex64> {
        r.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        r
    }

    #[test]
    fn imaginary_pair() {
        let r = sorted_re(aberth_roots(&UnivariatePoly::new(vec![1.0, 0.0, 1.0]), &AberthOptions::default()).unwrap());
        assert!((r[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn small_integer_roots() {
        let p = UnivariatePoly::from_roots(&[1.0, 2.0, 3.0]);
        let r = sorted_re(aberth_roots(&p, &AberthOptions::default()).unwrap());
        for (z, e) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((z - Complex64::new(e, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_roots_are_exact() {
        let p = UnivariatePoly::new(vec![0.0, 0.0, -2.0, 1.0]);
        let r = sorted_re(aberth_roots(&p, &AberthOptions::default()).unwrap());
        assert_eq!(r[0], Complex64::new(0.0, 0.0));
        assert_eq!(r[1], Complex64::new(0.0, 0.0));
        assert!((r[2].re - 2.0).abs() < 1e-14);
    }

    #[test]
    fn constant_has_no_roots() {
        assert!(matches!(aberth_roots(&UnivariatePoly::constant(3.0), &AberthOptions::default()), Err(LinkError::NoRoots)));
    }

    #[test]
    fn iteration_budget_is_reported() {
        let p = UnivariatePoly::from_roots(&[0.1, 0.7, 1.3, 2.9, 5.0, 7.0]);
        match aberth_roots(&p, &AberthOptions { tol: 1e-14, max_iter: 1 }) {
            Err(LinkError::RootsNotConverged { roots, unconverged }) => {
                assert_eq!(roots.len(), 6);
                assert!(!unconverged.is_empty());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn degree_twenty_with_known_roots() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            // ten real roots and five conjugate pairs, moduli in [0.2, 3], pairwise separated
            let mut truth: Vec<Complex64> = Vec::new();
            let separated = |t: &[Complex64], z: Complex64| t.iter().all(|w| (w - z).norm() > 0.25);
            while truth.len() < 10 {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let z = Complex64::new(sign * rng.random_range(0.2..3.0), 0.0);
                if separated(&truth, z) {
                    truth.push(z);
                }
            }
            let mut p = UnivariatePoly::from_roots(&truth.iter().map(|z| z.re).collect::<Vec<_>>());
            while truth.len() < 20 {
                let z = Complex64::from_polar(rng.random_range(0.2..3.0), rng.random_range(0.2..3.0));
                if !separated(&truth, z) || z.im.abs() < 0.15 {
                    continue;
                }
                p = &p * &UnivariatePoly::new(vec![z.norm_sqr(), -2.0 * z.re, 1.0]);
                truth.push(z);
                truth.push(z.conj());
            }
            let found = aberth_roots(&p, &AberthOptions::default()).unwrap();
            assert_eq!(found.len(), 20);
            for t in &truth {
                let best = found.iter().map(|f| (f - t).norm()).fold(f64::INFINITY, f64::min);
                // well separated roots: each truth is recovered to near machine precision
                assert!(best <= 1e-9 * t.norm().max(1.0), "root {t} missed by {best}");
            }
            // reconstruction of the monic polynomial
            let lead = p.coeff(20);
            let mut prod = vec![Complex64::new(1.0, 0.0)];
            for r in &found {
                let mut next = vec![Complex64::new(0.0, 0.0); prod.len() + 1];
                for (k, c) in prod.iter().enumerate() {
                    next[k + 1] += c;
                    next[k] -= c * r;
                }
                prod = next;
            }
            let scale = p.max_abs_coeff() / lead.abs();
            for (k, c) in prod.iter().enumerate() {
                assert!((c - p.coeff(k) / lead).norm() <= 1e-8 * scale);
            }
        }
    }

    #[test]
    fn positive_real_filter() {
        let r = [Complex64::new(1.0, 0.0), Complex64::new(-2.0, 0.0), Complex64::new(3.0, 4.0)];
        assert_eq!(real_positive_roots(&r, 1e-8), vec![1.0]);
        let r = [Complex64::new(2.0, 1e-12), Complex64::new(2.0, -1e-12)];
        assert_eq!(real_positive_roots(&r, 1e-8), vec![2.0]);
        let r = [
            Complex64::new(0.78987, 0.0),
            Complex64::new(1.13777, 0.0),
            Complex64::new(0.3, 0.2),
            Complex64::new(0.3, -0.2),
            Complex64::new(-1.0, 0.5),
        ];
        assert_eq!(real_positive_roots(&r, 1e-8), vec![0.78987, 1.13777]);
        assert!(real_positive_roots(&[], 1e-8).is_empty());
    }
}

//! Sylvester resultants computed by evaluation at scaled roots of unity
//! followed by FFT interpolation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{BivariatePoly, UnivariatePoly};
use crate::error::{LinkError, Result};

/// Node count over the smallest admissible power of two when none is requested; the
/// extra nodes average down the roundoff of the node determinants.
pub const OVERSAMPLE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultantOptions {
    /// Number of interpolation nodes; `OVERSAMPLE` times the degree-bound minimum when `None`.
    pub n_points: Option<usize>,
    /// Initial radius of the node circle.
    pub radius: f64,
    /// Allowed imaginary residue relative to the largest recovered coefficient.
    pub imag_tol: f64,
    /// Allowed magnitude of coefficients above the degree bound, relative.
    pub tail_tol: f64,
}

impl Default for ResultantOptions {
    fn default() -> Self {
        Self { n_points: None, radius: 1.0, imag_tol: 1e-9, tail_tol: 1e-9 }
    }
}

/// Sylvester matrix of `sum a_j y^j` (degree m) and `sum b_j y^j` (degree n), size `m + n`.
///
/// The first `n` columns hold shifted copies of `a_m .. a_0`, the last `m`
/// columns shifted copies of `b_n .. b_0`, each starting on the diagonal.
pub fn sylvester_matrix(a: &[UnivariatePoly], b: &[UnivariatePoly]) -> Vec<Vec<UnivariatePoly>> {
    let m = a.len() - 1;
    let n = b.len() - 1;
    let size = m + n;
    let mut s = vec![vec![UnivariatePoly::zero(); size]; size];
    for col in 0..n {
        for k in 0..=m {
            s[col + k][col] = a[m - k].clone();
        }
    }
    for col in 0..m {
        for k in 0..=n {
            s[col + k][n + col] = b[n - k].clone();
        }
    }
    s
}

/// Coefficients of `det S(x)` from its values at `n_points` roots of unity.
///
/// Returns all `n_points` coefficients; the caller is responsible for choosing
/// `n_points` above the degree of the determinant.
pub fn fft_evaluation_interpolation(entries: &[Vec<UnivariatePoly>], n_points: usize) -> Result<UnivariatePoly> {
    determinant_by_interpolation(entries, n_points, 1.0, ResultantOptions::default().imag_tol)
}

/// As [`fft_evaluation_interpolation`], with the nodes on a circle of the given radius.
pub fn determinant_by_interpolation(
    entries: &[Vec<UnivariatePoly>],
    n_points: usize,
    radius: f64,
    imag_tol: f64,
) -> Result<UnivariatePoly> {
    let coeffs = interpolate_scaled(entries, n_points, radius)?;
    let scaled_max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let imag = coeffs.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    if imag > imag_tol * scaled_max {
        return Err(LinkError::Conditioning(format!(
            "imaginary residue {:.3e} exceeds {:.1e} of max coefficient",
            imag / scaled_max,
            imag_tol
        )));
    }
    Ok(unscale(&coeffs, radius))
}

fn unscale(coeffs: &[Complex64], radius: f64) -> UnivariatePoly {
    let mut rpow = 1.0;
    let mut out = Vec::with_capacity(coeffs.len());
    for c in coeffs {
        out.push(c.re / rpow);
        rpow *= radius;
    }
    UnivariatePoly::new(out)
}

/// Complex coefficients of `det S(radius * x)`.
fn interpolate_scaled(entries: &[Vec<UnivariatePoly>], n_points: usize, radius: f64) -> Result<Vec<Complex64>> {
    if n_points < 2 || !n_points.is_power_of_two() {
        return Err(LinkError::Domain(format!("number of FFT points must be a power of two, got {n_points}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(LinkError::Domain(format!("node radius must be positive, got {radius}")));
    }
    let size = entries.len();
    if size == 0 || entries.iter().any(|row| row.len() != size) {
        return Err(LinkError::Domain("determinant needs a non-empty square matrix".into()));
    }
    let mut values: Vec<Complex64> = (0..n_points)
        .map(|k| {
            let z = Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / n_points as f64);
            let m = DMatrix::from_fn(size, size, |i, j| entries[i][j].eval_complex(z));
            m.lu().determinant()
        })
        .collect();
    if values.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return Err(LinkError::IdenticallyZero);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(LinkError::Conditioning("non-finite determinant value".into()));
    }
    // values[k] = sum_j c_j w^(jk) with w = exp(2 pi i / N): a forward DFT recovers N c_j.
    FftPlanner::<f64>::new().plan_fft_forward(n_points).process(&mut values);
    let inv = 1.0 / n_points as f64;
    Ok(values.into_iter().map(|v| v * inv).collect())
}

fn column_degree_bound(entries: &[Vec<UnivariatePoly>]) -> usize {
    let size = entries.len();
    (0..size)
        .map(|j| entries.iter().filter(|row| !row[j].is_zero()).map(|row| row[j].degree()).max().unwrap_or(0))
        .sum()
}

/// Upper bound on the degree in `x` of `Res_y(p, q)`: the smaller of the
/// Sylvester column bound and the product of total degrees.
pub fn resultant_degree_bound(p: &BivariatePoly, q: &BivariatePoly) -> usize {
    let a = p.coeffs_in_second_var();
    let b = q.coeffs_in_second_var();
    let cols = column_degree_bound(&sylvester_matrix(&a, &b));
    cols.min(p.total_degree(0.0) * q.total_degree(0.0))
}

/// Resultant of `p` and `q` with respect to their second variable.
pub fn sylvester_resultant(p: &BivariatePoly, q: &BivariatePoly, opts: &ResultantOptions) -> Result<UnivariatePoly> {
    let mut a = p.coeffs_in_second_var();
    let mut b = q.coeffs_in_second_var();
    let lead_a = a.last().is_some_and(UnivariatePoly::is_zero);
    let lead_b = b.last().is_some_and(UnivariatePoly::is_zero);
    if lead_a && lead_b {
        return Err(LinkError::DegeneratePencil);
    }
    while a.len() > 1 && a.last().is_some_and(UnivariatePoly::is_zero) {
        a.pop();
    }
    while b.len() > 1 && b.last().is_some_and(UnivariatePoly::is_zero) {
        b.pop();
    }
    if a.len() == 1 && b.len() == 1 {
        return Err(LinkError::DegeneratePencil);
    }
    let matrix = sylvester_matrix(&a, &b);
    let bound = column_degree_bound(&matrix).min(p.total_degree(0.0) * q.total_degree(0.0));
    let n_points = opts.n_points.unwrap_or_else(|| OVERSAMPLE * (bound + 1).next_power_of_two().max(8));
    if n_points <= bound {
        return Err(LinkError::Domain(format!("{n_points} FFT points cannot resolve degree {bound}")));
    }

    // Probe at the requested radius, then move the nodes toward the geometric-mean
    // modulus of the roots until the estimate settles within a factor of two.
    let mut radius = opts.radius;
    let mut last_err = None;
    let mut last_clean = None;
    for _ in 0..6 {
        let coeffs = interpolate_scaled(&matrix, n_points, radius)?;
        let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let imag = coeffs.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        let tail = coeffs[bound + 1..].iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let clean = imag <= opts.imag_tol * max && tail <= opts.tail_tol * max;
        let next = root_modulus_estimate(&coeffs[..=bound], max).map(|g| radius * g);
        let settled = next.is_none_or(|r| (0.5..=2.0).contains(&(r / radius)));
        if clean && settled {
            return Ok(combine_radii(&matrix, n_points, bound, radius, opts));
        }
        if clean {
            last_clean = Some(radius);
        } else {
            last_err = Some(LinkError::Conditioning(format!(
                "resultant interpolation at radius {radius:.3e}: imaginary {:.2e}, tail {:.2e}",
                imag / max,
                tail / max
            )));
        }
        match next {
            Some(r) if r.is_finite() && r > 0.0 => radius = r,
            _ => break,
        }
    }
    if let Some(r) = last_clean {
        return Ok(combine_radii(&matrix, n_points, bound, r, opts));
    }
    Err(last_err.unwrap_or_else(|| LinkError::Conditioning("resultant interpolation failed".into())))
}

/// Interpolation on radius `r` leaves coefficient `k` with an absolute error of about
/// `eps * max_i |c_i r^i| / r^k`. Repeats the interpolation on circles around `radius` and
/// takes each coefficient from the circle where that estimate is smallest.
fn combine_radii(matrix: &[Vec<UnivariatePoly>], n_points: usize, bound: usize, radius: f64, opts: &ResultantOptions) -> UnivariatePoly {
    let mut best = vec![(f64::INFINITY, 0.0); bound + 1];
    for j in -2i32..=2 {
        let r = radius * 4f64.powi(j);
        let Ok(coeffs) = interpolate_scaled(matrix, n_points, r) else { continue };
        let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let imag = coeffs.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        let tail = coeffs[bound + 1..].iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if !(max > 0.0 && max.is_finite()) || imag > opts.imag_tol * max || tail > opts.tail_tol * max {
            continue;
        }
        let mut rpow = 1.0f64;
        for (k, slot) in best.iter_mut().enumerate() {
            if !(rpow > 0.0 && rpow.is_finite()) {
                break;
            }
            let err = max / rpow;
            if err < slot.0 {
                *slot = (err, coeffs[k].re / rpow);
            }
            rpow *= r;
        }
    }
    UnivariatePoly::new(best.into_iter().map(|b| b.1).collect())
}

/// `(|c_lo| / |c_hi|)^(1 / (hi - lo))` over the extreme coefficients above `1e-10 * max`.
fn root_modulus_estimate(coeffs: &[Complex64], max: f64) -> Option<f64> {
    let sig = |k: &usize| coeffs[*k].norm() > 1e-10 * max;
    let lo = (0..coeffs.len()).find(sig)?;
    let hi = (0..coeffs.len()).rev().find(sig)?;
    (hi > lo).then(|| (coeffs[lo].norm() / coeffs[hi].norm()).powf(1.0 / (hi - lo) as f64))
}

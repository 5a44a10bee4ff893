//! Attribution of the second attributable to each linkage solution through the
//! identification penalty `chi4`.

use nalgebra::{Matrix4, Matrix6, SMatrix, Vector4};
use serde::{Deserialize, Serialize};

use crate::attributable::{ObserverState, OpticalAttributable};
use crate::error::{LinkError, Result};
use crate::frames::{attributable_to_cartesian_jacobian, wrap_difference, AttributableCoords};
use crate::kepler::{advance_elements, keplerian_to_cartesian, keplerian_to_cartesian_jacobian, propagation_jacobian, KeplerianElements};
use crate::solution::LinkageSolution;
use crate::units::Physics;

/// Condition number beyond which covariances are regularized before inversion.
pub const REGULARIZE_COND: f64 = 1e12;

/// Optical attributable predicted from an orbit, with its covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedAttributable {
    /// `(alpha, delta, alphadot, deltadot)`.
    pub values: Vector4<f64>,
    pub cov: Matrix4<f64>,
    pub tbar: f64,
    /// Light-time corrected epoch of the predicted body state.
    pub t_emit: f64,
}

/// Propagates `elements` with covariance `gamma1` to the observation at `tbar`
/// and extracts the attributable seen from `obs`.
///
/// The covariance map ignores the dependence of the light time on the orbit.
pub fn predict_attributable(
    elements: &KeplerianElements,
    gamma1: &Matrix6<f64>,
    obs: &ObserverState,
    tbar: f64,
    phys: &Physics,
) -> Result<PredictedAttributable> {
    if !(elements.e < 1.0 && elements.a > 0.0) {
        return Err(LinkError::UnsupportedOrbit { e: elements.e });
    }
    let mut t = tbar;
    let mut el = advance_elements(elements, t, phys)?;
    for _ in 0..20 {
        let s = keplerian_to_cartesian(&el, phys.mu)?;
        let next = phys.aberration_correct(tbar, (s.r - obs.q).norm());
        let done = (next - t).abs() <= 1e-15 * tbar.abs().max(1.0);
        t = next;
        el = advance_elements(elements, t, phys)?;
        if done {
            break;
        }
    }
    let s = keplerian_to_cartesian(&el, phys.mu)?;
    let coords = AttributableCoords::from_cartesian(&s.r, &s.rdot, &obs.q, &obs.qdot)?;
    let to_att = attributable_to_cartesian_jacobian(&coords)?
        .try_inverse()
        .ok_or_else(|| LinkError::Conditioning("attributable Jacobian is singular".into()))?;
    let full = to_att * keplerian_to_cartesian_jacobian(&el, phys.mu)? * propagation_jacobian(elements, t, phys)?;
    let m: SMatrix<f64, 4, 6> = full.fixed_view::<4, 6>(0, 0).into_owned();
    let cov = m * gamma1 * m.transpose();
    Ok(PredictedAttributable {
        values: Vector4::new(coords.alpha, coords.delta, coords.alphadot, coords.deltadot),
        cov: (cov + cov.transpose()) * 0.5,
        tbar,
        t_emit: t,
    })
}

/// Inverse of a symmetric matrix, with eigenvalues floored at `max / REGULARIZE_COND`.
fn regularized_inverse(m: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    let eig = m.symmetric_eigen();
    let max = eig.eigenvalues.max();
    if !(max > 0.0) || !max.is_finite() {
        return Err(LinkError::SelectionUnavailable("covariance is not positive definite".into()));
    }
    let floor = max / REGULARIZE_COND;
    let inv_diag = eig.eigenvalues.map(|l| 1.0 / l.max(floor));
    Ok(eig.eigenvectors * Matrix4::from_diagonal(&inv_diag) * eig.eigenvectors.transpose())
}

/// `chi4 = d^T [C_p - C_p Gamma_0 C_p] d` with `d = A2 - A_p`, `C_p = Gamma_p^-1`,
/// `Gamma_0 = (C_p + C_2)^-1`.
pub fn identification_penalty(a2: &Vector4<f64>, gamma_a2: &Matrix4<f64>, pred: &PredictedAttributable) -> Result<f64> {
    let mut d = a2 - pred.values;
    d[0] = wrap_difference(d[0]);
    // common diagonal rescaling; the penalty is invariant under it
    let s = Vector4::from_fn(|i, _| {
        let v = (gamma_a2[(i, i)] + pred.cov[(i, i)]).sqrt();
        if v > 0.0 {
            1.0 / v
        } else {
            1.0
        }
    });
    let sm = Matrix4::from_diagonal(&s);
    let c_p = regularized_inverse(&(sm * pred.cov * sm))?;
    let c_2 = regularized_inverse(&(sm * gamma_a2 * sm))?;
    let gamma0 = regularized_inverse(&(c_p + c_2))?;
    let ds = sm * d;
    let k = c_p - c_p * gamma0 * c_p;
    Ok((ds.transpose() * k * ds)[0].max(0.0))
}

/// Attaches `chi4` and the acceptance flag to every solution. Solutions without
/// elliptic elements or element covariance are marked as not accepted and keep `chi4` unset.
pub fn annotate_solutions(
    solutions: &mut [LinkageSolution],
    att2: &OpticalAttributable,
    obs2: &ObserverState,
    threshold: f64,
    phys: &Physics,
) {
    for sol in solutions.iter_mut() {
        let chi4 = chi4_for(sol, att2, obs2, phys).ok();
        sol.chi4 = chi4;
        sol.accepted = Some(chi4.is_some_and(|c| c <= threshold));
    }
}

/// `chi4` of one solution against the second attributable.
pub fn chi4_for(sol: &LinkageSolution, att2: &OpticalAttributable, obs2: &ObserverState, phys: &Physics) -> Result<f64> {
    let el = sol.elements1.as_ref().ok_or_else(|| LinkError::SelectionUnavailable("solution is not elliptic".into()))?;
    let gamma1 = sol
        .covariance
        .as_ref()
        .and_then(|c| c.elements1.as_ref())
        .and_then(|c| c.to_static::<6>())
        .ok_or_else(|| LinkError::SelectionUnavailable("solution carries no element covariance".into()))?;
    let pred = predict_attributable(el, &gamma1, obs2, att2.tbar, phys)?;
    identification_penalty(&att2.values(), &att2.cov, &pred)
}

/// Annotated copies of the solutions with `chi4 <= threshold`.
pub fn select_solutions(
    solutions: &[LinkageSolution],
    att2: &OpticalAttributable,
    obs2: &ObserverState,
    threshold: f64,
    phys: &Physics,
) -> Vec<LinkageSolution> {
    let mut out = solutions.to_vec();
    annotate_solutions(&mut out, att2, obs2, threshold, phys);
    out.retain(|s| s.accepted == Some(true));
    out
}

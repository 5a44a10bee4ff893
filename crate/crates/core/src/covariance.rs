//! Covariance of linkage solutions through the implicit function theorem.

use nalgebra::{Matrix4, Matrix6, SMatrix, Vector4};
use serde::{Deserialize, Serialize};

use crate::attributable::ObserverState;
use crate::error::{LinkError, Result};
use crate::frames::{attributable_to_cartesian_jacobian, hat_map, AttributableCoords, Vec3};
use crate::kepler::{cartesian_to_keplerian, cartesian_to_keplerian_jacobian, CartesianState};
use crate::solution::{CoordSet, CovarianceMatrix, SolutionCovariance};
use crate::units::Physics;

pub type Matrix4x12 = SMatrix<f64, 4, 12>;
pub type Matrix4x8 = SMatrix<f64, 4, 8>;
pub type Matrix8 = SMatrix<f64, 8, 8>;
pub type Matrix12x8 = SMatrix<f64, 12, 8>;

/// Which attributable pair produced a solution; fixes the split of the twelve
/// attributable coordinates into data `A` and unknowns `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkVariant {
    Optical,
    RadarOptical,
}

impl LinkVariant {
    /// Indices of `Y` in `(alpha1, delta1, alphadot1, deltadot1, rho1, rhodot1, alpha2, ...)`.
    pub fn unknown_indices(self) -> [usize; 4] {
        match self {
            LinkVariant::Optical => [4, 5, 10, 11],
            LinkVariant::RadarOptical => [2, 3, 10, 11],
        }
    }

    /// Indices of `A`, in the order of the stacked attributable values.
    pub fn data_indices(self) -> [usize; 8] {
        match self {
            LinkVariant::Optical => [0, 1, 2, 3, 6, 7, 8, 9],
            LinkVariant::RadarOptical => [0, 1, 4, 5, 6, 7, 8, 9],
        }
    }
}

/// `Psi(E_car) = (c1 - c2, mu (L1 - L2) . w)` with `w = r2 x q2`.
///
/// `w` is orthogonal to `r2`, so the last component equals `mu L1 . w + (r2'.r2)(r2'.w)`.
pub fn psi(s1: (&Vec3, &Vec3), s2: (&Vec3, &Vec3), q2: &Vec3, mu: f64) -> Result<Vector4<f64>> {
    let ((r1, v1), (r2, v2)) = (s1, s2);
    let n1 = r1.norm();
    if !(n1 > 0.0) {
        return Err(LinkError::ZeroRadius);
    }
    let dc = r1.cross(v1) - r2.cross(v2);
    let w = r2.cross(q2);
    let mu_l1 = r1 * (v1.norm_squared() - mu / n1) - v1 * v1.dot(r1);
    let last = mu_l1.dot(&w) + v2.dot(r2) * v2.dot(&w);
    Ok(Vector4::new(dc.x, dc.y, dc.z, last))
}

/// Analytic `dPsi / d(r1, r1', r2, r2')`.
pub fn psi_jacobian(s1: (&Vec3, &Vec3), s2: (&Vec3, &Vec3), q2: &Vec3, mu: f64) -> Result<Matrix4x12> {
    let ((r1, v1), (r2, v2)) = (s1, s2);
    let n1 = r1.norm();
    if !(n1 > 0.0) {
        return Err(LinkError::ZeroRadius);
    }
    let mut j = Matrix4x12::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&-hat_map(v1));
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&hat_map(r1));
    j.fixed_view_mut::<3, 3>(0, 6).copy_from(&hat_map(v2));
    j.fixed_view_mut::<3, 3>(0, 9).copy_from(&-hat_map(r2));

    let w = r2.cross(q2);
    let k = v1.norm_squared() - mu / n1;
    let (r1w, v1w, v1r1) = (r1.dot(&w), v1.dot(&w), v1.dot(r1));
    let (v2w, v2r2) = (v2.dot(&w), v2.dot(r2));
    let d_r1 = w * k + r1 * (mu * r1w / n1.powi(3)) - v1 * v1w;
    let d_v1 = v1 * (2.0 * r1w) - r1 * v1w - w * v1r1;
    let d_r2 = q2.cross(r1) * k - q2.cross(v1) * v1r1 + v2 * v2w + q2.cross(v2) * v2r2;
    let d_v2 = r2 * v2w + w * v2r2;
    for (block, d) in [d_r1, d_v1, d_r2, d_v2].iter().enumerate() {
        j.fixed_view_mut::<1, 3>(3, 3 * block).copy_from(&d.transpose());
    }
    Ok(j)
}

/// Derivatives of the unknowns with respect to the data at a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitJacobian {
    pub variant: LinkVariant,
    /// `dY / dA = -(dPhi/dY)^-1 dPhi/dA`.
    pub dy_da: Matrix4x8,
    /// `d(r, r') / d E_att` at each epoch.
    pub t1: Matrix6<f64>,
    pub t2: Matrix6<f64>,
    /// Condition number of the equilibrated `dPhi/dY`.
    pub condition: f64,
    pub ill_conditioned: bool,
}

/// 2-norm condition number after scaling rows and columns to unit maximum, so that
/// mixed physical units do not inflate it.
fn equilibrated_condition(m: &Matrix4<f64>) -> f64 {
    let mut a = *m;
    for mut row in a.row_iter_mut() {
        let s = row.amax();
        if s > 0.0 {
            row /= s;
        }
    }
    for mut col in a.column_iter_mut() {
        let s = col.amax();
        if s > 0.0 {
            col /= s;
        }
    }
    let sv = a.singular_values();
    let min = sv.min();
    if min > 0.0 {
        sv.max() / min
    } else {
        f64::INFINITY
    }
}

pub fn implicit_solution_jacobian(
    variant: LinkVariant,
    coords1: &AttributableCoords,
    coords2: &AttributableCoords,
    obs1: &ObserverState,
    obs2: &ObserverState,
    mu: f64,
    cond_threshold: f64,
) -> Result<ImplicitJacobian> {
    let (r1, v1) = coords1.to_cartesian(&obs1.q, &obs1.qdot)?;
    let (r2, v2) = coords2.to_cartesian(&obs2.q, &obs2.qdot)?;
    let dpsi = psi_jacobian((&r1, &v1), (&r2, &v2), &obs2.q, mu)?;
    let t1 = attributable_to_cartesian_jacobian(coords1)?;
    let t2 = attributable_to_cartesian_jacobian(coords2)?;
    let mut t = SMatrix::<f64, 12, 12>::zeros();
    t.fixed_view_mut::<6, 6>(0, 0).copy_from(&t1);
    t.fixed_view_mut::<6, 6>(6, 6).copy_from(&t2);
    let dphi = dpsi * t;

    let yi = variant.unknown_indices();
    let ai = variant.data_indices();
    let dphi_dy = Matrix4::from_fn(|i, k| dphi[(i, yi[k])]);
    let dphi_da = Matrix4x8::from_fn(|i, k| dphi[(i, ai[k])]);

    let condition = equilibrated_condition(&dphi_dy);
    let lu = dphi_dy.lu();
    let inv = lu.try_inverse().filter(|_| condition.is_finite()).ok_or_else(|| {
        LinkError::Conditioning("Jacobian of the linkage map with respect to the unknowns is singular".into())
    })?;
    Ok(ImplicitJacobian {
        variant,
        dy_da: -(inv * dphi_da),
        t1,
        t2,
        condition,
        ill_conditioned: condition > cond_threshold,
    })
}

/// `dE_att / dA` for the twelve stacked attributable coordinates: identity on the
/// data rows, `dY/dA` on the unknown rows.
pub fn attributable_pair_jacobian(jac: &ImplicitJacobian) -> Matrix12x8 {
    let mut m = Matrix12x8::zeros();
    for (k, &i) in jac.variant.data_indices().iter().enumerate() {
        m[(i, k)] = 1.0;
    }
    for (k, &i) in jac.variant.unknown_indices().iter().enumerate() {
        m.row_mut(i).copy_from(&jac.dy_da.row(k));
    }
    m
}

/// `d(r, r')_i / dA` at epoch `i` (0 or 1).
pub fn cartesian_jacobian(jac: &ImplicitJacobian, epoch_index: usize) -> SMatrix<f64, 6, 8> {
    let att = attributable_pair_jacobian(jac);
    let (t, offset) = if epoch_index == 0 { (&jac.t1, 0) } else { (&jac.t2, 6) };
    t * att.fixed_view::<6, 8>(offset, 0)
}

fn symmetrize<const N: usize>(m: SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (m + m.transpose()) * 0.5
}

/// `Gamma_car^(i) = (dE_car^(i)/dA) Gamma_A (dE_car^(i)/dA)^T`.
pub fn cartesian_covariance(jac: &ImplicitJacobian, gamma_a: &Matrix8, epoch_index: usize) -> Matrix6<f64> {
    let j = cartesian_jacobian(jac, epoch_index);
    symmetrize(j * gamma_a * j.transpose())
}

/// Covariance of the unknowns `Y`.
pub fn unknowns_covariance(jac: &ImplicitJacobian, gamma_a: &Matrix8) -> Matrix4<f64> {
    symmetrize(jac.dy_da * gamma_a * jac.dy_da.transpose())
}

/// Block-diagonal `Gamma_A` from the two attributable covariances.
pub fn block_diagonal(cov1: &Matrix4<f64>, cov2: &Matrix4<f64>) -> Matrix8 {
    let mut g = Matrix8::zeros();
    g.fixed_view_mut::<4, 4>(0, 0).copy_from(cov1);
    g.fixed_view_mut::<4, 4>(4, 4).copy_from(cov2);
    g
}

/// All covariances of a solution: unknowns, Cartesian states at both epochs and,
/// for elliptic orbits, elements at the first epoch.
#[allow(clippy::too_many_arguments)]
pub fn solution_covariance(
    variant: LinkVariant,
    coords1: &AttributableCoords,
    coords2: &AttributableCoords,
    obs1: &ObserverState,
    obs2: &ObserverState,
    cov1: &Matrix4<f64>,
    cov2: &Matrix4<f64>,
    joint: Option<&Matrix8>,
    phys: &Physics,
    cond_threshold: f64,
) -> Result<SolutionCovariance> {
    let jac = implicit_solution_jacobian(variant, coords1, coords2, obs1, obs2, phys.mu, cond_threshold)?;
    let gamma_a = joint.copied().unwrap_or_else(|| block_diagonal(cov1, cov2));
    let car1 = cartesian_covariance(&jac, &gamma_a, 0);
    let car2 = cartesian_covariance(&jac, &gamma_a, 1);

    let (r1, v1) = coords1.to_cartesian(&obs1.q, &obs1.qdot)?;
    let elements1 = cartesian_to_keplerian(&CartesianState::new(r1, v1, obs1.epoch), phys.mu)
        .and_then(|el| cartesian_to_keplerian_jacobian(&el, phys.mu))
        .ok()
        .map(|jk| CovarianceMatrix::from_static(CoordSet::Keplerian, &symmetrize(jk * car1 * jk.transpose())));

    Ok(SolutionCovariance {
        unknowns: CovarianceMatrix::from_static(CoordSet::Unknowns, &unknowns_covariance(&jac, &gamma_a)),
        cartesian1: CovarianceMatrix::from_static(CoordSet::Cartesian, &car1),
        cartesian2: CovarianceMatrix::from_static(CoordSet::Cartesian, &car2),
        elements1,
        condition: jac.condition,
        ill_conditioned: jac.ill_conditioned,
    })
}

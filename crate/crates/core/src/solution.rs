//! Linkage solutions and tagged covariance matrices.

use nalgebra::{DMatrix, SMatrix};
use serde::{Deserialize, Serialize};

use crate::degeneracy::DegeneracyFlag;
use crate::kepler::{CartesianState, CompatResiduals, KeplerianElements};

/// Coordinates described by a covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordSet {
    /// Two attributables stacked, 8 components.
    AttributablePair,
    /// One attributable, 4 components.
    Attributable,
    /// The four linkage unknowns.
    Unknowns,
    Cartesian,
    Keplerian,
}

/// Symmetric covariance matrix stored row-major and tagged by coordinate set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    pub coords: CoordSet,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl CovarianceMatrix {
    pub fn from_dmatrix(coords: CoordSet, m: &DMatrix<f64>) -> Self {
        let sym = (m + m.transpose()) * 0.5;
        let dim = sym.nrows();
        let data = (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|(i, j)| sym[(i, j)]).collect();
        Self { coords, dim, data }
    }

    pub fn from_static<const N: usize>(coords: CoordSet, m: &SMatrix<f64, N, N>) -> Self {
        Self::from_dmatrix(coords, &DMatrix::from_fn(N, N, |i, j| m[(i, j)]))
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    pub fn to_static<const N: usize>(&self) -> Option<SMatrix<f64, N, N>> {
        (self.dim == N).then(|| SMatrix::<f64, N, N>::from_fn(|i, j| self.data[i * N + j]))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// Largest asymmetry relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let m = self.to_dmatrix();
        let scale = m.amax().max(f64::MIN_POSITIVE);
        (&m - m.transpose()).amax() / scale
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        self.to_dmatrix().symmetric_eigenvalues().min()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkageKind {
    Optical,
    RadarOptical,
}

/// Covariances attached to a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionCovariance {
    /// Covariance of the unknowns `Y`.
    pub unknowns: CovarianceMatrix,
    pub cartesian1: CovarianceMatrix,
    pub cartesian2: CovarianceMatrix,
    /// Element covariance at the first epoch, when the orbit is elliptic.
    pub elements1: Option<CovarianceMatrix>,
    /// Condition number of the Jacobian of the system with respect to the unknowns.
    pub condition: f64,
    pub ill_conditioned: bool,
}

/// One preliminary orbit solving the linkage equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkageSolution {
    pub kind: LinkageKind,
    pub rho1: f64,
    pub rhodot1: f64,
    pub rho2: f64,
    pub rhodot2: f64,
    /// Angular rates at the first epoch (measured for optical, solved for radar-optical).
    pub alphadot1: f64,
    pub deltadot1: f64,
    pub cartesian1: CartesianState,
    pub cartesian2: CartesianState,
    /// `None` for non-elliptic solutions.
    pub elements1: Option<KeplerianElements>,
    /// Normalized unsquared Laplace-Lenz residual `(L1 - L2) . v / |v|`.
    pub lenz_residual: f64,
    pub compat: Option<CompatResiduals>,
    pub covariance: Option<SolutionCovariance>,
    pub chi4: Option<f64>,
    pub accepted: Option<bool>,
    pub flags: Vec<DegeneracyFlag>,
}

impl LinkageSolution {
    pub fn elliptic(&self) -> bool {
        self.elements1.is_some()
    }

    /// The unknown vector `Y`: `(rho1, rhodot1, rho2, rhodot2)` or `(alphadot1, deltadot1, rho2, rhodot2)`.
    pub fn unknowns(&self) -> [f64; 4] {
        match self.kind {
            LinkageKind::Optical => [self.rho1, self.rhodot1, self.rho2, self.rhodot2],
            LinkageKind::RadarOptical => [self.alphadot1, self.deltadot1, self.rho2, self.rhodot2],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    #[test]
    fn covariance_round_trip() {
        let m = Matrix3::new(2.0, 0.5, 0.1, 0.5, 1.0, 0.0, 0.1, 0.0, 3.0);
        let c = CovarianceMatrix::from_static(CoordSet::Cartesian, &m);
        assert_eq!(c.to_static::<3>().unwrap(), m);
        assert!(c.to_static::<4>().is_none());
        assert_eq!(c.trace(), 6.0);
        assert_eq!(c.asymmetry(), 0.0);
        assert!(c.min_eigenvalue() > 0.0);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<CovarianceMatrix>(&json).unwrap(), c);
    }
}

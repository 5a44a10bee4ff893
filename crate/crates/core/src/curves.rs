//! Gridded samples of the linkage curves in the `(rho1, rho2)` plane and the
//! intersections of their zero sets with `q = 0`.

use serde::{Deserialize, Serialize};

use crate::attributable::{ObserverState, OpticalAttributable};
use crate::error::Result;
use crate::optical::OpticalSystem;
use crate::units::Physics;

/// Rectangle `[min1, max1] x [min2, max2]` sampled with `n1 x n2` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveGrid {
    pub rho1: (f64, f64),
    pub rho2: (f64, f64),
    pub n1: usize,
    pub n2: usize,
}

impl CurveGrid {
    pub fn square(min: f64, max: f64, n: usize) -> Self {
        Self { rho1: (min, max), rho2: (min, max), n1: n, n2: n }
    }

    fn node(range: (f64, f64), n: usize, k: usize) -> f64 {
        if n <= 1 {
            range.0
        } else {
            range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64
        }
    }

    pub fn rho1_at(&self, i: usize) -> f64 {
        Self::node(self.rho1, self.n1, i)
    }

    pub fn rho2_at(&self, j: usize) -> f64 {
        Self::node(self.rho2, self.n2, j)
    }

    /// Diagonal of one grid cell.
    pub fn resolution(&self) -> f64 {
        let h1 = if self.n1 > 1 { (self.rho1.1 - self.rho1.0) / (self.n1 - 1) as f64 } else { 0.0 };
        let h2 = if self.n2 > 1 { (self.rho2.1 - self.rho2.0) / (self.n2 - 1) as f64 } else { 0.0 };
        h1.hypot(h2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    /// Angular momentum compatibility `q`.
    Q,
    /// Squared projected Laplace-Lenz polynomial `p`.
    P,
    /// Unsquared normalized Laplace-Lenz residual.
    Lenz,
    /// Squared energy-equality polynomial.
    Energy,
}

impl CurveKind {
    pub const ALL: [CurveKind; 4] = [CurveKind::Q, CurveKind::P, CurveKind::Lenz, CurveKind::Energy];

    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Q => "q",
            CurveKind::P => "p",
            CurveKind::Lenz => "lenz",
            CurveKind::Energy => "energy",
        }
    }
}

/// Values of one curve function on the grid, `values[i][j]` at `(rho1_i, rho2_j)`;
/// `NaN` where the function is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub kind: CurveKind,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSamples {
    pub grid: CurveGrid,
    pub tables: Vec<CurveTable>,
}

impl CurveSamples {
    pub fn table(&self, kind: CurveKind) -> &CurveTable {
        self.tables.iter().find(|t| t.kind == kind).expect("all four tables are emitted")
    }

    /// Rows `rho1,rho2,value` of one table.
    pub fn rows(&self, kind: CurveKind) -> Vec<(f64, f64, f64)> {
        let t = self.table(kind);
        let mut out = Vec::with_capacity(self.grid.n1 * self.grid.n2);
        for (i, row) in t.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                out.push((self.grid.rho1_at(i), self.grid.rho2_at(j), v));
            }
        }
        out
    }

    /// Intersections of the zero set of `kind` with `q = 0`.
    pub fn intersections_with_q(&self, kind: CurveKind) -> Vec<(f64, f64)> {
        zero_set_intersections(&self.grid, &self.table(CurveKind::Q).values, &self.table(kind).values)
    }
}

/// Samples `q`, `p`, the unsquared Laplace-Lenz residual and the squared energy
/// condition over the grid. Polynomial values are in the scaled units of [`OpticalSystem`].
pub fn emit_curve_samples(
    att1: &OpticalAttributable,
    att2: &OpticalAttributable,
    obs1: &ObserverState,
    obs2: &ObserverState,
    phys: &Physics,
    grid: &CurveGrid,
) -> Result<CurveSamples> {
    let sys = OpticalSystem::new(att1, att2, obs1, obs2, phys)?;
    let mut tables: Vec<CurveTable> =
        CurveKind::ALL.iter().map(|&kind| CurveTable { kind, values: vec![vec![f64::NAN; grid.n2]; grid.n1] }).collect();
    for i in 0..grid.n1 {
        let x = grid.rho1_at(i);
        for j in 0..grid.n2 {
            let y = grid.rho2_at(j);
            tables[0].values[i][j] = sys.q_at(x, y);
            tables[1].values[i][j] = sys.p_at(x, y);
            tables[2].values[i][j] = sys.lenz_at(x, y).unwrap_or(f64::NAN);
            tables[3].values[i][j] = sys.energy_at(x, y).map(|e| e.1).unwrap_or(f64::NAN);
        }
    }
    Ok(CurveSamples { grid: *grid, tables })
}

fn changes_sign(v: &[Vec<f64>], i: usize, j: usize) -> bool {
    let c = [v[i][j], v[i + 1][j], v[i][j + 1], v[i + 1][j + 1]];
    if c.iter().any(|x| !x.is_finite()) {
        return false;
    }
    let pos = c.iter().any(|&x| x > 0.0);
    let neg = c.iter().any(|&x| x < 0.0);
    (pos && neg) || c.contains(&0.0)
}

/// Centroids of the 8-connected groups of cells in which both tables change sign.
pub fn zero_set_intersections(grid: &CurveGrid, a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<(f64, f64)> {
    if grid.n1 < 2 || grid.n2 < 2 {
        return Vec::new();
    }
    let (m1, m2) = (grid.n1 - 1, grid.n2 - 1);
    let hit: Vec<Vec<bool>> = (0..m1).map(|i| (0..m2).map(|j| changes_sign(a, i, j) && changes_sign(b, i, j)).collect()).collect();
    let mut seen = vec![vec![false; m2]; m1];
    let mut out = Vec::new();
    for i0 in 0..m1 {
        for j0 in 0..m2 {
            if !hit[i0][j0] || seen[i0][j0] {
                continue;
            }
            let mut stack = vec![(i0, j0)];
            seen[i0][j0] = true;
            let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
            while let Some((i, j)) = stack.pop() {
                sx += 0.5 * (grid.rho1_at(i) + grid.rho1_at(i + 1));
                sy += 0.5 * (grid.rho2_at(j) + grid.rho2_at(j + 1));
                n += 1.0;
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        let (ni, nj) = (i as i64 + di, j as i64 + dj);
                        if ni < 0 || nj < 0 || ni >= m1 as i64 || nj >= m2 as i64 {
                            continue;
                        }
                        let (ni, nj) = (ni as usize, nj as usize);
                        if hit[ni][nj] && !seen[ni][nj] {
                            seen[ni][nj] = true;
                            stack.push((ni, nj));
                        }
                    }
                }
            }
            out.push((sx / n, sy / n));
        }
    }
    out
}

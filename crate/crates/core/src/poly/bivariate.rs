use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::UnivariatePoly;

/// Dense real polynomial in two variables `(x, y)`; `c[i][j]` multiplies `x^i y^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivariatePoly {
    c: Vec<Vec<f64>>,
}

impl BivariatePoly {
    /// Builds from a coefficient matrix; rows may have different lengths.
    pub fn from_coeffs(rows: Vec<Vec<f64>>) -> Self {
        let width = rows.iter().map(Vec::len).max().unwrap_or(1).max(1);
        let mut c: Vec<Vec<f64>> = rows
            .into_iter()
            .map(|mut r| {
                r.resize(width, 0.0);
                r
            })
            .collect();
        if c.is_empty() {
            c.push(vec![0.0; width]);
        }
        Self { c }
    }

    pub fn zeros(deg_x: usize, deg_y: usize) -> Self {
        Self { c: vec![vec![0.0; deg_y + 1]; deg_x + 1] }
    }

    pub fn constant(v: f64) -> Self {
        Self { c: vec![vec![v]] }
    }

    /// `a + b x + c y`
    pub fn linear(a: f64, bx: f64, cy: f64) -> Self {
        Self { c: vec![vec![a, cy], vec![bx, 0.0]] }
    }

    /// `a + b x + c x^2 + d y + e y^2`
    pub fn separable_quadratic(x_coeffs: [f64; 3], y_coeffs: [f64; 2]) -> Self {
        let mut p = Self::zeros(2, 2);
        p.c[0][0] = x_coeffs[0];
        p.c[1][0] = x_coeffs[1];
        p.c[2][0] = x_coeffs[2];
        p.c[0][1] = y_coeffs[0];
        p.c[0][2] = y_coeffs[1];
        p
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.c.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        if i >= self.c.len() {
            let w = self.c[0].len();
            self.c.resize(i + 1, vec![0.0; w]);
        }
        if j >= self.c[0].len() {
            for row in &mut self.c {
                row.resize(j + 1, 0.0);
            }
        }
        self.c[i][j] = v;
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.c
    }

    /// Storage bound on the degree in `x`.
    pub fn max_deg_x(&self) -> usize {
        self.c.len() - 1
    }

    /// Storage bound on the degree in `y`.
    pub fn max_deg_y(&self) -> usize {
        self.c[0].len() - 1
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.c.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn nonzero_above(&self, rel: f64) -> impl Iterator<Item = (usize, usize)> + '_ {
        let floor = rel * self.max_abs_coeff();
        self.c.iter().enumerate().flat_map(move |(i, row)| {
            row.iter().enumerate().filter(move |(_, v)| v.abs() > floor).map(move |(j, _)| (i, j))
        })
    }

    /// Largest `i + j` among coefficients exceeding `rel * max|coeff|`.
    pub fn total_degree(&self, rel: f64) -> usize {
        self.nonzero_above(rel).map(|(i, j)| i + j).max().unwrap_or(0)
    }

    /// Degree in `y` among coefficients exceeding `rel * max|coeff|`.
    pub fn degree_y(&self, rel: f64) -> usize {
        self.nonzero_above(rel).map(|(_, j)| j).max().unwrap_or(0)
    }

    /// Degree in `x` among coefficients exceeding `rel * max|coeff|`.
    pub fn degree_x(&self, rel: f64) -> usize {
        self.nonzero_above(rel).map(|(i, _)| i).max().unwrap_or(0)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, row| acc * x + row.iter().rev().fold(0.0, |a, &v| a * y + v))
    }

    /// Sum of `|c_ij| |x|^i |y|^j`.
    pub fn eval_abs(&self, x: f64, y: f64) -> f64 {
        let (ax, ay) = (x.abs(), y.abs());
        self.c.iter().rev().fold(0.0, |acc, row| acc * ax + row.iter().rev().fold(0.0, |a, &v| a * ay + v.abs()))
    }

    pub fn d_dx(&self) -> Self {
        if self.c.len() == 1 {
            return Self::zeros(0, self.max_deg_y());
        }
        Self { c: self.c.iter().enumerate().skip(1).map(|(i, row)| row.iter().map(|v| v * i as f64).collect()).collect() }
    }

    pub fn d_dy(&self) -> Self {
        let w = self.c[0].len();
        if w == 1 {
            return Self::zeros(self.max_deg_x(), 0);
        }
        Self { c: self.c.iter().map(|row| (1..w).map(|j| row[j] * j as f64).collect()).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { c: self.c.iter().map(|r| r.iter().map(|v| v * s).collect()).collect() }
    }

    /// Polynomial in `y` obtained by fixing `x`.
    pub fn at_x(&self, x: f64) -> UnivariatePoly {
        let w = self.c[0].len();
        UnivariatePoly::new((0..w).map(|j| self.c.iter().rev().fold(0.0, |acc, row| acc * x + row[j])).collect())
    }

    /// Coefficients `a_j(x)` with `p(x, y) = sum_j a_j(x) y^j`, for `j = 0..=max_deg_y`.
    pub fn coeffs_in_second_var(&self) -> Vec<UnivariatePoly> {
        (0..self.c[0].len()).map(|j| UnivariatePoly::new(self.c.iter().map(|row| row[j]).collect())).collect()
    }

    /// Inverse of [`Self::coeffs_in_second_var`].
    pub fn from_coeffs_in_second_var(a: &[UnivariatePoly]) -> Self {
        let dx = a.iter().map(UnivariatePoly::degree).max().unwrap_or(0);
        let mut p = Self::zeros(dx, a.len().saturating_sub(1));
        for (j, aj) in a.iter().enumerate() {
            for (i, v) in aj.coeffs().iter().enumerate() {
                p.c[i][j] = *v;
            }
        }
        p
    }
}

impl Add for &BivariatePoly {
    type Output = BivariatePoly;

    fn add(self, rhs: Self) -> BivariatePoly {
        let (nx, ny) = (self.c.len().max(rhs.c.len()), self.c[0].len().max(rhs.c[0].len()));
        let mut out = BivariatePoly::zeros(nx - 1, ny - 1);
        for i in 0..nx {
            for j in 0..ny {
                out.c[i][j] = self.coeff(i, j) + rhs.coeff(i, j);
            }
        }
        out
    }
}

impl Sub for &BivariatePoly {
    type Output = BivariatePoly;

    fn sub(self, rhs: Self) -> BivariatePoly {
        self + &(-rhs)
    }
}

impl Neg for &BivariatePoly {
    type Output = BivariatePoly;

    fn neg(self) -> BivariatePoly {
        self.scale(-1.0)
    }
}

impl Mul for &BivariatePoly {
    type Output = BivariatePoly;

    fn mul(self, rhs: Self) -> BivariatePoly {
        let mut out = BivariatePoly::zeros(self.max_deg_x() + rhs.max_deg_x(), self.max_deg_y() + rhs.max_deg_y());
        for (i, ra) in self.c.iter().enumerate() {
            for (j, a) in ra.iter().enumerate() {
                if *a == 0.0 {
                    continue;
                }
                for (k, rb) in rhs.c.iter().enumerate() {
                    for (l, b) in rb.iter().enumerate() {
                        out.c[i + k][j + l] += a * b;
                    }
                }
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for BivariatePoly {
            type Output = BivariatePoly;
            fn $m(self, rhs: Self) -> BivariatePoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Relative threshold used by [`UnivariatePoly::normalized`].
pub const TRIM_REL: f64 = 1e-13;

/// Dense real polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct UnivariatePoly {
    coeffs: Vec<f64>,
}

impl UnivariatePoly {
    /// Builds a polynomial, dropping trailing coefficients that are exactly zero.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::new(vec![0.0])
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `x`
    pub fn x() -> Self {
        Self::new(vec![0.0, 1.0])
    }

    /// Monic polynomial with the given real roots.
    pub fn from_roots(roots: &[f64]) -> Self {
        roots.iter().fold(Self::constant(1.0), |acc, &r| &acc * &Self::new(vec![-r, 1.0]))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `x^k` (zero past the stored degree).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// Trailing coefficients below `TRIM_REL * max|coeff|` removed.
    pub fn normalized(&self) -> Self {
        self.trimmed(TRIM_REL)
    }

    pub fn trimmed(&self, rel: f64) -> Self {
        let floor = rel * self.max_abs_coeff();
        let mut c = self.coeffs.clone();
        while c.len() > 1 && c[c.len() - 1].abs() <= floor {
            c.pop();
        }
        Self::new(c)
    }

    /// Degree after dropping trailing coefficients below `rel * scale`.
    pub fn effective_degree(&self, rel: f64, scale: f64) -> Option<usize> {
        self.coeffs.iter().rposition(|c| c.abs() > rel * scale)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Compensated Horner evaluation: the rounding errors of every product and sum are
    /// recovered exactly and folded back in, giving about twice the working precision.
    pub fn eval_complex_compensated(&self, z: Complex64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        let mut c = Complex64::new(0.0, 0.0);
        for &a in self.coeffs.iter().rev() {
            let (p1, e1) = two_prod(s.re, z.re);
            let (p2, e2) = two_prod(s.im, z.im);
            let (p3, e3) = two_prod(s.re, z.im);
            let (p4, e4) = two_prod(s.im, z.re);
            let (re, e5) = two_sum(p1, -p2);
            let (im, e6) = two_sum(p3, p4);
            let (re, e7) = two_sum(re, a);
            c = c * z + Complex64::new(e1 - e2 + e5 + e7, e3 + e4 + e6);
            s = Complex64::new(re, im);
        }
        s + c
    }

    /// Sum of `|c_k| |x|^k`, the scale against which evaluation roundoff is judged.
    pub fn eval_abs(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * ax + c.abs())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Newton refinement of a real root, keeping the iterate if a step fails to reduce |p|.
    pub fn newton_polish(&self, mut x: f64, steps: usize) -> f64 {
        let d = self.derivative();
        for _ in 0..steps {
            let fx = self.eval(x);
            let dx = d.eval(x);
            if dx == 0.0 || !dx.is_finite() {
                break;
            }
            let next = x - fx / dx;
            if self.eval(next).abs() <= fx.abs() {
                x = next;
            } else {
                break;
            }
        }
        x
    }
}

impl Add for &UnivariatePoly {
    type Output = UnivariatePoly;

    fn add(self, rhs: Self) -> UnivariatePoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        UnivariatePoly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &UnivariatePoly {
    type Output = UnivariatePoly;

    fn sub(self, rhs: Self) -> UnivariatePoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        UnivariatePoly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &UnivariatePoly {
    type Output = UnivariatePoly;

    fn mul(self, rhs: Self) -> UnivariatePoly {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UnivariatePoly::new(out)
    }
}

impl Neg for &UnivariatePoly {
    type Output = UnivariatePoly;

    fn neg(self) -> UnivariatePoly {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for UnivariatePoly {
            type Output = UnivariatePoly;
            fn $m(self, rhs: Self) -> UnivariatePoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let z = s - a;
    (s, (a - (s - z)) + (b - z))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

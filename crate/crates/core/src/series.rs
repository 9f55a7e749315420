//! Truncated bivariate power series in `(u, v)`.
//!
//! Used to differentiate closed-form characteristic functions at the
//! origin without finite differences.

use std::ops::{Add, Mul};

/// `Σ c_{kl} u^k v^l` over `k + l ≤ degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series2 {
    degree: usize,
    coeffs: Vec<f64>,
}

fn index(k: usize, l: usize) -> usize {
    // row-major over total degree t = k + l, then by l
    let t = k + l;
    t * (t + 1) / 2 + l
}

impl Series2 {
    pub fn zero(degree: usize) -> Self {
        Self {
            degree,
            coeffs: vec![0.0; (degree + 1) * (degree + 2) / 2],
        }
    }

    pub fn constant(degree: usize, c: f64) -> Self {
        Self::monomial(degree, c, 0, 0)
    }

    pub fn monomial(degree: usize, c: f64, k: usize, l: usize) -> Self {
        let mut s = Self::zero(degree);
        if k + l <= degree {
            s.coeffs[index(k, l)] = c;
        }
        s
    }

    /// `a u² + b u v + c v²`.
    pub fn quadratic(degree: usize, a: f64, b: f64, c: f64) -> Self {
        Self::monomial(degree, a, 2, 0) + Self::monomial(degree, b, 1, 1) + Self::monomial(degree, c, 0, 2)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, k: usize, l: usize) -> f64 {
        if k + l <= self.degree {
            self.coeffs[index(k, l)]
        } else {
            0.0
        }
    }

    pub fn scale(mut self, c: f64) -> Self {
        self.coeffs.iter_mut().for_each(|x| *x *= c);
        self
    }

    /// `∂_u^k ∂_v^l` at the origin.
    pub fn derivative_at_origin(&self, k: usize, l: usize) -> f64 {
        let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
        fact(k) * fact(l) * self.coeff(k, l)
    }

    /// `Σ_j poly[j] s^j`, Horner.
    pub fn compose_poly(&self, poly: &[f64]) -> Self {
        let mut acc = Self::zero(self.degree);
        for &c in poly.iter().rev() {
            acc = &acc * self;
            acc.coeffs[0] += c;
        }
        acc
    }

    pub fn exp(&self) -> Self {
        let c0 = self.coeffs[0];
        let mut nil = self.clone();
        nil.coeffs[0] = 0.0;
        // nil^j vanishes for j > degree
        let poly: Vec<f64> = (0..=self.degree)
            .scan(1.0, |f, j| {
                if j > 0 {
                    *f /= j as f64;
                }
                Some(*f)
            })
            .collect();
        nil.compose_poly(&poly).scale(c0.exp())
    }
}

impl Add for Series2 {
    type Output = Series2;

    fn add(mut self, rhs: Series2) -> Series2 {
        assert_eq!(self.degree, rhs.degree, "series degree mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs) {
            *a += b;
        }
        self
    }
}

impl Mul for &Series2 {
    type Output = Series2;

    fn mul(self, rhs: &Series2) -> Series2 {
        assert_eq!(self.degree, rhs.degree, "series degree mismatch");
        let d = self.degree;
        let mut out = Series2::zero(d);
        for t1 in 0..=d {
            for l1 in 0..=t1 {
                let a = self.coeffs[index(t1 - l1, l1)];
                if a == 0.0 {
                    continue;
                }
                for t2 in 0..=(d - t1) {
                    for l2 in 0..=t2 {
                        let b = rhs.coeffs[index(t2 - l2, l2)];
                        out.coeffs[index(t1 - l1 + t2 - l2, l1 + l2)] += a * b;
                    }
                }
            }
        }
        out
    }
}

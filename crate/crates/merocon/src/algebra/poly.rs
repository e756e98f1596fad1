use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::{Cx, ZERO};

/// Univariate complex polynomial, coefficients in ascending degree.
///
/// Trailing exact zeros are stripped, so the zero polynomial has no
/// coefficients and the last stored coefficient is the leading one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poly1 {
    coeffs: Vec<Cx>,
}

impl Poly1 {
    pub fn new(mut coeffs: Vec<Cx>) -> Self {
        while coeffs.last() == Some(&ZERO) {
            coeffs.pop();
        }
        Poly1 { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly1::new(coeffs.iter().map(|&c| Cx::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Poly1 { coeffs: Vec::new() }
    }

    pub fn constant(c: Cx) -> Self {
        Poly1::new(vec![c])
    }

    /// `z − r`
    pub fn linear_root(r: Cx) -> Self {
        Poly1::new(vec![-r, Cx::new(1.0, 0.0)])
    }

    pub fn coeffs(&self) -> &[Cx] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, k: usize) -> Cx {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn leading(&self) -> Cx {
        self.coeffs.last().copied().unwrap_or(ZERO)
    }

    pub fn eval(&self, z: Cx) -> Cx {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Value and first derivative by Horner's scheme.
    pub fn eval_d(&self, z: Cx) -> (Cx, Cx) {
        let mut p = ZERO;
        let mut dp = ZERO;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// `Σ |a_k| |z|^k`, the natural scale of rounding errors in `eval`.
    pub fn abs_scale(&self, z: Cx) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn derivative(&self) -> Poly1 {
        Poly1::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn nth_derivative(&self, n: usize) -> Poly1 {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn scale(&self, s: Cx) -> Poly1 {
        Poly1::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Coefficients in descending order reversed to length `n+1`, i.e.
    /// `z^n p(1/z)`.
    pub fn reversed(&self, n: usize) -> Poly1 {
        let mut c = vec![ZERO; n + 1];
        for (k, &a) in self.coeffs.iter().enumerate() {
            assert!(k <= n, "reversal length below degree");
            c[n - k] = a;
        }
        Poly1::new(c)
    }

    /// Quotient by `z − r`, dropping the remainder.
    pub fn deflate(&self, r: Cx) -> Poly1 {
        let n = self.coeffs.len();
        if n <= 1 {
            return Poly1::zero();
        }
        let mut q = vec![ZERO; n - 1];
        let mut acc = ZERO;
        for k in (1..n).rev() {
            acc = acc * r + self.coeffs[k];
            q[k - 1] = acc;
        }
        Poly1::new(q)
    }

    /// Taylor coefficients at `p`: `self(p + z) = Σ t_k z^k`.
    pub fn taylor_at(&self, p: Cx) -> Vec<Cx> {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for k in (i..n - 1).rev() {
                let next = c[k + 1];
                c[k] += p * next;
            }
        }
        c
    }

    /// Composition `self(inner(z))`.
    pub fn compose(&self, inner: &Poly1) -> Poly1 {
        self.coeffs
            .iter()
            .rev()
            .fold(Poly1::zero(), |acc, &c| &(&acc * inner) + &Poly1::constant(c))
    }
}

impl Add for &Poly1 {
    type Output = Poly1;
    fn add(self, rhs: &Poly1) -> Poly1 {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly1::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Poly1 {
    type Output = Poly1;
    fn sub(self, rhs: &Poly1) -> Poly1 {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly1::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Poly1 {
    type Output = Poly1;
    fn mul(self, rhs: &Poly1) -> Poly1 {
        if self.is_zero() || rhs.is_zero() {
            return Poly1::zero();
        }
        let mut c = vec![ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly1::new(c)
    }
}

impl Neg for &Poly1 {
    type Output = Poly1;
    fn neg(self) -> Poly1 {
        Poly1::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    #[test]
    fn zero_polynomial_is_empty() {
        let p = Poly1::new(vec![ZERO, ZERO]);
        assert!(p.is_zero());
        assert_eq!(p.degree(), None);
    }

    #[test]
    fn taylor_shift_matches_expansion() {
        // (1+z)^3 at p = 1: (2 + z)^3 = 8 + 12z + 6z² + z³
        let p = Poly1::from_real(&[1.0, 3.0, 3.0, 1.0]);
        let t = p.taylor_at(c(1.0, 0.0));
        let want = [8.0, 12.0, 6.0, 1.0];
        for (a, b) in t.iter().zip(want) {
            assert!((a - c(b, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn deflation_is_exact_at_roots() {
        let p = &Poly1::linear_root(c(2.0, 1.0)) * &Poly1::linear_root(c(-1.0, 0.5));
        let q = p.deflate(c(2.0, 1.0));
        assert!((&q - &Poly1::linear_root(c(-1.0, 0.5))).max_abs_coeff() < 1e-14);
    }

    #[test]
    fn compose_and_reverse() {
        let p = Poly1::from_real(&[0.0, 0.0, 1.0]);
        let q = Poly1::from_real(&[1.0, 1.0]);
        assert_eq!(p.compose(&q), Poly1::from_real(&[1.0, 2.0, 1.0]));
        assert_eq!(q.reversed(2), Poly1::from_real(&[0.0, 1.0, 1.0]));
    }
}

use serde::{Deserialize, Serialize};

use super::{Cx, Poly1, ONE, ZERO};
use crate::error::{Error, Result};

/// Power series truncated at degree `N`: exactly `N+1` coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncSeries {
    coeffs: Vec<Cx>,
}

impl TruncSeries {
    /// Pads with zeros or truncates so that the order is exactly `order`.
    pub fn new(mut coeffs: Vec<Cx>, order: usize) -> Self {
        coeffs.resize(order + 1, ZERO);
        TruncSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        TruncSeries::new(Vec::new(), order)
    }

    pub fn one(order: usize) -> Self {
        TruncSeries::new(vec![ONE], order)
    }

    /// The series `z`.
    pub fn var(order: usize) -> Self {
        TruncSeries::new(vec![ZERO, ONE], order)
    }

    pub fn from_poly(p: &Poly1, order: usize) -> Self {
        TruncSeries::new(p.coeffs().to_vec(), order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Cx] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Cx {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn set_coeff(&mut self, k: usize, c: Cx) {
        if k < self.coeffs.len() {
            self.coeffs[k] = c;
        }
    }

    pub fn truncate(&self, order: usize) -> Self {
        TruncSeries::new(self.coeffs.clone(), order)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == ZERO)
    }

    pub fn eval(&self, z: Cx) -> Cx {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        TruncSeries::new((0..=n).map(|k| self.coeff(k) + other.coeff(k)).collect(), n)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        TruncSeries::new((0..=n).map(|k| self.coeff(k) - other.coeff(k)).collect(), n)
    }

    pub fn scale(&self, s: Cx) -> Self {
        TruncSeries { coeffs: self.coeffs.iter().map(|&c| c * s).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let mut c = vec![ZERO; n + 1];
        for (i, &a) in self.coeffs.iter().enumerate().take(n + 1) {
            if a == ZERO {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate().take(n + 1 - i) {
                c[i + j] += a * b;
            }
        }
        TruncSeries { coeffs: c }
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn recip(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if a0 == ZERO {
            return Err(Error::Series("reciprocal of a series with zero constant term".into()));
        }
        let n = self.order();
        let inv0 = a0.inv();
        let mut b = vec![ZERO; n + 1];
        b[0] = inv0;
        for k in 1..=n {
            let s: Cx = (1..=k).map(|j| self.coeffs[j] * b[k - j]).sum();
            b[k] = -s * inv0;
        }
        Ok(TruncSeries { coeffs: b })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.recip()?))
    }

    /// `self(inner(z))`; the inner series must have zero constant term.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if inner.coeffs[0] != ZERO {
            return Err(Error::Series("inner series has nonzero constant term".into()));
        }
        let n = self.order().min(inner.order());
        let inner = inner.truncate(n);
        let mut acc = TruncSeries::zero(n);
        for k in (0..=n).rev() {
            acc = acc.mul(&inner);
            acc.coeffs[0] += self.coeff(k);
        }
        Ok(acc)
    }

    /// Compositional inverse `g` with `self(g(w)) = w`; needs `c₀ = 0`, `c₁ ≠ 0`.
    pub fn reversion(&self) -> Result<Self> {
        if self.coeffs[0] != ZERO || self.coeff(1) == ZERO {
            return Err(Error::Series("reversion needs c0 = 0 and c1 != 0".into()));
        }
        let n = self.order();
        let c1 = self.coeffs[1];
        let mut g = TruncSeries::new(vec![ZERO, c1.inv()], n);
        for k in 2..=n {
            let e = self.compose(&g)?.coeff(k);
            g.coeffs[k] -= e / c1;
        }
        Ok(g)
    }

    /// Formal derivative, known through degree `N−1`.
    pub fn derivative(&self) -> Self {
        let n = self.order().max(1) - 1;
        TruncSeries::new(
            (1..=self.order()).map(|k| self.coeffs[k] * k as f64).collect(),
            n,
        )
    }

    /// Antiderivative with zero constant term, truncated back to order `N`.
    pub fn integral(&self) -> Self {
        let n = self.order();
        let mut c = vec![ZERO; n + 1];
        for k in 1..=n {
            c[k] = self.coeffs[k - 1] / k as f64;
        }
        TruncSeries { coeffs: c }
    }

    /// `exp(self)`.
    pub fn exp(&self) -> Self {
        let n = self.order();
        let e0 = self.coeffs[0].exp();
        // b' = a' b  ⇒  k b_k = Σ_{j=1..k} j a_j b_{k-j}
        let mut b = vec![ZERO; n + 1];
        b[0] = e0;
        for k in 1..=n {
            let s: Cx = (1..=k).map(|j| self.coeffs[j] * j as f64 * b[k - j]).sum();
            b[k] = s / k as f64;
        }
        TruncSeries { coeffs: b }
    }

    /// Multiply by `z^k` keeping the order.
    pub fn shift_up(&self, k: usize) -> Self {
        let n = self.order();
        let mut c = vec![ZERO; n + 1];
        for i in 0..=n {
            if i + k <= n {
                c[i + k] = self.coeffs[i];
            }
        }
        TruncSeries { coeffs: c }
    }

    /// Divide by `z^k`, dropping the first `k` coefficients; order becomes `N−k`.
    pub fn shift_down(&self, k: usize) -> Self {
        let n = self.order();
        assert!(k <= n, "shift below series order");
        TruncSeries::new(self.coeffs[k..].to_vec(), n - k)
    }

    /// Index of the first coefficient with modulus above `tol·max|c|`.
    pub fn valuation(&self, tol: f64) -> Option<usize> {
        let scale = self.max_abs();
        if scale == 0.0 {
            return None;
        }
        self.coeffs.iter().position(|c| c.norm() > tol * scale)
    }
}

pub fn series_mul(a: &TruncSeries, b: &TruncSeries) -> TruncSeries {
    a.mul(b)
}

pub fn series_recip(a: &TruncSeries) -> Result<TruncSeries> {
    a.recip()
}

pub fn series_compose(outer: &TruncSeries, inner: &TruncSeries) -> Result<TruncSeries> {
    outer.compose(inner)
}

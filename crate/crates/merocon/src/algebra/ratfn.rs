use serde::{Deserialize, Serialize};

use super::{poly_roots, taylor_scaled, Cx, Poly1, TruncSeries, DEFAULT_TOL, ZERO};
use crate::error::{Error, Result};

/// Quotient of two polynomials with nonzero denominator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatFn {
    pub num: Poly1,
    pub den: Poly1,
}

/// First index whose Taylor coefficient exceeds `tol` times its rounding scale.
fn thresholded_order(t: &[Cx], s: &[f64], tol: f64) -> Option<usize> {
    t.iter().zip(s).position(|(c, sc)| c.norm() > tol * sc)
}

impl RatFn {
    pub fn new(num: Poly1, den: Poly1) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        Ok(RatFn { num, den })
    }

    pub fn eval(&self, z: Cx) -> Cx {
        self.num.eval(z) / self.den.eval(z)
    }

    /// Cancel common roots of numerator and denominator (to `tol`).
    pub fn reduced(&self, tol: f64) -> Result<RatFn> {
        if self.num.is_zero() {
            return RatFn::new(Poly1::zero(), Poly1::constant(Cx::new(1.0, 0.0)));
        }
        let mut num = self.num.clone();
        let mut den = self.den.clone();
        if den.degree() == Some(0) {
            return RatFn::new(num, den);
        }
        for (r, m) in poly_roots(&self.den, tol)? {
            let (t, s) = taylor_scaled(&num, r);
            let k = thresholded_order(&t, &s, tol).unwrap_or(0).min(m);
            for _ in 0..k {
                num = num.deflate(r);
                den = den.deflate(r);
            }
        }
        RatFn::new(num, den)
    }

    /// Distinct poles with their orders.
    pub fn poles(&self, tol: f64) -> Result<Vec<(Cx, usize)>> {
        let red = self.reduced(tol)?;
        if red.den.degree() == Some(0) {
            return Ok(Vec::new());
        }
        poly_roots(&red.den, tol)
    }

    pub fn residue(&self, p: Cx) -> Cx {
        ratfn_residue_tol(&self.num, &self.den, p, DEFAULT_TOL)
    }
}

/// Residue of `num/den` at `p`, zero if `p` is not a pole.
pub fn ratfn_residue(num: &Poly1, den: &Poly1, p: Cx) -> Cx {
    ratfn_residue_tol(num, den, p, DEFAULT_TOL)
}

/// As [`ratfn_residue`], with coefficients below `tol` times their rounding
/// scale treated as zero when locating the pole order.
pub fn ratfn_residue_tol(num: &Poly1, den: &Poly1, p: Cx, tol: f64) -> Cx {
    let (tn, sn) = taylor_scaled(num, p);
    let (td, sd) = taylor_scaled(den, p);
    let Some(d) = thresholded_order(&td, &sd, tol) else {
        return ZERO;
    };
    let Some(n0) = thresholded_order(&tn, &sn, tol) else {
        return ZERO;
    };
    if n0 >= d {
        return ZERO;
    }
    if d == 1 {
        return tn[0] / td[1];
    }
    let order = d - 1;
    let mut nc = tn;
    for c in nc.iter_mut().take(n0) {
        *c = ZERO;
    }
    let ns = TruncSeries::new(nc, order);
    let ds = TruncSeries::new(td[d..].to_vec(), order);
    match ds.recip() {
        Ok(r) => ns.mul(&r).coeff(order),
        Err(_) => ZERO,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    #[test]
    fn simple_pole_residue() {
        // 1/(z(z−1)) has residues −1 at 0 and 1 at 1
        let den = Poly1::from_real(&[0.0, -1.0, 1.0]);
        let one = Poly1::from_real(&[1.0]);
        assert!((ratfn_residue(&one, &den, ZERO) + 1.0).norm() < 1e-14);
        assert!((ratfn_residue(&one, &den, c(1.0, 0.0)) - 1.0).norm() < 1e-14);
        assert_eq!(ratfn_residue(&one, &den, c(2.0, 0.0)), ZERO);
    }

    #[test]
    fn double_pole_residue() {
        // e.g. (z² + 3z + 1)/z² has residue 3 at 0
        let num = Poly1::from_real(&[1.0, 3.0, 1.0]);
        let den = Poly1::from_real(&[0.0, 0.0, 1.0]);
        assert!((ratfn_residue(&num, &den, ZERO) - 3.0).norm() < 1e-14);
        // 1/(z²(z−2)): residue at 0 is −1/4
        let den2 = Poly1::from_real(&[0.0, 0.0, -2.0, 1.0]);
        let one = Poly1::from_real(&[1.0]);
        assert!((ratfn_residue(&one, &den2, ZERO) + 0.25).norm() < 1e-14);
    }

    #[test]
    fn removable_singularity_has_no_residue() {
        let num = Poly1::from_real(&[0.0, 2.0]);
        let den = Poly1::from_real(&[0.0, 1.0, 1.0]);
        assert_eq!(ratfn_residue(&num, &den, ZERO), ZERO);
        let r = RatFn::new(num, den).unwrap().reduced(1e-9).unwrap();
        assert_eq!(r.den.degree(), Some(1));
        let poles = RatFn::new(r.num.clone(), r.den.clone()).unwrap().poles(1e-9).unwrap();
        assert_eq!(poles.len(), 1);
        assert!((poles[0].0 + 1.0).norm() < 1e-14);
    }
}

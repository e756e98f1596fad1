use std::f64::consts::PI;

use super::{lex_cmp, Cx, Poly1, ZERO};
use crate::error::{Error, Result};

const MAX_ITER: usize = 600;

/// Taylor coefficients of `p` at `c` together with their rounding scales
/// `s_j = Σ_i C(i,j)|a_i||c|^{i−j}`.
pub fn taylor_scaled(p: &Poly1, c: Cx) -> (Vec<Cx>, Vec<f64>) {
    let t = p.taylor_at(c);
    let abs = Poly1::new(p.coeffs().iter().map(|a| Cx::new(a.norm(), 0.0)).collect());
    let s = abs.taylor_at(Cx::new(c.norm(), 0.0)).iter().map(|x| x.re).collect();
    (t, s)
}

/// Initial approximations spread on circles whose radii come from the upper
/// convex hull of `(k, log|a_k|)`.
fn newton_polygon_start(a: &[Cx]) -> Vec<Cx> {
    let m = a.len() - 1;
    let pts: Vec<(usize, f64)> = a
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(k, c)| (k, c.norm().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (k1, y1) = hull[hull.len() - 2];
            let (k2, y2) = hull[hull.len() - 1];
            let cross = (k2 as f64 - k1 as f64) * (p.1 - y1) - (y2 - y1) * (p.0 as f64 - k1 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut z = Vec::with_capacity(m);
    for (e, w) in hull.windows(2).enumerate() {
        let (i, yi) = w[0];
        let (j, yj) = w[1];
        let cnt = j - i;
        let r = ((yi - yj) / cnt as f64).exp();
        for l in 0..cnt {
            let ang = 2.0 * PI * l as f64 / cnt as f64 + 2.0 * PI * e as f64 / m as f64 + 0.4;
            z.push(Cx::from_polar(r, ang));
        }
    }
    z
}

/// All roots of `p` by simultaneous (Aberth–Ehrlich) iteration, repeated
/// according to multiplicity but without any merging.
pub fn aberth_raw(p: &Poly1) -> Result<Vec<Cx>> {
    let Some(deg) = p.degree() else {
        return Err(Error::InvalidInput("roots of the zero polynomial".into()));
    };
    let a = p.coeffs();
    let k0 = a.iter().take_while(|&&c| c == ZERO).count();
    let mut out = vec![ZERO; k0];
    let q = Poly1::new(a[k0..].to_vec());
    let m = deg - k0;
    if m == 0 {
        return Ok(out);
    }
    if m == 1 {
        out.push(-q.coeff(0) / q.coeff(1));
        return Ok(out);
    }
    let mut z = newton_polygon_start(q.coeffs());
    let mut done = vec![false; m];
    let eps = f64::EPSILON;
    for _ in 0..MAX_ITER {
        let mut all = true;
        for i in 0..m {
            if done[i] {
                continue;
            }
            let (pv, dv) = q.eval_d(z[i]);
            if pv.norm() <= 4.0 * eps * q.abs_scale(z[i]) {
                done[i] = true;
                continue;
            }
            all = false;
            let ratio = if dv == ZERO { pv / (eps * q.abs_scale(z[i]).max(1e-300)) } else { pv / dv };
            let mut s = ZERO;
            for j in 0..m {
                if j != i && z[j] != z[i] {
                    s += (z[i] - z[j]).inv();
                }
            }
            let w = ratio / (Cx::new(1.0, 0.0) - ratio * s);
            if !super::is_finite(w) {
                let bump = Cx::new(1e-8, 1e-8) * (1.0 + z[i].norm());
                z[i] += bump;
                continue;
            }
            z[i] -= w;
            if w.norm() <= eps * z[i].norm() {
                done[i] = true;
            }
        }
        if all {
            break;
        }
    }
    for &r in &z {
        let res = q.eval(r).norm();
        if !super::is_finite(r) || res > 1e-6 * q.abs_scale(r) {
            return Err(Error::NonConvergence(format!(
                "residual {res:e} at {r} after {MAX_ITER} iterations"
            )));
        }
    }
    out.extend(z);
    Ok(out)
}

/// Greedy agglomeration of raw roots into clusters.  `accept` receives the
/// members of a candidate cluster and returns its refined centre when the
/// cluster is a genuine multiple root.
pub(crate) fn merge_clusters<P: Copy>(
    pts: &[P],
    dist: impl Fn(&P, &P) -> f64,
    accept: impl Fn(&[P]) -> Option<P>,
) -> Vec<(P, Vec<P>)> {
    let mut cl: Vec<(P, Vec<P>)> = pts.iter().map(|&p| (p, vec![p])).collect();
    loop {
        let mut pairs = Vec::new();
        for i in 0..cl.len() {
            for j in i + 1..cl.len() {
                pairs.push((dist(&cl[i].0, &cl[j].0), i, j));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged = false;
        for (_, i, j) in pairs {
            let mut members = cl[i].1.clone();
            members.extend_from_slice(&cl[j].1);
            if let Some(c) = accept(&members) {
                cl[i] = (c, members);
                cl.remove(j);
                merged = true;
                break;
            }
        }
        if !merged {
            return cl;
        }
    }
}

/// Refine a `k`-fold root candidate by Newton's method on `p^{(k−1)}` and
/// test that Taylor coefficients `0..k` vanish to `tol` relative to their
/// rounding scales.
pub(crate) fn refine_multiple(p: &Poly1, start: Cx, k: usize, tol: f64, radius: f64) -> Option<Cx> {
    let q = p.nth_derivative(k - 1);
    let mut c = start;
    for _ in 0..30 {
        let (v, d) = q.eval_d(c);
        if d == ZERO {
            break;
        }
        let step = v / d;
        c -= step;
        if step.norm() <= 4.0 * f64::EPSILON * (1.0 + c.norm()) {
            break;
        }
    }
    if !super::is_finite(c) || (c - start).norm() > radius {
        return None;
    }
    let (t, s) = taylor_scaled(p, c);
    let ok = (0..k).all(|j| t[j].norm() <= tol * s[j].max(f64::MIN_POSITIVE));
    ok.then_some(c)
}

/// Roots of `p` with multiplicities; clusters that are multiple roots to
/// relative tolerance `tol` are merged.
pub fn poly_roots(p: &Poly1, tol: f64) -> Result<Vec<(Cx, usize)>> {
    let raw = aberth_raw(p)?;
    let clusters = merge_clusters(
        &raw,
        |a, b| (a - b).norm(),
        |m| {
            let c = m.iter().sum::<Cx>() / m.len() as f64;
            let radius = 0.05 * (1.0 + c.norm());
            if m.iter().any(|r| (r - c).norm() > radius) {
                return None;
            }
            refine_multiple(p, c, m.len(), tol, radius)
        },
    );
    let mut out: Vec<(Cx, usize)> = clusters.into_iter().map(|(c, m)| (c, m.len())).collect();
    for (r, _) in &out {
        if p.eval(*r).norm() > tol * p.abs_scale(*r).max(f64::MIN_POSITIVE) {
            return Err(Error::NonConvergence(format!("root {r} fails residual test")));
        }
    }
    out.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    #[test]
    fn unit_square_roots() {
        let r = poly_roots(&Poly1::from_real(&[-1.0, 0.0, 1.0]), 1e-9).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0].0 - c(-1.0, 0.0)).norm() < 1e-14 && r[0].1 == 1);
        assert!((r[1].0 - c(1.0, 0.0)).norm() < 1e-14 && r[1].1 == 1);
    }

    #[test]
    fn monomial_root() {
        let r = poly_roots(&Poly1::from_real(&[0.0, 0.0, 1.0]), 1e-9).unwrap();
        assert_eq!(r, vec![(ZERO, 2)]);
    }

    #[test]
    fn characteristic_polynomial_of_three_direction_example() {
        let r = poly_roots(&Poly1::from_real(&[0.0, 1.0, -1.0]), 1e-9).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0].0).norm() < 1e-15);
        assert!((r[1].0 - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn perturbed_triple_root_is_merged() {
        let r0 = c(0.3, -0.7);
        let l = Poly1::linear_root(r0);
        let p = &(&(&l * &l) * &l) * &Poly1::linear_root(c(2.0, 1.0));
        // inexact coefficients
        let p = Poly1::new(p.coeffs().iter().map(|a| a * (1.0 + 3e-16)).collect());
        let r = poly_roots(&p, 1e-9).unwrap();
        let triple = r.iter().find(|x| x.1 == 3).expect("triple root found");
        assert!((triple.0 - r0).norm() < 1e-10);
        assert_eq!(r.iter().map(|x| x.1).sum::<usize>(), 4);
    }

    #[test]
    fn widely_spread_magnitudes() {
        let p = &Poly1::linear_root(c(1e-6, 0.0)) * &Poly1::linear_root(c(1e7, 2.0));
        let r = poly_roots(&p, 1e-9).unwrap();
        assert!((r[0].0 - c(1e-6, 0.0)).norm() < 1e-18);
        assert!((r[1].0 - c(1e7, 2.0)).norm() < 1e-6);
    }
}

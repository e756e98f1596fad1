#![allow(dead_code)]

use merocon::algebra::{lex_cmp, Chart};
use merocon::atlas::AtlasLabel;
use merocon::field::{mat_inv, Mat2};
use merocon::singularity::LocalGerm;
use merocon::{ConnectionData, Cx, TruncSeries};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Cx {
    Cx::new(re, im)
}

pub fn rand_c(rng: &mut ChaCha8Rng, r: f64) -> Cx {
    c(rng.gen_range(-r..r), rng.gen_range(-r..r))
}

pub fn frob(m: &Mat2) -> f64 {
    m.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Random invertible matrix with Frobenius condition number at most `cond`.
pub fn rand_gl2(rng: &mut ChaCha8Rng, cond: f64) -> Mat2 {
    loop {
        let m = [[rand_c(rng, 1.0), rand_c(rng, 1.0)], [rand_c(rng, 1.0), rand_c(rng, 1.0)]];
        if let Ok(inv) = mat_inv(&m) {
            if frob(&m) * frob(&inv) <= cond {
                return m;
            }
        }
    }
}

/// `z^μ (a₀ + …)` with random tail.
pub fn series_at(rng: &mut ChaCha8Rng, mu: usize, lead: Cx, order: usize, tail: f64) -> TruncSeries {
    let mut v = vec![c(0.0, 0.0); order + 1];
    v[mu] = lead;
    for x in v.iter_mut().skip(mu + 1) {
        *x = rand_c(rng, tail);
    }
    TruncSeries::new(v, order)
}

pub fn germ(rng: &mut ChaCha8Rng, mu_x: usize, mu_y: usize, rho: Cx, order: usize) -> LocalGerm {
    let a0 = c(1.0, 0.0) + rand_c(rng, 0.5);
    let x = series_at(rng, mu_x, a0, order, 0.5);
    let y = series_at(rng, mu_y, rho * a0, order, 0.5);
    LocalGerm::with_orders(x, y, mu_x, Some(mu_y)).unwrap()
}

/// Random admissible change `(ψ, ξ)` with `ψ(0) = 0`, `ψ′(0) = 1`, `ξ(0) ≠ 0`.
pub fn change(rng: &mut ChaCha8Rng, order: usize) -> (TruncSeries, TruncSeries) {
    let mut psi = vec![c(0.0, 0.0); order + 1];
    psi[1] = c(1.0, 0.0);
    for (k, x) in psi.iter_mut().enumerate().skip(2) {
        *x = rand_c(rng, 0.4 / k as f64);
    }
    let mut xi = vec![c(1.0, 0.0) + rand_c(rng, 0.5); order + 1];
    for (k, x) in xi.iter_mut().enumerate().skip(1) {
        *x = rand_c(rng, 0.4 / k as f64);
    }
    (TruncSeries::new(psi, order), TruncSeries::new(xi, order))
}

/// Parameter avoiding the excluded values of the normal forms.
pub fn rand_param(rng: &mut ChaCha8Rng) -> Cx {
    loop {
        let p = rand_c(rng, 2.0);
        if p.norm() > 0.1 && (p - 1.0).norm() > 0.1 {
            return p;
        }
    }
}

pub fn rand_label(rng: &mut ChaCha8Rng, kind: usize) -> AtlasLabel {
    match kind {
        0 => AtlasLabel::Inf,
        1 => AtlasLabel::C100,
        2 => AtlasLabel::C110,
        3 => AtlasLabel::C111,
        4 => AtlasLabel::C2001,
        5 => AtlasLabel::C2011,
        6 => AtlasLabel::C210 { rho: rand_param(rng) },
        7 => AtlasLabel::C211 { rho: rand_param(rng) },
        8 => AtlasLabel::C3100,
        9 => AtlasLabel::C3Rho10 { rho: rand_param(rng) },
        _ => loop {
            let (rho, tau) = (rand_param(rng), rand_param(rng));
            if (rho + tau - 1.0).norm() > 0.1 {
                break AtlasLabel::C3RhoTau1 { rho, tau };
            }
        },
    }
}

/// Parameter distance between two labels of the same kind, up to the
/// symmetries of the normal forms.
pub fn label_distance(a: &AtlasLabel, b: &AtlasLabel) -> f64 {
    let one = c(1.0, 0.0);
    match (*a, *b) {
        (AtlasLabel::C3RhoTau1 { rho: r1, tau: t1 }, AtlasLabel::C3RhoTau1 { rho: r2, tau: t2 }) => {
            let mut x = [r1, one - r1 - t1, t1];
            let mut y = [r2, one - r2 - t2, t2];
            x.sort_by(lex_cmp);
            y.sort_by(lex_cmp);
            (0..3).map(|i| (x[i] - y[i]).norm()).fold(0.0, f64::max)
        }
        (AtlasLabel::C3Rho10 { rho: r1 }, AtlasLabel::C3Rho10 { rho: r2 }) => (r1 - r2).norm().min((one - r1 - r2).norm()),
        _ if a.name() == b.name() => {
            a.params().iter().zip(b.params()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
        }
        _ => f64::INFINITY,
    }
}

/// Classical RK4 on the chart-0 geodesic equations with a fixed step.
pub fn rk4_chart0(cd: &ConnectionData, z: Cx, v: Cx, t: f64, steps: usize) -> (Cx, Cx) {
    let x = cd.x_poly(Chart::Zero).clone();
    let y = cd.y_poly(Chart::Zero).clone();
    let f = |z: Cx, v: Cx| (x.eval(z) * v, -y.eval(z) * v * v);
    let h = t / steps as f64;
    let (mut z, mut v) = (z, v);
    for _ in 0..steps {
        let k1 = f(z, v);
        let k2 = f(z + k1.0 * (h / 2.0), v + k1.1 * (h / 2.0));
        let k3 = f(z + k2.0 * (h / 2.0), v + k2.1 * (h / 2.0));
        let k4 = f(z + k3.0 * h, v + k3.1 * h);
        z += (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (h / 6.0);
        v += (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (h / 6.0);
    }
    (z, v)
}

/// Normal form `(z^μ, ρ z^{μ_Y}(1 + a zⁿ))` pushed through a random admissible change.
pub fn conjugated_normal(rng: &mut ChaCha8Rng, mu: usize, my: usize, rho: Cx, a: Cx, n: usize, order: usize) -> LocalGerm {
    let mut x = vec![c(0.0, 0.0); order + 1];
    x[mu] = c(1.0, 0.0);
    let mut y = vec![c(0.0, 0.0); order + 1];
    y[my] = rho;
    if n > 0 {
        y[my + n] = rho * a;
    }
    let (psi, xi) = change(rng, order);
    LocalGerm::with_orders(TruncSeries::new(x, order), TruncSeries::new(y, order), mu, Some(my))
        .unwrap()
        .transform(&psi, &xi)
        .unwrap()
}

/// RK4 with the step count doubled until two successive results agree to
/// `tol`; `None` if that needs more than `max_steps`.
pub fn rk4_converged(cd: &ConnectionData, z: Cx, v: Cx, t: f64, tol: f64, max_steps: usize) -> Option<(Cx, Cx)> {
    let mut steps = 1000;
    let mut prev = rk4_chart0(cd, z, v, t, steps);
    while steps < max_steps {
        steps *= 2;
        let next = rk4_chart0(cd, z, v, t, steps);
        let d = (next.0 - prev.0).norm().max((next.1 - prev.1).norm());
        if d <= tol * (1.0 + next.0.norm() + next.1.norm()) {
            return Some(next);
        }
        prev = next;
    }
    None
}

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{fold_angle, state_at, ChartState, Event, EventKind, IsoChart, Trajectory};
use crate::algebra::{Chart, Cx, ProjPoint};
use crate::error::{Error, Result};
use crate::field::ConnectionData;

use super::advance;

const SPHERE_POINTS: usize = 256;
const MAX_SCAN: usize = 4000;
const UNRESOLVED: f64 = 0.25;

fn sphere_point(k: usize, n: usize) -> ProjPoint {
    let golden = PI * (3.0 - 5f64.sqrt());
    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
    let r = (1.0 - z * z).sqrt();
    let th = golden * k as f64;
    let (x, y) = (r * th.cos(), r * th.sin());
    // stereographic projection from the north pole
    if z <= 0.0 {
        ProjPoint::new(Chart::Zero, Cx::new(x, y) / (1.0 - z))
    } else {
        ProjPoint::new(Chart::Inf, Cx::new(x, -y) / (1.0 + z))
    }
}

/// A point of P¹ far from the given samples and from every characteristic
/// direction.
pub fn far_point(samples: &[ChartState], cd: &ConnectionData) -> ProjPoint {
    let stride = (samples.len() / MAX_SCAN).max(1);
    let pts: Vec<ProjPoint> = samples.iter().step_by(stride).map(|s| s.point()).collect();
    (0..SPHERE_POINTS)
        .map(|k| {
            let p = sphere_point(k, SPHERE_POINTS);
            let d = pts
                .iter()
                .chain(cd.directions.iter().map(|d| &d.point))
                .map(|q| q.chordal(&p))
                .fold(f64::INFINITY, f64::min);
            (p, d)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|x| x.0)
        .unwrap_or_else(ProjPoint::infinity)
}

fn orient(a: Cx, b: Cx, c: Cx) -> f64 {
    let (u, v) = (b - a, c - a);
    u.re * v.im - u.im * v.re
}

/// Parameters `(s, r)` of a proper crossing of `[a,b]` and `[c,d]`.
fn crossing(a: Cx, b: Cx, c: Cx, d: Cx) -> Option<(f64, f64)> {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if !(o1 * o2 < 0.0 && o3 * o4 < 0.0) {
        return None;
    }
    let s = o3 / (o3 - o4);
    let r = o1 / (o1 - o2);
    Some((s, r))
}

fn signed_area(poly: &[Cx]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| orient(Cx::new(0.0, 0.0), poly[i], poly[(i + 1) % n])).sum::<f64>() * 0.5
}

fn winding(poly: &[Cx], p: Cx) -> i64 {
    let n = poly.len();
    let mut total = 0.0;
    for i in 0..n {
        let a = poly[i] - p;
        let b = poly[(i + 1) % n] - p;
        total += (b / a).arg();
    }
    (total / (2.0 * PI)).round() as i64
}

/// Directions on the left of a closed polygon and whether it runs
/// counterclockwise.
fn left_directions(poly: &[Cx], chart: &IsoChart, cd: &ConnectionData) -> (Vec<usize>, bool) {
    let ccw = signed_area(poly) > 0.0;
    let want = if ccw { 1 } else { 0 };
    let inside = cd
        .directions
        .iter()
        .enumerate()
        .filter(|(_, d)| winding(poly, chart.u(&d.point)) == want)
        .map(|(i, _)| i)
        .collect();
    (inside, ccw)
}

fn induced_sum(cd: &ConnectionData, idx: &[usize]) -> Cx {
    idx.iter().map(|&i| cd.directions[i].induced_residue).sum()
}

/// Solve `u(t1) = u(t2)` near the polyline estimate; `None` unless Newton's
/// method converges to a transverse crossing.
fn refine_pair(
    cd: &ConnectionData,
    chart: &IsoChart,
    a: &ChartState,
    b: &ChartState,
    mut d1: f64,
    mut d2: f64,
    window: [(f64, f64); 2],
) -> Option<(ChartState, ChartState)> {
    let mut last = f64::INFINITY;
    for it in 0..12 {
        let ok = |d: f64, w: (f64, f64)| d >= w.0 && d <= w.1;
        if !(ok(d1, window[0]) && ok(d2, window[1])) {
            return None;
        }
        let s1 = advance(cd, a, d1).ok()?;
        let s2 = advance(cd, b, d2).ok()?;
        let (u1, du1) = chart.state_u_du(&s1, cd);
        let (u2, du2) = chart.state_u_du(&s2, cd);
        let r = u1 - u2;
        let sin = (du1 * du2.conj()).im / (du1.norm() * du2.norm());
        if !(sin.abs() > 1e-8) {
            return None;
        }
        if r.norm() <= 1e-12 * (1.0 + u1.norm()) {
            return Some((s1, s2));
        }
        if it >= 2 && r.norm() > 0.5 * last {
            return None;
        }
        last = r.norm();
        // du1·δ1 − du2·δ2 = −r as a real 2×2 system
        let det = du1.re * (-du2.im) - (-du2.re) * du1.im;
        let (rx, ry) = (-r.re, -r.im);
        d1 += (rx * (-du2.im) - (-du2.re) * ry) / det;
        d2 += (du1.re * ry - du1.im * rx) / det;
        if !(d1.is_finite() && d2.is_finite()) {
            return None;
        }
    }
    None
}

/// Transverse self-intersections of a recorded trajectory, each with its
/// external angle and the angle predicted by the enclosed residues.
///
/// A loop is flagged unresolved when its angle residual exceeds 0.25 or it
/// passes within chordal distance `resolution` of a characteristic direction,
/// where the integrated coordinates no longer resolve its shape.
pub fn detect_self_intersections(traj: &Trajectory, cd: &ConnectionData, resolution: f64) -> Vec<Event> {
    let s = &traj.samples;
    let n = s.len();
    if n < 4 {
        return Vec::new();
    }
    let chart = IsoChart::with_pole_at(&far_point(s, cd));
    let us: Vec<Cx> = s.iter().map(|x| chart.u(&x.point())).collect();
    let nseg = n - 1;

    let (mut lo, mut hi) = (us[0], us[0]);
    let mut total_len = 0.0;
    for i in 0..n {
        lo = Cx::new(lo.re.min(us[i].re), lo.im.min(us[i].im));
        hi = Cx::new(hi.re.max(us[i].re), hi.im.max(us[i].im));
        if i + 1 < n {
            total_len += (us[i + 1] - us[i]).norm();
        }
    }
    let span = (hi.re - lo.re).max(hi.im - lo.im).max(1e-300);
    let cell = (2.0 * total_len / nseg as f64).max(span / 4096.0);
    let key = |z: Cx| (((z.re - lo.re) / cell).floor() as i64, ((z.im - lo.im) / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for i in 0..nseg {
        let (ka, kb) = (key(us[i]), key(us[i + 1]));
        for x in ka.0.min(kb.0)..=ka.0.max(kb.0) {
            for y in ka.1.min(kb.1)..=ka.1.max(kb.1) {
                grid.entry((x, y)).or_default().push(i);
            }
        }
    }
    let mut pairs: HashSet<(usize, usize)> = HashSet::new();
    for segs in grid.values() {
        for (p, &i) in segs.iter().enumerate() {
            for &j in &segs[p + 1..] {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                if b > a + 1 && crossing(us[a], us[a + 1], us[b], us[b + 1]).is_some() {
                    pairs.insert((a, b));
                }
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
    pairs.sort_unstable();

    struct Found {
        t1: f64,
        t2: f64,
        a: usize,
        b: usize,
        p: ChartState,
        eps: f64,
    }
    let mut found: Vec<Found> = Vec::new();
    for (a, b) in pairs {
        let (sa, sb) = crossing(us[a], us[a + 1], us[b], us[b + 1]).expect("checked above");
        let d1 = sa * (s[a + 1].t - s[a].t);
        let d2 = sb * (s[b + 1].t - s[b].t);
        // allow the crossing to sit in a neighbouring segment
        let window = |i: usize| (s[i.saturating_sub(1)].t - s[i].t, s[(i + 2).min(n - 1)].t - s[i].t);
        let Some((p1, p2)) = refine_pair(cd, &chart, &s[a], &s[b], d1, d2, [window(a), window(b)]) else {
            continue;
        };
        let dup = found.iter().any(|f| {
            (f.t1 - p1.t).abs() <= 1e-9 * (1.0 + p1.t.abs()) && (f.t2 - p2.t).abs() <= 1e-9 * (1.0 + p2.t.abs())
        });
        if dup {
            continue;
        }
        let (_, du1) = chart.state_u_du(&p1, cd);
        let (_, du2) = chart.state_u_du(&p2, cd);
        let eps = fold_angle((du1 / du2).arg());
        found.push(Found { t1: p1.t, t2: p2.t, a, b, p: p1, eps });
    }

    let mut out = Vec::with_capacity(found.len());
    for f in &found {
        let mut poly = Vec::with_capacity(f.b - f.a + 2);
        poly.push(chart.u(&f.p.point()));
        poly.extend_from_slice(&us[f.a + 1..=f.b]);
        let (enclosed, ccw) = left_directions(&poly, &chart, cd);
        let sum = induced_sum(cd, &enclosed).re;
        let residual = fold_angle(f.eps - 2.0 * PI * (1.0 + sum)).abs();
        let closest = s[f.a..=f.b + 1]
            .iter()
            .map(|x| x.point())
            .flat_map(|p| cd.directions.iter().map(move |d| d.point.chordal(&p)))
            .fold(f64::INFINITY, f64::min);
        let simple = !found.iter().any(|g| g.t1 > f.t1 && g.t2 < f.t2);
        out.push(Event {
            t: f.t2,
            kind: EventKind::SelfIntersection {
                t1: f.t1,
                t2: f.t2,
                point: f.p.point().canonical(),
                external_angle: f.eps,
                enclosed_poles: enclosed,
                enclosed_induced_residue: sum,
                angle_residual: residual,
                simple,
                counterclockwise: ccw,
                unresolved: residual > UNRESOLVED || closest < resolution,
            },
        });
    }
    out
}

/// Holonomy of the tangent direction along a geodesic loop, measured and
/// predicted from the residues on its left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopMultiplier {
    pub measured: Cx,
    pub predicted: Cx,
    pub enclosed_poles: Vec<usize>,
    pub relative_error: f64,
}

/// Multiplier `σ'(t2)/σ'(t1)` of the loop `σ|[t1,t2]`, compared with
/// `exp(−2πi Σ Res(∇°))` over the directions on its left.
pub fn loop_multiplier(traj: &Trajectory, cd: &ConnectionData, t1: f64, t2: f64) -> Result<LoopMultiplier> {
    if !(t1 < t2) {
        return Err(Error::InvalidInput("loop needs t1 < t2".into()));
    }
    let a = state_at(traj, cd, t1)?;
    let b = state_at(traj, cd, t2)?;
    let gap = a.point().chordal(&b.point());
    if gap > 1e-6 {
        return Err(Error::NotALoop(gap));
    }
    let local = IsoChart::centred_at(&a.point());
    let (_, da) = local.state_u_du(&a, cd);
    let (_, db) = local.state_u_du(&b, cd);
    let measured = db / da;

    let inner: Vec<ChartState> = traj.samples.iter().filter(|x| x.t > t1 && x.t < t2).copied().collect();
    let mut pts = vec![a];
    pts.extend_from_slice(&inner);
    let chart = IsoChart::with_pole_at(&far_point(&pts, cd));
    let poly: Vec<Cx> = pts.iter().map(|x| chart.u(&x.point())).collect();
    let (enclosed, _) = left_directions(&poly, &chart, cd);
    let predicted = (Cx::new(0.0, -2.0 * PI) * induced_sum(cd, &enclosed)).exp();
    let relative_error = (measured - predicted).norm() / predicted.norm();
    Ok(LoopMultiplier { measured, predicted, enclosed_poles: enclosed, relative_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_points_are_spread() {
        let pts: Vec<ProjPoint> = (0..SPHERE_POINTS).map(|k| sphere_point(k, SPHERE_POINTS)).collect();
        let mut min = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                min = min.min(pts[i].chordal(&pts[j]));
            }
        }
        assert!(min > 0.05, "{min}");
    }

    #[test]
    fn winding_and_area() {
        let sq = [Cx::new(0.0, 0.0), Cx::new(1.0, 0.0), Cx::new(1.0, 1.0), Cx::new(0.0, 1.0)];
        assert!(signed_area(&sq) > 0.0);
        assert_eq!(winding(&sq, Cx::new(0.5, 0.5)), 1);
        assert_eq!(winding(&sq, Cx::new(2.0, 0.5)), 0);
        assert!(crossing(sq[0], sq[2], sq[1], sq[3]).is_some());
        assert!(crossing(sq[0], sq[1], sq[2], sq[3]).is_none());
    }
}

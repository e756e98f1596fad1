use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::integrate::section_crossing;
use super::{fold_angle, state_at, EventKind, IntegratorConfig, IsoChart, OmegaClass, Trajectory};
use crate::algebra::Cx;
use crate::field::ConnectionData;

const SECTION_REACH: f64 = 0.5;
const GAP_FLOOR: f64 = 1e-9;
const SHRINK: f64 = 0.9;
const MIN_RETURNS: usize = 3;
const VISIT_RADIUS: f64 = 0.05;
const WINDOW_TOL: f64 = 1e-2;

/// Sum of induced residues enclosed by one simple loop of a
/// self-intersecting geodesic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopWindow {
    pub t1: f64,
    pub t2: f64,
    pub enclosed_induced_residue: f64,
    pub in_window: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaReport {
    #[serde(flatten)]
    pub class: OmegaClass,
    pub self_intersections: usize,
    /// Whether new self-intersections kept appearing in the last quarter.
    pub still_intersecting: bool,
    pub loop_windows: Vec<LoopWindow>,
    /// Gaps between successive returns to a late transverse section.
    pub return_gaps: Vec<f64>,
    /// Angle residual of the last nearly closed loop.
    pub late_loop_residual: Option<f64>,
    pub detail: String,
}

impl OmegaReport {
    pub fn undetermined() -> Self {
        OmegaReport {
            class: OmegaClass::Undetermined,
            self_intersections: 0,
            still_intersecting: false,
            loop_windows: Vec::new(),
            return_gaps: Vec::new(),
            late_loop_residual: None,
            detail: String::new(),
        }
    }
}

/// Whether `s` lies within `tol` of `(−3/2, −1) ∪ (−1, −1/2)`.
pub fn in_residue_window(s: f64, tol: f64) -> bool {
    s > -1.5 - tol && s < -0.5 + tol
}

struct Returns {
    times: Vec<f64>,
    gaps: Vec<f64>,
}

/// Crossings of a section through the sample at half the recorded length,
/// refined by re-integration.
fn late_returns(traj: &Trajectory, cd: &ConnectionData) -> Option<Returns> {
    let s = &traj.samples;
    if s.len() < 20 {
        return None;
    }
    let r = s.len() / 2;
    let chart = IsoChart::centred_at(&s[r].point());
    let (_, du) = chart.state_u_du(&s[r], cd);
    if du.norm() == 0.0 {
        return None;
    }
    let dir = du / du.norm();
    let val = |u: Cx| (u * dir.conj()).re;
    let along = |u: Cx| (u * dir.conj()).im;
    let mut times = vec![s[r].t];
    let mut pos = vec![0.0];
    let mut prev = chart.u(&s[r].point());
    for w in s[r..].windows(2) {
        let u = chart.u(&w[1].point());
        let (a, b) = (val(prev), val(u));
        if a < 0.0 && b >= 0.0 && prev.norm() < SECTION_REACH && u.norm() < SECTION_REACH {
            let hit = section_crossing(cd, &chart, dir, &w[0], w[1].t - w[0].t).ok()?;
            pos.push(along(chart.u(&hit.point())));
            times.push(hit.t);
        }
        prev = u;
    }
    let gaps = pos.windows(2).map(|p| (p[1] - p[0]).abs()).collect();
    Some(Returns { times, gaps })
}

fn shrinking(gaps: &[f64]) -> bool {
    gaps.len() >= MIN_RETURNS
        && gaps.windows(2).all(|g| g[1] < SHRINK * g[0] || g[1] < GAP_FLOOR)
        && gaps.last().is_some_and(|&g| g < 1e-2)
}

/// External-angle residual of the loop between two nearly coincident
/// returns.
fn loop_residual(traj: &Trajectory, cd: &ConnectionData, t1: f64, t2: f64) -> Option<f64> {
    let a = state_at(traj, cd, t1).ok()?;
    let b = state_at(traj, cd, t2).ok()?;
    let local = IsoChart::centred_at(&a.point());
    let (_, da) = local.state_u_du(&a, cd);
    let (_, db) = local.state_u_du(&b, cd);
    let eps = fold_angle((da / db).arg());
    let mut pts = vec![a];
    pts.extend(traj.samples.iter().filter(|x| x.t > t1 && x.t < t2).copied());
    pts.push(b);
    let chart = IsoChart::with_pole_at(&super::far_point(&pts, cd));
    let poly: Vec<Cx> = pts.iter().map(|x| chart.u(&x.point())).collect();
    let n = poly.len();
    let area: f64 = (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p.re * q.im - p.im * q.re
        })
        .sum();
    let want = if area > 0.0 { 1 } else { 0 };
    let sum: f64 = cd
        .directions
        .iter()
        .filter(|d| {
            let c = chart.u(&d.point);
            let w: f64 = (0..n).map(|i| ((poly[(i + 1) % n] - c) / (poly[i] - c)).arg()).sum();
            (w / (2.0 * PI)).round() as i64 == want
        })
        .map(|d| d.induced_residue.re)
        .sum();
    Some(fold_angle(eps - 2.0 * PI * (1.0 + sum)).abs())
}

/// Alternating visits to small neighbourhoods of distinct directions in the
/// second half of the trajectory.
fn shuttles(traj: &Trajectory, cd: &ConnectionData) -> bool {
    let s = &traj.samples;
    let mut seq: Vec<usize> = Vec::new();
    for x in &s[s.len() / 2..] {
        if let Some((i, d)) = cd.nearest_direction(&x.point()) {
            if d < VISIT_RADIUS && seq.last() != Some(&i) {
                seq.push(i);
            }
        }
    }
    let mut distinct = seq.clone();
    distinct.sort_unstable();
    distinct.dedup();
    seq.len() >= 4 && distinct.len() >= 2
}

/// Heuristic classification of the forward limit set.
pub fn classify_omega_limit(traj: &Trajectory, cd: &ConnectionData, cfg: &IntegratorConfig) -> OmegaReport {
    let mut rep = OmegaReport::undetermined();
    let s = &traj.samples;
    let t_late = s.get(3 * s.len() / 4).map(|x| x.t).unwrap_or(f64::INFINITY);
    for e in &traj.events {
        if let EventKind::SelfIntersection { t1, t2, simple, enclosed_induced_residue, .. } = e.kind {
            rep.self_intersections += 1;
            if t2 >= t_late {
                rep.still_intersecting = true;
            }
            if simple {
                rep.loop_windows.push(LoopWindow {
                    t1,
                    t2,
                    enclosed_induced_residue,
                    in_window: in_residue_window(enclosed_induced_residue, WINDOW_TOL),
                });
            }
        }
    }
    for e in &traj.events {
        match e.kind {
            EventKind::PoleApproach { direction, .. } => {
                rep.class = OmegaClass::Pole { direction };
                rep.detail = format!("approached direction {direction}");
                return rep;
            }
            EventKind::ClosedReturn { multiplier } => {
                rep.class = OmegaClass::Closed;
                rep.detail = format!("returned to the start with multiplier {multiplier}");
                return rep;
            }
            _ => {}
        }
    }
    if rep.self_intersections >= cfg.omega_threshold && rep.still_intersecting {
        rep.class = OmegaClass::InfinitelySelfIntersecting;
        rep.detail = format!("{} self-intersections, still increasing", rep.self_intersections);
        return rep;
    }
    if let Some(ret) = late_returns(traj, cd) {
        rep.return_gaps = ret.gaps.clone();
        if shrinking(&ret.gaps) {
            let n = ret.times.len();
            rep.late_loop_residual = loop_residual(traj, cd, ret.times[n - 2], ret.times[n - 1]);
            rep.class = OmegaClass::AccumulatesClosed;
            rep.detail = format!("{} returns to a late section with shrinking gaps", n - 1);
            return rep;
        }
    }
    if shuttles(traj, cd) {
        rep.class = OmegaClass::CycleCandidate;
        rep.detail = "alternates between neighbourhoods of several directions".into();
        return rep;
    }
    rep.detail = "no limit behaviour identified".into();
    rep
}

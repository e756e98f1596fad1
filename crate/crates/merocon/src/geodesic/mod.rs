//! Integration of the geodesic field `G = X v ∂_ζ − Y v² ∂_v` on the total
//! space of `N^{⊗ν}` over P¹, with chart switching and event detection.

mod dop853;
mod integrate;
mod intersect;
mod omega;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dop853::{Dop853, StepOutcome};
pub use integrate::{advance, integrate, state_at};
pub use intersect::{detect_self_intersections, far_point, loop_multiplier, LoopMultiplier};
pub use omega::{classify_omega_limit, in_residue_window, LoopWindow, OmegaReport};

use crate::algebra::{Chart, Cx, ProjPoint, ZERO};
use crate::error::{Error, Result};
use crate::field::ConnectionData;

/// A point of the total space minus the zero section, in one chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartState {
    pub chart: Chart,
    pub zeta: Cx,
    pub v: Cx,
    pub t: f64,
}

impl ChartState {
    pub fn new(chart: Chart, zeta: Cx, v: Cx, t: f64) -> Self {
        ChartState { chart, zeta, v, t }
    }

    pub fn point(&self) -> ProjPoint {
        ProjPoint::new(self.chart, self.zeta)
    }

    /// The same point in the other chart, `ζ ↦ 1/ζ`, `v ↦ ζ^ν v`.
    pub fn switched(&self, nu: usize) -> Result<ChartState> {
        if self.zeta == ZERO {
            return Err(Error::InvalidInput("chart switch at the centre of the chart".into()));
        }
        Ok(ChartState {
            chart: self.chart.other(),
            zeta: self.zeta.inv(),
            v: self.zeta.powu(nu as u32) * self.v,
            t: self.t,
        })
    }

    pub fn in_chart(&self, chart: Chart, nu: usize) -> Result<ChartState> {
        if chart == self.chart {
            Ok(*self)
        } else {
            self.switched(nu)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_max: f64,
    pub escape_radius: f64,
    pub pole_radius: f64,
    pub max_steps: usize,
    /// Minimum time between recorded samples; 0 records every accepted step.
    pub record_stride: f64,
    /// Cap on the chordal length of a single step.
    pub max_chordal_step: f64,
    /// Chordal tolerance for a return to the initial point.
    pub closure_tol: f64,
    pub detect_closure: bool,
    pub detect_intersections: bool,
    pub omega_threshold: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            t_max: 100.0,
            escape_radius: 1e12,
            pole_radius: 1e-6,
            max_steps: 200_000,
            record_stride: 0.0,
            max_chordal_step: 0.02,
            closure_tol: 1e-6,
            detect_closure: true,
            detect_intersections: true,
            omega_threshold: 25,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("t_max", self.t_max),
            ("escape_radius", self.escape_radius),
            ("pole_radius", self.pole_radius),
            ("max_chordal_step", self.max_chordal_step),
            ("closure_tol", self.closure_tol),
        ];
        for (name, x) in pos {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive and finite")));
            }
        }
        if self.rel_tol < 1e-13 {
            return Err(Error::InvalidInput("rel_tol must be at least 1e-13".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidInput("max_steps must be positive".into()));
        }
        if !(self.record_stride >= 0.0) {
            return Err(Error::InvalidInput("record_stride must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    PoleApproach {
        direction: usize,
        point: ProjPoint,
        distance: f64,
    },
    Escape {
        v_abs: f64,
    },
    ChartSwitch {
        to: Chart,
    },
    SelfIntersection {
        t1: f64,
        t2: f64,
        point: ProjPoint,
        external_angle: f64,
        enclosed_poles: Vec<usize>,
        /// `Σ Re Res(∇°)` over the directions on the left of the loop.
        enclosed_induced_residue: f64,
        angle_residual: f64,
        simple: bool,
        counterclockwise: bool,
        unresolved: bool,
    },
    ClosedReturn {
        multiplier: Cx,
    },
    BlowUpTime,
    StepUnderflow {
        h: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl Event {
    pub fn label(&self) -> &'static str {
        match self.kind {
            EventKind::PoleApproach { .. } => "pole_approach",
            EventKind::Escape { .. } => "escape",
            EventKind::ChartSwitch { .. } => "chart_switch",
            EventKind::SelfIntersection { .. } => "self_intersection",
            EventKind::ClosedReturn { .. } => "closed_return",
            EventKind::BlowUpTime => "blow_up_time",
            EventKind::StepUnderflow { .. } => "step_underflow",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TMax,
    PoleApproach,
    Escape,
    BlowUp,
    ClosedReturn,
    MaxSteps,
    StepUnderflow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum OmegaClass {
    Pole { direction: usize },
    Closed,
    AccumulatesClosed,
    CycleCandidate,
    InfinitelySelfIntersecting,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub nu: usize,
    pub samples: Vec<ChartState>,
    /// `|h(t)|` of the horizontal invariant at each sample.
    pub h_drift: Vec<f64>,
    pub events: Vec<Event>,
    pub invariant_drift: f64,
    pub termination: Termination,
    pub omega: OmegaReport,
}

impl Trajectory {
    pub fn omega_class(&self) -> OmegaClass {
        self.omega.class
    }

    pub fn last(&self) -> &ChartState {
        self.samples.last().expect("trajectory has samples")
    }

    pub fn self_intersections(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| matches!(e.kind, EventKind::SelfIntersection { .. }))
    }

    pub fn count(&self, label: &str) -> usize {
        self.events.iter().filter(|e| e.label() == label).count()
    }
}

/// `ν`-polar coordinates of a nonzero vector of C².
pub fn lift_nu_polar(w: (Cx, Cx), nu: usize) -> Result<ChartState> {
    if w.0 == ZERO && w.1 == ZERO {
        return Err(Error::InvalidInput("cannot lift the origin".into()));
    }
    let n = nu as u32;
    Ok(if w.1.norm() <= w.0.norm() {
        ChartState::new(Chart::Zero, w.1 / w.0, w.0.powu(n), 0.0)
    } else {
        ChartState::new(Chart::Inf, w.0 / w.1, w.1.powu(n), 0.0)
    })
}

/// A preimage of a state under `ν`-polar coordinates.  The `ν`-th root is
/// the one closest to `reference` (principal branch without one).
pub fn project_nu_polar(s: &ChartState, nu: usize, reference: Option<(Cx, Cx)>) -> (Cx, Cx) {
    let base = if nu == 1 { s.v } else { s.v.powf(1.0 / nu as f64) };
    let build = |r: Cx| match s.chart {
        Chart::Zero => (r, s.zeta * r),
        Chart::Inf => (s.zeta * r, r),
    };
    let Some(refw) = reference else { return build(base) };
    (0..nu)
        .map(|k| build(base * Cx::from_polar(1.0, 2.0 * PI * k as f64 / nu as f64)))
        .min_by(|a, b| {
            let da = (a.0 - refw.0).norm() + (a.1 - refw.1).norm();
            let db = (b.0 - refw.0).norm() + (b.1 - refw.1).norm();
            da.total_cmp(&db)
        })
        .expect("at least one root")
}

/// `(dζ/dt, dv/dt)` of the geodesic field.
pub fn geodesic_rhs(s: &ChartState, cd: &ConnectionData) -> (Cx, Cx) {
    let x = cd.x_poly(s.chart).eval(s.zeta);
    let y = cd.y_poly(s.chart).eval(s.zeta);
    (x * s.v, -y * s.v * s.v)
}

/// Unitary chart of P¹ sending `e` to 0 and its antipode to ∞; chordal
/// distances are preserved.
#[derive(Clone, Copy, Debug)]
pub struct IsoChart {
    e: (Cx, Cx),
}

impl IsoChart {
    pub fn centred_at(p: &ProjPoint) -> Self {
        IsoChart { e: p.unit_homog() }
    }

    /// Chart in which `p` is the point at infinity.
    pub fn with_pole_at(p: &ProjPoint) -> Self {
        let (a, b) = p.unit_homog();
        IsoChart { e: (-b.conj(), a.conj()) }
    }

    fn ab(&self, h: (Cx, Cx)) -> (Cx, Cx) {
        let (e1, e2) = self.e;
        (e1 * h.1 - e2 * h.0, e1.conj() * h.0 + e2.conj() * h.1)
    }

    pub fn u_homog(&self, h: (Cx, Cx)) -> Cx {
        let (a, b) = self.ab(h);
        a / b
    }

    pub fn u(&self, p: &ProjPoint) -> Cx {
        self.u_homog(p.homog())
    }

    /// `u` and `du/dt` along a curve with chart velocity `dζ`.
    pub fn u_du(&self, chart: Chart, zeta: Cx, dzeta: Cx) -> (Cx, Cx) {
        let (h, dh) = match chart {
            Chart::Zero => ((Cx::new(1.0, 0.0), zeta), (ZERO, dzeta)),
            Chart::Inf => ((zeta, Cx::new(1.0, 0.0)), (dzeta, ZERO)),
        };
        let (a, b) = self.ab(h);
        let (e1, e2) = self.e;
        let da = e1 * dh.1 - e2 * dh.0;
        let db = e1.conj() * dh.0 + e2.conj() * dh.1;
        (a / b, (da * b - a * db) / (b * b))
    }

    pub fn state_u_du(&self, s: &ChartState, cd: &ConnectionData) -> (Cx, Cx) {
        let (dz, _) = geodesic_rhs(s, cd);
        self.u_du(s.chart, s.zeta, dz)
    }
}

/// Fold an angle into `(−π, π]`.
pub fn fold_angle(a: f64) -> f64 {
    let mut x = a % (2.0 * PI);
    if x <= -PI {
        x += 2.0 * PI;
    } else if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Result of one item of a sweep.
pub type SweepItem = std::result::Result<Trajectory, String>;

/// Independent integrations in parallel; output order matches input order.
/// `MEROCON_THREADS` caps the number of worker threads.
pub fn batch_sweep(cd: &ConnectionData, inits: &[ChartState], cfg: &IntegratorConfig) -> Vec<SweepItem> {
    let run = || inits.par_iter().map(|s| integrate(cd, s, cfg).map_err(|e| e.to_string())).collect::<Vec<_>>();
    match std::env::var("MEROCON_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        _ => run(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    #[test]
    fn lift_examples() {
        let s = lift_nu_polar((c(1.0, 0.0), ZERO), 1).unwrap();
        assert_eq!((s.chart, s.zeta, s.v), (Chart::Zero, ZERO, c(1.0, 0.0)));
        let s = lift_nu_polar((c(1.0, 0.0), c(2.0, 0.0)), 2).unwrap();
        assert_eq!(s.chart, Chart::Inf);
        assert!((s.zeta - 0.5).norm() < 1e-15 && (s.v - 4.0).norm() < 1e-15);
        assert!(lift_nu_polar((ZERO, ZERO), 1).is_err());
    }

    #[test]
    fn lift_is_consistent_across_charts() {
        let eps = c(1e-3, -2e-3);
        let w = (c(1.0, 0.0), c(1.0, 0.0) + eps);
        for nu in 1..=3 {
            let s = lift_nu_polar(w, nu).unwrap();
            let n = nu as u32;
            let in0 = ChartState::new(Chart::Zero, w.1 / w.0, w.0.powu(n), 0.0);
            let ininf = ChartState::new(Chart::Inf, w.0 / w.1, w.1.powu(n), 0.0);
            let a = in0.in_chart(s.chart, nu).unwrap();
            let b = ininf.in_chart(s.chart, nu).unwrap();
            assert!((a.zeta - s.zeta).norm() < 1e-12 && (a.v - s.v).norm() < 1e-12);
            assert!((b.zeta - s.zeta).norm() < 1e-12 && (b.v - s.v).norm() < 1e-12);
            let back = project_nu_polar(&s, nu, Some(w));
            assert!((back.0 - w.0).norm() < 1e-12 && (back.1 - w.1).norm() < 1e-12);
        }
    }

    #[test]
    fn iso_chart_preserves_chordal_distance() {
        let p = ProjPoint::new(Chart::Zero, c(0.3, 0.8));
        let q = ProjPoint::new(Chart::Inf, c(-0.2, 0.5));
        let r = ProjPoint::new(Chart::Zero, c(-1.1, 0.1));
        let ch = IsoChart::centred_at(&r);
        assert!(ch.u(&r).norm() < 1e-15);
        let (up, uq) = (ch.u(&p), ch.u(&q));
        let d = crate::algebra::chordal(up, uq);
        assert!((d - p.chordal(&q)).abs() < 1e-14);
        let far = IsoChart::with_pole_at(&r);
        let ur = far.u(&r);
        assert!(ur.is_nan() || ur.norm() > 1e14);
    }

    #[test]
    fn fold_range() {
        assert!((fold_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((fold_angle(-PI) - PI).abs() < 1e-12);
        assert!((fold_angle(0.5) - 0.5).abs() < 1e-15);
    }
}

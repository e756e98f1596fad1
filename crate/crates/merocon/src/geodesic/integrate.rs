use super::{
    classify_omega_limit, detect_self_intersections, ChartState, Dop853, Event, EventKind, IntegratorConfig,
    IsoChart, OmegaReport, Termination, Trajectory,
};
use crate::algebra::{is_finite, Chart, Cx, ZERO};
use crate::error::{Error, Result};
use crate::field::ConnectionData;
use crate::singularity::{predict_dynamics, Regime};

const SWITCH_OUT: f64 = 1.5;
const ARM_RADIUS: f64 = 1e-3;
const BLOWUP_WINDOW: usize = 10;

/// Right-hand side for the state `[ζ, v, I]` with `I' = Y v`, in one chart;
/// `sign = −1` runs time backwards.
fn rhs_fn(cd: &ConnectionData, chart: Chart, sign: f64) -> impl Fn(&[Cx; 3]) -> [Cx; 3] + '_ {
    let x = cd.x_poly(chart);
    let y = cd.y_poly(chart);
    move |s: &[Cx; 3]| {
        let xv = x.eval(s[0]);
        let yv = y.eval(s[0]);
        let v = s[1];
        [xv * v * sign, -yv * v * v * sign, yv * v * sign]
    }
}

fn chordal_speed(dzeta: Cx, zeta: Cx) -> f64 {
    dzeta.norm() / (1.0 + zeta.norm_sqr())
}

fn step_cap(max_chordal: f64, y: &[Cx; 3], k: &[Cx; 3]) -> f64 {
    let sp = chordal_speed(k[0], y[0]);
    if sp > 0.0 {
        max_chordal / sp
    } else {
        f64::INFINITY
    }
}

fn switch_state(y: &[Cx; 3], nu: usize) -> [Cx; 3] {
    [y[0].inv(), y[0].powu(nu as u32) * y[1], ZERO]
}

/// Accurate flow of the geodesic field for time `dt` (either sign) starting
/// from `s`.  Used for event refinement.
pub fn advance(cd: &ConnectionData, s: &ChartState, dt: f64) -> Result<ChartState> {
    if dt == 0.0 {
        return Ok(*s);
    }
    let sign = dt.signum();
    let span = dt.abs();
    let mut chart = s.chart;
    let mut y = [s.zeta, s.v, ZERO];
    if y[0].norm() > SWITCH_OUT {
        y = switch_state(&y, cd.nu);
        chart = chart.other();
    }
    let mut f = rhs_fn(cd, chart, sign);
    let mut stepper = Dop853::new(1e-13, [1e-15, 0.0, 1e-15]);
    let mut k = f(&y);
    let mut h = stepper.initial_step(&f, &y, &k, span);
    let mut tau = 0.0;
    let mut attempts = 0;
    while tau < span {
        attempts += 1;
        if attempts > 200_000 {
            return Err(Error::NonConvergence("refinement integration did not finish".into()));
        }
        let rest = span - tau;
        let hh = h.min(step_cap(0.02, &y, &k)).min(rest);
        if hh <= 1e-15 * span.max(1.0) * f64::EPSILON {
            break;
        }
        let out = stepper.step(&f, &y, &k, hh);
        if !out.accepted {
            h = out.h_next;
            continue;
        }
        tau = if hh == rest { span } else { tau + hh };
        y = out.y;
        k = out.f;
        h = out.h_next;
        if !(is_finite(y[0]) && is_finite(y[1])) {
            return Err(Error::NonConvergence("refinement integration diverged".into()));
        }
        if y[0].norm() > SWITCH_OUT {
            y = switch_state(&y, cd.nu);
            chart = chart.other();
            f = rhs_fn(cd, chart, sign);
            k = f(&y);
        }
    }
    Ok(ChartState::new(chart, y[0], y[1], s.t + dt))
}

/// State at time `t`, re-integrated from the nearest recorded sample.
pub fn state_at(traj: &Trajectory, cd: &ConnectionData, t: f64) -> Result<ChartState> {
    let s = &traj.samples;
    if s.is_empty() {
        return Err(Error::InvalidInput("empty trajectory".into()));
    }
    let i = s.partition_point(|x| x.t <= t).saturating_sub(1);
    let j = if i + 1 < s.len() && (s[i + 1].t - t).abs() < (t - s[i].t).abs() { i + 1 } else { i };
    advance(cd, &s[j], t - s[j].t)
}

/// Section through the initial point, transverse to the initial velocity.
struct ReturnSection {
    chart: IsoChart,
    start: ChartState,
    du0: Cx,
    dir: Cx,
    armed: bool,
    prev: f64,
    prev_u: f64,
}

impl ReturnSection {
    fn new(cd: &ConnectionData, s: &ChartState) -> Option<Self> {
        let chart = IsoChart::centred_at(&s.point());
        let (_, du0) = chart.state_u_du(s, cd);
        if du0.norm() == 0.0 || !is_finite(du0) {
            return None;
        }
        Some(ReturnSection { chart, start: *s, du0, dir: du0 / du0.norm(), armed: false, prev: 0.0, prev_u: 0.0 })
    }

    fn value(&self, u: Cx) -> f64 {
        (u * self.dir.conj()).re
    }

    /// Feed the next accepted state; true when a `− → +` crossing near the
    /// start has been bracketed.
    fn observe(&mut self, s: &ChartState) -> bool {
        let u = self.chart.u(&s.point());
        let val = self.value(u);
        let un = u.norm();
        let hit = self.armed && self.prev < 0.0 && val >= 0.0 && un < 1.0 && self.prev_u < 1.0;
        if un > ARM_RADIUS {
            self.armed = true;
        }
        self.prev = val;
        self.prev_u = un;
        hit
    }

    fn refine(&self, cd: &ConnectionData, a: &ChartState, span: f64) -> Result<ChartState> {
        section_crossing(cd, &self.chart, self.dir, a, span)
    }
}

/// Crossing of the section `Re(u·d̄) = 0` in `[a.t, a.t + span]`, by
/// safeguarded Newton iteration on re-integrated states.
pub(crate) fn section_crossing(
    cd: &ConnectionData,
    chart: &IsoChart,
    dir: Cx,
    a: &ChartState,
    span: f64,
) -> Result<ChartState> {
    let value = |u: Cx| (u * dir.conj()).re;
    let eval = |dt: f64| -> Result<(ChartState, f64, f64)> {
        let st = advance(cd, a, dt)?;
        let (u, du) = chart.state_u_du(&st, cd);
        Ok((st, value(u), value(du)))
    };
    let (mut lo, mut hi) = (0.0, span);
    let (_, mut s_lo, _) = eval(lo)?;
    let mut dt = span * 0.5;
    let mut best = eval(dt)?;
    let eps = 4.0 * f64::EPSILON * (a.t.abs() + span).max(1.0);
    for _ in 0..60 {
        let (_, s, ds) = best;
        if s == 0.0 {
            break;
        }
        if (s < 0.0) == (s_lo < 0.0) {
            lo = dt;
            s_lo = s;
        } else {
            hi = dt;
        }
        let newton = if ds != 0.0 { dt - s / ds } else { f64::NAN };
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let done = (next - dt).abs() <= eps;
        dt = next;
        best = eval(dt)?;
        if done || hi - lo <= eps {
            break;
        }
    }
    Ok(best.0)
}

/// Integrate the geodesic starting at `init` until an event terminates it
/// or `t_max` is reached.
pub fn integrate(cd: &ConnectionData, init: &ChartState, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if !(is_finite(init.zeta) && is_finite(init.v) && init.t.is_finite()) {
        return Err(Error::InvalidInput("initial state must be finite".into()));
    }
    if init.v == ZERO {
        return Err(Error::InvalidInput("initial state lies on the zero section".into()));
    }
    let nu = cd.nu;
    let t0 = init.t;
    let t_end = t0 + cfg.t_max;
    let mut chart = init.chart;
    let mut y = [init.zeta, init.v, ZERO];
    if y[0].norm() > SWITCH_OUT {
        y = switch_state(&y, nu);
        chart = chart.other();
    }
    let mut f = rhs_fn(cd, chart, 1.0);
    let mut stepper = Dop853::new(cfg.rel_tol, [cfg.abs_tol, 0.0, cfg.abs_tol]);
    let mut k = f(&y);
    let mut t = t0;

    // horizontal invariant: ln v + I is constant within a chart segment
    let mut h_seg = ZERO;
    let mut v_seg = y[1];
    let mut h_total = ZERO;
    let mut invariant_drift: f64 = 0.0;

    let start = ChartState::new(chart, y[0], y[1], t);
    let mut samples = vec![start];
    let mut h_drift = vec![0.0];
    let mut last_recorded = t;
    let mut events: Vec<Event> = Vec::new();
    let mut section = if cfg.detect_closure { ReturnSection::new(cd, &start) } else { None };

    // directions whose neighbourhood geodesics only pass by
    let capturing: Vec<bool> = cd
        .directions
        .iter()
        .map(|d| {
            !matches!(predict_dynamics(&d.report).regime, Regime::GenericEscape | Regime::ClosedOrAccumulatingClosed)
        })
        .collect();
    let mut prev_speed = chordal_speed(k[0], y[0]);
    let mut v_hist: Vec<f64> = vec![y[1].norm()];
    let mut h = stepper.initial_step(&f, &y, &k, cfg.t_max);
    let mut attempts = 0usize;
    let termination;

    loop {
        if t >= t_end {
            termination = Termination::TMax;
            break;
        }
        if attempts >= cfg.max_steps {
            termination = Termination::MaxSteps;
            break;
        }
        attempts += 1;
        let rest = t_end - t;
        let cap = step_cap(cfg.max_chordal_step, &y, &k);
        let hh = h.min(cap).min(rest);
        if hh < 1e-14 * t.abs().max(1.0) && hh < rest {
            let n = v_hist.len();
            let grew = n > BLOWUP_WINDOW && v_hist[n - 1] >= 2.0 * v_hist[n - 1 - BLOWUP_WINDOW];
            if grew {
                events.push(Event { t, kind: EventKind::BlowUpTime });
                termination = Termination::BlowUp;
            } else {
                events.push(Event { t, kind: EventKind::StepUnderflow { h: hh } });
                termination = Termination::StepUnderflow;
            }
            break;
        }
        let out = stepper.step(&f, &y, &k, hh);
        if !out.accepted {
            h = out.h_next;
            continue;
        }
        let prev_state = ChartState::new(chart, y[0], y[1], t);
        t = if hh == rest { t_end } else { t + hh };
        y = out.y;
        k = out.f;
        h = out.h_next;
        if !(is_finite(y[0]) && is_finite(y[1])) {
            return Err(Error::NonConvergence(format!("state became non-finite at t = {t:e}")));
        }

        let log_v = {
            let l = (y[1] / v_seg).ln();
            let target = -y[2];
            let turns = ((target.im - l.im) / (2.0 * std::f64::consts::PI)).round();
            Cx::new(l.re, l.im + 2.0 * std::f64::consts::PI * turns)
        };
        h_total = h_seg + log_v + y[2];
        invariant_drift = invariant_drift.max(h_total.norm());

        if y[0].norm() > SWITCH_OUT {
            y = switch_state(&y, nu);
            chart = chart.other();
            f = rhs_fn(cd, chart, 1.0);
            k = f(&y);
            h_seg = h_total;
            v_seg = y[1];
            events.push(Event { t, kind: EventKind::ChartSwitch { to: chart } });
        }
        let cur = ChartState::new(chart, y[0], y[1], t);
        v_hist.push(y[1].norm());
        if v_hist.len() > BLOWUP_WINDOW + 1 {
            v_hist.remove(0);
        }

        if let Some(sec) = section.as_mut() {
            if sec.observe(&cur) {
                let hit = sec.refine(cd, &prev_state, t - prev_state.t)?;
                let (_, du) = sec.chart.state_u_du(&hit, cd);
                let dist = hit.point().chordal(&sec.start.point());
                let turn = (du / sec.du0).arg().abs();
                if dist < cfg.closure_tol && turn < cfg.closure_tol.sqrt() {
                    samples.push(hit);
                    h_drift.push(h_total.norm());
                    events.push(Event { t: hit.t, kind: EventKind::ClosedReturn { multiplier: du / sec.du0 } });
                    termination = Termination::ClosedReturn;
                    break;
                }
            }
        }

        if cfg.record_stride == 0.0 || t - last_recorded >= cfg.record_stride {
            samples.push(cur);
            h_drift.push(h_total.norm());
            last_recorded = t;
        }

        if y[1].norm() > cfg.escape_radius {
            events.push(Event { t, kind: EventKind::Escape { v_abs: y[1].norm() } });
            termination = Termination::Escape;
            break;
        }
        let speed = chordal_speed(k[0], y[0]);
        if let Some((idx, d)) = cd.nearest_direction(&cur.point()) {
            if d < cfg.pole_radius && speed < prev_speed && capturing[idx] {
                events.push(Event {
                    t,
                    kind: EventKind::PoleApproach { direction: idx, point: cd.directions[idx].point, distance: d },
                });
                termination = Termination::PoleApproach;
                break;
            }
        }
        prev_speed = speed;
    }
    if samples.last().map(|s| s.t) != Some(t) && termination != Termination::ClosedReturn {
        samples.push(ChartState::new(chart, y[0], y[1], t));
        h_drift.push(h_total.norm());
    }

    let mut traj = Trajectory {
        nu,
        samples,
        h_drift,
        events,
        invariant_drift,
        termination,
        omega: OmegaReport::undetermined(),
    };
    if cfg.detect_intersections {
        // a hundred times the coordinate accuracy the step control delivers
        let resolution = 100.0 * (cfg.rel_tol + cfg.abs_tol);
        let mut found = detect_self_intersections(&traj, cd, resolution);
        traj.events.append(&mut found);
        traj.events.sort_by(|a, b| a.t.total_cmp(&b.t));
    }
    traj.omega = classify_omega_limit(&traj, cd, cfg);
    Ok(traj)
}

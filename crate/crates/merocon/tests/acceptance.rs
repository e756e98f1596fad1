//! Acceptance criteria. Each test prints one PASS/FAIL line straight to
//! stdout so the lines survive output capture.

mod common;

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use common::*;
use merocon::algebra::{Chart, ProjPoint};
use merocon::atlas::{classify_quadratic, closed_form_oracle, template_field, AtlasLabel};
use merocon::field::connection_data;
use merocon::geodesic::{
    integrate, lift_nu_polar, project_nu_polar, ChartState, EventKind, IntegratorConfig, OmegaClass, Termination,
    Trajectory,
};
use merocon::singularity::{classify, normalize_formal, SingClass};
use merocon::{ConnectionData, Cx, HomogeneousField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: usize, pass: bool, elapsed: Duration, budget: f64, msg: &str) {
    let ok = pass && elapsed.as_secs_f64() < budget;
    let line = format!(
        "{} criterion {n}: {msg} [{:.2} s, budget {budget} s]\n",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(ok, "criterion {n}: {msg}");
}

fn equal_residue_field() -> HomogeneousField {
    let t = 1.0 / 3.0;
    HomogeneousField::from_real(1, &[-t, 2.0 * t, 0.0], &[0.0, 2.0 * t, -t]).unwrap()
}

fn quiet(t_max: f64) -> IntegratorConfig {
    IntegratorConfig { t_max, detect_intersections: false, detect_closure: false, ..Default::default() }
}

fn residue_at(cd: &ConnectionData, p: &ProjPoint) -> Option<Cx> {
    cd.directions.iter().find(|d| d.point.chordal(p) < 1e-9).map(|d| d.residue)
}

#[test]
fn criterion_01_residue_exactness() {
    let t0 = Instant::now();
    let cd = connection_data(&equal_residue_field()).unwrap();
    let one = Cx::new(1.0, 0.0);
    let pts = [ProjPoint::zero(), ProjPoint::new(Chart::Zero, one), ProjPoint::infinity()];
    let mut worst: f64 = 0.0;
    let mut found = 0;
    for p in &pts {
        if let Some(r) = residue_at(&cd, p) {
            found += 1;
            worst = worst.max((r - 1.0 / 3.0).norm());
        }
    }
    let pass = found == 3 && cd.directions.len() == 3 && worst <= 1e-10;
    report(1, pass, t0.elapsed(), 0.1, &format!("{found}/3 directions found, max |Res - 1/3| = {worst:.2e} (tol 1e-10)"));
}

#[test]
fn criterion_02_global_residue_identities() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_sum, mut worst_ind): (f64, f64) = (0.0, 0.0);
    let mut order_ok = true;
    let mut done = 0;
    while done < 1000 {
        let nu = 1 + done % 3;
        let q = HomogeneousField::random(&mut rng, nu);
        if q.is_dicritical() {
            continue;
        }
        let cd = connection_data(&q).unwrap();
        worst_sum = worst_sum.max((cd.residue_sum() - nu as f64).norm());
        worst_ind = worst_ind.max((cd.induced_residue_sum() + 2.0).norm());
        order_ok &= cd.order_sum() == nu + 2;
        done += 1;
    }
    let pass = worst_sum <= 1e-8 && worst_ind <= 1e-8 && order_ok;
    report(
        2,
        pass,
        t0.elapsed(),
        10.0,
        &format!("1000 fields: max |ΣRes - ν| = {worst_sum:.2e}, max |ΣRes° + 2| = {worst_ind:.2e}, orders sum to ν+2: {order_ok}"),
    );
}

/// Worst relative error of the projected trajectory against `exact`.
fn worst_error(traj: &Trajectory, w0: (Cx, Cx), exact: impl Fn(f64) -> (Cx, Cx)) -> f64 {
    let mut worst: f64 = 0.0;
    let mut prev = w0;
    for s in &traj.samples {
        let w = project_nu_polar(s, 1, Some(prev));
        prev = w;
        let e = exact(s.t);
        worst = worst.max(((w.0 - e.0).norm() + (w.1 - e.1).norm()) / (e.0.norm() + e.1.norm()));
    }
    worst
}

#[test]
fn criterion_03_oracle_equivalence() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let one = Cx::new(1.0, 0.0);
    let mut lines = Vec::new();
    let mut pass = true;

    // C100: z' = 0, w' = −z².  C2001: z' = 0, w' = zw.
    // C3100: z' = z(z − w), w' = 0, a Bernoulli equation in z with 1/z affine in e^{wt}.
    type Exact = fn((Cx, Cx), f64) -> (Cx, Cx);
    let cases: [(AtlasLabel, Exact); 3] = [
        (AtlasLabel::C100, |(z, w), t| (z, w - z * z * t)),
        (AtlasLabel::C2001, |(z, w), t| (z, w * (z * t).exp())),
        (AtlasLabel::C3100, |(z, w), t| (z * w / (z - (z - w) * (w * t).exp()), w)),
    ];
    for (label, exact) in cases {
        let cd = connection_data(&template_field(&label).unwrap()).unwrap();
        let (mut worst, mut lib_gap): (f64, f64) = (0.0, 0.0);
        let mut done = 0;
        while done < 50 {
            let w0 = (rand_c(&mut rng, 1.0), rand_c(&mut rng, 1.0));
            if w0.0.norm() < 0.1 || w0.1.norm() < 0.1 {
                continue;
            }
            if label == AtlasLabel::C3100 {
                // stay clear of the blow-up time of the closed form
                let clear = (0..=500).all(|k| {
                    let t = k as f64 * 0.01;
                    (w0.0 - (w0.0 - w0.1) * (w0.1 * t).exp()).norm() > 0.2 * w0.0.norm()
                });
                if !clear {
                    continue;
                }
            }
            let tr = integrate(&cd, &lift_nu_polar(w0, 1).unwrap(), &quiet(5.0)).unwrap();
            if tr.last().t != 5.0 {
                pass = false;
            }
            worst = worst.max(worst_error(&tr, w0, |t| exact(w0, t)));
            for k in 0..=10 {
                let t = k as f64 * 0.5;
                let (a, b) = (exact(w0, t), closed_form_oracle(&label, w0, t).unwrap());
                lib_gap = lib_gap.max(((a.0 - b.0).norm() + (a.1 - b.1).norm()) / (a.0.norm() + a.1.norm()));
            }
            done += 1;
        }
        pass &= worst <= 1e-6 && lib_gap <= 1e-12;
        lines.push(format!("{label} {worst:.1e}"));
    }

    // Fuchsian model: z(t) = z₀(1 + ct)^{1/(ρ − μ_Y)}, c = (ρ − μ_Y) z₀^{μ_Y} v₀
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 50 {
        let mu = rng.gen_range(1..=3usize);
        let my = mu - 1;
        let rho = rand_c(&mut rng, 2.0);
        let e = rho - my as f64;
        let (z0, v0) = (rand_c(&mut rng, 0.7), rand_c(&mut rng, 1.0));
        let cc = e * v0 * z0.powu(my as u32);
        // keep 1 + cs away from zero and from the branch cut on [0, 5]
        let clear = (0..=500).all(|k| {
            let s = one + cc * (k as f64 * 0.01);
            s.norm() > 0.2 && !(s.im.abs() < 0.05 && s.re < 0.0)
        });
        if !clear || e.norm() < 0.1 || rho.norm() < 0.1 || z0.norm() < 0.05 {
            continue;
        }
        let cd = connection_data(&HomogeneousField::model(mu, rho, Cx::new(0.0, 0.0), 0).unwrap()).unwrap();
        let tr = integrate(&cd, &ChartState::new(Chart::Zero, z0, v0, 0.0), &quiet(5.0)).unwrap();
        if tr.last().t != 5.0 {
            pass = false;
        }
        for s in &tr.samples {
            let z = s.point().coord_in(Chart::Zero).unwrap();
            let exact = z0 * (one + cc * s.t).powc(e.inv());
            worst = worst.max((z - exact).norm() / exact.norm());
        }
        done += 1;
    }
    pass &= worst <= 1e-6;
    lines.push(format!("model {worst:.1e}"));
    report(3, pass, t0.elapsed(), 30.0, &format!("50 starts each, max rel err: {} (tol 1e-6)", lines.join(", ")));
}

#[test]
fn criterion_04_conservation() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mu = rng.gen_range(1..=3usize);
        let rho = loop {
            let r = rand_c(&mut rng, 2.0);
            if r.norm() > 0.1 {
                break r;
            }
        };
        let cd = connection_data(&HomogeneousField::model(mu, rho, Cx::new(0.0, 0.0), 0).unwrap()).unwrap();
        let s = ChartState::new(Chart::Zero, rand_c(&mut rng, 0.7), rand_c(&mut rng, 1.0), 0.0);
        let cfg = IntegratorConfig { rel_tol: 1e-10, ..quiet(10.0) };
        worst = worst.max(integrate(&cd, &s, &cfg).unwrap().invariant_drift);
    }
    report(4, worst <= 1e-8, t0.elapsed(), 30.0, &format!("100 models on [0,10]: max drift {worst:.2e} (tol 1e-8)"));
}

fn crossing_times(tr: &Trajectory) -> Vec<(f64, f64)> {
    tr.events
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::SelfIntersection { t1, t2, .. } => Some((t1, t2)),
            _ => None,
        })
        .collect()
}

#[test]
fn criterion_05_figure_1() {
    // z = (1 + 0.1(1+i)t)^{10}: the base runs along a line at distance 1/√2
    // from 0, so z(t₁) = z(t₂) exactly when the two base points are mirror
    // images about the foot t = −5 at angle 2πk/10, i.e. t = −5 ± 5 tan(πk/10).
    // Forward time never crosses (|z| increases); the two pairs with k = 1, 2
    // lie on the backward half, which is integrated as the forward geodesic
    // with the velocity reversed.
    let t0 = Instant::now();
    let cd = connection_data(&HomogeneousField::model(1, Cx::new(0.1, 0.0), Cx::new(0.0, 0.0), 0).unwrap()).unwrap();
    let v0 = Cx::new(1.0, 1.0);
    let cfg = IntegratorConfig { t_max: 1e4, ..Default::default() };
    let back = integrate(&cd, &ChartState::new(Chart::Zero, Cx::new(1.0, 0.0), -v0, 0.0), &cfg).unwrap();
    let fwd = integrate(&cd, &ChartState::new(Chart::Zero, Cx::new(1.0, 0.0), v0, 0.0), &cfg).unwrap();
    let mut got = crossing_times(&back);
    got.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut want: Vec<(f64, f64)> = [2.0, 1.0]
        .iter()
        .map(|k: &f64| {
            let d = 5.0 * (PI * k / 10.0).tan();
            (5.0 - d, 5.0 + d)
        })
        .collect();
    want.sort_by(|a, b| a.0.total_cmp(&b.0));
    let times_ok = got.len() == 2 && got.iter().zip(&want).all(|(g, w)| (g.0 - w.0).abs() < 1e-6 && (g.1 - w.1).abs() < 1e-6);
    let at_infinity = back.termination == Termination::PoleApproach
        && back.last().point().chordal(&ProjPoint::infinity()) < 1e-5
        && back.events.iter().all(|e| match e.kind {
            EventKind::SelfIntersection { t2, .. } => t2 < back.last().t,
            _ => true,
        });
    let pass = times_ok && at_infinity && crossing_times(&fwd).is_empty();
    report(
        5,
        pass,
        t0.elapsed(),
        5.0,
        &format!(
            "backward half: {} crossings at {:?} (exact {:?}), then {:?} at ζ = ∞; forward half: {} crossings",
            got.len(),
            got.iter().map(|p| (format!("{:.4}", -p.1), format!("{:.4}", -p.0))).collect::<Vec<_>>(),
            want.iter().map(|p| (format!("{:.4}", -p.1), format!("{:.4}", -p.0))).collect::<Vec<_>>(),
            back.termination,
            crossing_times(&fwd).len()
        ),
    );
}

#[test]
fn criterion_06_figure_2() {
    let t0 = Instant::now();
    let cd = connection_data(&HomogeneousField::model(1, Cx::new(0.0, 1.0), Cx::new(0.0, 0.0), 0).unwrap()).unwrap();
    let s = ChartState::new(Chart::Zero, Cx::new(0.5, 0.5), Cx::new(1.0, 0.0), 0.0);
    let tr = integrate(&cd, &s, &IntegratorConfig { t_max: 1e18, ..Default::default() }).unwrap();
    let res = tr.omega.late_loop_residual;
    let pass = tr.omega.class == OmegaClass::AccumulatesClosed && res.is_some_and(|r| r <= 1e-2);
    report(6, pass, t0.elapsed(), 10.0, &format!("omega {:?}, late-loop residual {res:?} (tol 1e-2)", tr.omega.class));
}

#[test]
fn criterion_07_figure_3() {
    let t0 = Instant::now();
    let cd = connection_data(&equal_residue_field()).unwrap();
    let s = lift_nu_polar((Cx::new(0.0, 1.0), Cx::new(-1.0, 1.0)), 1).unwrap();
    let tr = integrate(&cd, &s, &IntegratorConfig { t_max: 100.0, ..Default::default() }).unwrap();
    let n = tr.count("self_intersection");
    let in_window = |x: f64| (x > -1.5 && x < -1.0) || (x > -1.0 && x < -0.5);
    let (mut simple, mut resolved, mut bad) = (0, 0, 0);
    let mut worst: f64 = 0.0;
    for e in &tr.events {
        if let EventKind::SelfIntersection { simple: true, ref enclosed_poles, angle_residual, unresolved, .. } = e.kind {
            simple += 1;
            // exact induced residues: 1/3 − 1 at each direction
            let sum = -2.0 / 3.0 * enclosed_poles.len() as f64;
            if !in_window(sum) {
                bad += 1;
            }
            if !unresolved {
                resolved += 1;
                worst = worst.max(angle_residual);
            }
        }
    }
    let pass = n >= 25 && tr.omega.still_intersecting && bad == 0 && simple > 0 && worst <= 1e-2;
    report(
        7,
        pass,
        t0.elapsed(),
        30.0,
        &format!(
            "{n} self-intersections (still increasing: {}), {simple} simple loops, {bad} outside the residue window, \
             max angle residual {worst:.1e} over {resolved} resolved loops (tol 1e-2), omega {:?}",
            tr.omega.still_intersecting, tr.omega.class
        ),
    );
}

#[test]
fn criterion_08_loop_multiplier() {
    let t0 = Instant::now();
    let g = 0.3;
    let ig = Cx::new(0.0, g);
    let z = Cx::new(0.0, 0.0);
    let q = HomogeneousField::new(1, vec![ig, z, z], vec![z, Cx::new(1.0, 0.0) + ig, z]).unwrap();
    let cd = connection_data(&q).unwrap();
    // iγv₀ real and nonzero gives a closed geodesic
    let s = ChartState::new(Chart::Zero, Cx::new(0.5, 0.0), Cx::new(0.0, 0.2), 0.0);
    let tr = integrate(&cd, &s, &IntegratorConfig { t_max: 200.0, ..Default::default() }).unwrap();
    let m = tr.events.iter().find_map(|e| match e.kind {
        EventKind::ClosedReturn { multiplier } => Some(multiplier),
        _ => None,
    });
    let want = (-2.0 * PI * g).exp();
    let err = m.map(|m| (m.norm() - want).abs());
    let pass = err.is_some_and(|e| e <= 1e-4);
    report(8, pass, t0.elapsed(), 5.0, &format!("multiplier {m:?}, |m| - e^(-0.6π) = {err:?} (tol 1e-4)"));
}

/// Coefficient of `z^{m−1}` in `(Y/z^{μ_Y}) / (X/z^{μ_X})`: the residue of `Y/X dz`.
fn laurent_residue(x: &[Cx], y: &[Cx], mu: usize, my: usize) -> Cx {
    let m = mu - my;
    let a: Vec<Cx> = x[mu..].to_vec();
    let b: Vec<Cx> = y[my..].to_vec();
    // long division q = b / a, one coefficient at a time
    let mut q: Vec<Cx> = Vec::with_capacity(m);
    for k in 0..m {
        let mut acc = b[k];
        for j in 0..k {
            acc -= q[j] * a[k - j];
        }
        q.push(acc / a[0]);
    }
    q[m - 1]
}

#[test]
fn criterion_09_normal_form_round_trip() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst_res, mut worst_par): (f64, f64) = (0.0, 0.0);
    let mut pass = true;
    let mut resonant_count = 0;
    for i in 0..200 {
        let mu = 1 + i % 3;
        let my = mu - 1;
        let resonant = i % 2 == 1;
        let (rho, a, n) = if resonant {
            let k = (1..=5).filter(|&k| k != my).nth(rng.gen_range(0..4)).unwrap();
            (Cx::new(my as f64 - k as f64, 0.0), rand_c(&mut rng, 1.0), k)
        } else {
            let r = loop {
                let p = rand_c(&mut rng, 3.0);
                if p.norm() > 0.1 && (0..=20).all(|k| (p - (my as f64 - k as f64)).norm() > 0.1) {
                    break p;
                }
            };
            (r, Cx::new(0.0, 0.0), 0)
        };
        let g = conjugated_normal(&mut rng, mu, my, rho, a, n, 24);
        let (normal, rep, _) = normalize_formal(&g, 16).unwrap();
        pass &= rep.mu_x == mu && rep.sing_class == SingClass::Fuchsian && rep.resonant == resonant;
        worst_par = worst_par.max((rep.rho - rho).norm());
        if resonant {
            resonant_count += 1;
            worst_par = worst_par.max((rep.resonant_index.unwrap() - a).norm());
        }
        for k in mu + 1..=mu + 16 {
            worst_res = worst_res.max(normal.x.coeff(k).norm());
        }
        for k in my + 1..=my + 16 {
            if Some(k - my) != rep.resonance_degree {
                worst_res = worst_res.max(normal.y.coeff(k).norm());
            }
        }
    }
    let mut worst_idx: f64 = 0.0;
    for _ in 0..100 {
        let my = rng.gen_range(0..3usize);
        let m = rng.gen_range(2..4usize);
        let rho = rand_param(&mut rng);
        let g = germ(&mut rng, my + m, my, rho, 24);
        let rep = classify(&g).unwrap();
        pass &= rep.sing_class == SingClass::Irregular;
        let x: Vec<Cx> = (0..=24).map(|k| g.x.coeff(k)).collect();
        let y: Vec<Cx> = (0..=24).map(|k| g.y.coeff(k)).collect();
        let res = laurent_residue(&x, &y, my + m, my);
        let (_, nrep, _) = normalize_formal(&g, 16).unwrap();
        let idx = nrep.resonant_index.unwrap();
        worst_idx = worst_idx.max((idx - res / rep.rho).norm() / (1.0 + idx.norm()));
    }
    pass &= worst_res <= 1e-9 && worst_par <= 1e-9 && worst_idx <= 1e-8;
    report(
        9,
        pass,
        t0.elapsed(),
        30.0,
        &format!(
            "200 Fuchsian germs ({resonant_count} resonant): max residual {worst_res:.1e}, max parameter error {worst_par:.1e} \
             (tol 1e-9); 100 irregular: max |a - Res/ρ| {worst_idx:.1e} (tol 1e-8)"
        ),
    );
}

#[test]
fn criterion_10_atlas_round_trip() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut wrong, mut worst_par, mut worst_res): (usize, f64, f64) = (0, 0.0, 0.0);
    for kind in 0..11 {
        for _ in 0..100 {
            let label = rand_label(&mut rng, kind);
            let q = template_field(&label).unwrap().conjugate(&rand_gl2(&mut rng, 1e3)).unwrap();
            match classify_quadratic(&q) {
                Ok(r) if r.label.name() == label.name() => {
                    worst_par = worst_par.max(label_distance(&label, &r.label));
                    worst_res = worst_res.max(r.residual);
                }
                _ => wrong += 1,
            }
        }
    }
    let pass = wrong == 0 && worst_par <= 1e-6 && worst_res <= 1e-8;
    report(
        10,
        pass,
        t0.elapsed(),
        60.0,
        &format!("1100 draws: {wrong} wrong labels, max parameter error {worst_par:.1e} (tol 1e-6), max residual {worst_res:.1e} (tol 1e-8)"),
    );
}

#[test]
fn criterion_11_dynamics_prediction() {
    // ζ decays like t^{Re(1/ρ)}, so ρ is drawn from |ρ + 1| ≤ 3/4 where
    // Re(1/ρ) ≤ −4/7 and the approach is resolved within t_max
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut good = 0;
    for _ in 0..100 {
        let rho = loop {
            let p = Cx::new(-1.0, 0.0) + rand_c(&mut rng, 0.75);
            if (p + 1.0).norm() <= 0.75 {
                break p;
            }
        };
        let cd = connection_data(&template_field(&AtlasLabel::C210 { rho }).unwrap()).unwrap();
        let target = cd.directions.iter().position(|d| d.point.chordal(&ProjPoint::zero()) < 1e-12).unwrap();
        let w0 = loop {
            let w = (rand_c(&mut rng, 1.0), rand_c(&mut rng, 1.0));
            if w.0.norm() > 0.05 && w.1.norm() > 0.05 {
                break w;
            }
        };
        let s = lift_nu_polar(w0, 1).unwrap();
        let cfg = IntegratorConfig { t_max: 1e30, pole_radius: 1e-14, ..Default::default() };
        let tr = integrate(&cd, &s, &cfg).unwrap();
        if tr.omega.class == (OmegaClass::Pole { direction: target }) && tr.last().v.norm() < 1e-3 * s.v.norm() {
            good += 1;
        }
    }
    report(11, good >= 95, t0.elapsed(), 60.0, &format!("{good}/100 starts reach pole([1:0]) with |v| below 1e-3 of its start (need 95)"));
}

#[test]
fn criterion_12_periodic_family() {
    let t0 = Instant::now();
    let cd = connection_data(&template_field(&AtlasLabel::C2001).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    let mut closed = 0;
    for _ in 0..10 {
        // w = w₀ e^{z₀t} with z₀ = ia is periodic with period 2π/a
        let a = rng.gen_range(0.5..2.0);
        let w0 = (Cx::new(0.0, a), rand_c(&mut rng, 1.0));
        let s = lift_nu_polar(w0, 1).unwrap();
        let tr = integrate(&cd, &s, &IntegratorConfig { t_max: 3.0 * 2.0 * PI / a, ..Default::default() }).unwrap();
        for e in &tr.events {
            if let EventKind::ClosedReturn { multiplier } = e.kind {
                closed += 1;
                worst = worst.max((multiplier - 1.0).norm());
            }
        }
    }
    let pass = closed == 10 && worst <= 1e-6;
    report(12, pass, t0.elapsed(), 5.0, &format!("{closed}/10 closed returns, max |multiplier - 1| = {worst:.1e} (tol 1e-6)"));
}

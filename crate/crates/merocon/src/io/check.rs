use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{Chart, Cx};
use crate::error::Result;
use crate::field::{connection_data, ConnectionData, HomogeneousField};
use crate::geodesic::{geodesic_rhs, integrate, ChartState, EventKind, IntegratorConfig};

const SUM_TOL: f64 = 1e-8;
const CHART_TOL: f64 = 1e-8;
const ANGLE_TOL: f64 = 1e-2;
const PROBES: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

fn row(name: &str, value: f64, tolerance: f64, detail: String) -> CheckRow {
    CheckRow { name: name.into(), passed: value <= tolerance, value, tolerance, detail }
}

fn chart_rows(cd: &ConnectionData, rng: &mut ChaCha8Rng) -> Vec<CheckRow> {
    let mut worst: f64 = 0.0;
    let mut seen = 0;
    for d in cd.directions.iter().filter(|d| d.report.sing_class != crate::singularity::SingClass::Apparent) {
        let (Some(z0), Some(zi)) = (d.point.coord_in(Chart::Zero), d.point.coord_in(Chart::Inf)) else { continue };
        if z0.norm() < 1e-6 || zi.norm() < 1e-6 {
            continue;
        }
        let a = cd.residue_in_chart(Chart::Zero, z0);
        let b = cd.residue_in_chart(Chart::Inf, zi);
        worst = worst.max((a - b).norm()).max((a - d.residue).norm());
        seen += 1;
    }
    let residues = row("residue_chart_consistency", worst, CHART_TOL, format!("{seen} directions seen in both charts"));

    // chain rule for ζ∞ = 1/ζ, v∞ = ζ^ν v
    let nu = cd.nu as i32;
    let mut worst: f64 = 0.0;
    for _ in 0..32 {
        let z = Cx::from_polar(rng.gen_range(0.3..3.0), rng.gen_range(0.0..std::f64::consts::TAU));
        let v = Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let s = ChartState::new(Chart::Zero, z, v, 0.0);
        let (dz, dv) = geodesic_rhs(&s, cd);
        let Ok(o) = s.switched(cd.nu) else { continue };
        let (dzi, dvi) = geodesic_rhs(&o, cd);
        let want_z = -dz / (z * z);
        let want_v = z.powi(nu) * dv + (nu as f64) * z.powi(nu - 1) * dz * v;
        let scale = 1.0 + want_z.norm() + want_v.norm();
        worst = worst.max(((dzi - want_z).norm() + (dvi - want_v).norm()) / scale);
    }
    vec![residues, row("geodesic_chart_consistency", worst, CHART_TOL, "32 random points".into())]
}

fn gauss_bonnet_row(cd: &ConnectionData, rng: &mut ChaCha8Rng) -> CheckRow {
    let cfg = IntegratorConfig { t_max: 20.0, max_steps: 40_000, omega_threshold: usize::MAX, ..Default::default() };
    let mut worst: f64 = 0.0;
    let mut loops = 0;
    for _ in 0..PROBES {
        let z = Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let v = Cx::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
        let Ok(tr) = integrate(cd, &ChartState::new(Chart::Zero, z, v, 0.0), &cfg) else { continue };
        for e in &tr.events {
            if let EventKind::SelfIntersection { angle_residual, unresolved: false, .. } = e.kind {
                worst = worst.max(angle_residual);
                loops += 1;
            }
        }
    }
    row("gauss_bonnet_probe_loops", worst, ANGLE_TOL, format!("{loops} loops on {PROBES} probe geodesics"))
}

/// Invariant checks on given connection data.
pub fn check_connection(cd: &ConnectionData, seed: u64) -> Vec<CheckRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nu = cd.nu as f64;
    let mut rows = vec![
        row("residue_sum", (cd.residue_sum() - nu).norm(), SUM_TOL, format!("sum {} against {nu}", cd.residue_sum())),
        row(
            "induced_residue_sum",
            (cd.induced_residue_sum() + 2.0).norm(),
            SUM_TOL,
            format!("sum {} against -2", cd.induced_residue_sum()),
        ),
        row(
            "order_sum",
            cd.order_sum().abs_diff(cd.nu + 2) as f64,
            0.0,
            format!("sum {} against {}", cd.order_sum(), cd.nu + 2),
        ),
        row(
            "induced_residue_relation",
            cd.directions
                .iter()
                .map(|d| (d.induced_residue - (d.residue - d.mu_x as f64)).norm())
                .fold(0.0, f64::max),
            SUM_TOL,
            "Res° = Res - ord at every direction".into(),
        ),
    ];
    rows.extend(chart_rows(cd, &mut rng));
    rows.push(gauss_bonnet_row(cd, &mut rng));
    rows
}

pub fn check_field(q: &HomogeneousField, seed: u64) -> Result<Vec<CheckRow>> {
    Ok(check_connection(&connection_data(q)?, seed))
}

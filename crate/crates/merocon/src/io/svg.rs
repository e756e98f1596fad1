use std::fmt::Write;

use crate::algebra::{Chart, Cx, ProjPoint};
use crate::field::ConnectionData;
use crate::geodesic::{EventKind, Trajectory};
use crate::singularity::SingClass;

const SIZE: f64 = 600.0;
/// Points farther out than this in chart 0 are treated as near ∞.
const FAR: f64 = 8.0;

fn chart0(p: &ProjPoint) -> Option<Cx> {
    p.coord_in(Chart::Zero).filter(|z| z.norm() <= FAR)
}

/// Static plot of the projected curve in chart-0 coordinates, with the
/// characteristic directions and self-intersections marked.
pub fn trajectory_svg(traj: &Trajectory, cd: &ConnectionData) -> String {
    let pts: Vec<Option<Cx>> = traj.samples.iter().map(|s| chart0(&s.point())).collect();
    let poles: Vec<(Cx, SingClass)> =
        cd.directions.iter().filter_map(|d| chart0(&d.point).map(|z| (z, d.sing_class))).collect();

    let (mut lo, mut hi) = (Cx::new(-1.0, -1.0), Cx::new(1.0, 1.0));
    for z in pts.iter().flatten().chain(poles.iter().map(|p| &p.0)) {
        lo = Cx::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = Cx::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    let span = (hi.re - lo.re).max(hi.im - lo.im) * 1.1;
    let mid = (lo + hi) * 0.5;
    let scale = SIZE / span;
    let map = |z: Cx| ((z.re - mid.re) * scale + SIZE / 2.0, SIZE / 2.0 - (z.im - mid.im) * scale);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (ax, ay) = map(Cx::new(0.0, 0.0));
    let _ = writeln!(
        s,
        r##"<g stroke="#ccc" stroke-width="1"><line x1="0" y1="{ay:.3}" x2="{SIZE}" y2="{ay:.3}"/><line x1="{ax:.3}" y1="0" x2="{ax:.3}" y2="{SIZE}"/></g>"##
    );

    // break the polyline near ∞ and across long jumps
    let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
    let mut prev: Option<Cx> = None;
    for z in &pts {
        match (z, prev) {
            (Some(z), Some(p)) if (z - p).norm() < span / 4.0 => runs.last_mut().expect("run").push(map(*z)),
            (Some(z), _) => runs.push(vec![map(*z)]),
            (None, _) => runs.push(Vec::new()),
        }
        prev = *z;
    }
    for run in runs.iter().filter(|r| r.len() > 1) {
        let _ = write!(s, r##"<polyline fill="none" stroke="#1f4e99" stroke-width="1.2" points=""##);
        for (i, (x, y)) in run.iter().enumerate() {
            let _ = write!(s, "{}{x:.3},{y:.3}", if i == 0 { "" } else { " " });
        }
        let _ = writeln!(s, r#""/>"#);
    }
    if let Some(Some(z)) = pts.first() {
        let (x, y) = map(*z);
        let _ = writeln!(s, r##"<circle cx="{x:.3}" cy="{y:.3}" r="4" fill="#2a9d2a"/>"##);
    }
    for (z, class) in &poles {
        let (x, y) = map(*z);
        let fill = match class {
            SingClass::Apparent => "white",
            SingClass::Fuchsian => "#c0392b",
            SingClass::Irregular => "#7d3c98",
        };
        let _ = writeln!(s, r##"<circle cx="{x:.3}" cy="{y:.3}" r="5" fill="{fill}" stroke="black"/>"##);
    }
    for e in &traj.events {
        if let EventKind::SelfIntersection { point, .. } = &e.kind {
            if let Some(z) = chart0(point) {
                let (x, y) = map(z);
                let _ = writeln!(
                    s,
                    r##"<path d="M{:.3},{:.3}l6,6m0,-6l-6,6" stroke="#e67e22" stroke-width="1.5"/>"##,
                    x - 3.0,
                    y - 3.0
                );
            }
        }
    }
    if cd.directions.iter().any(|d| chart0(&d.point).is_none()) {
        let _ = writeln!(s, r#"<text x="8" y="18" font-size="12" font-family="sans-serif">pole near infinity</text>"#);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Chart, Cx};
    use crate::field::{connection_data, HomogeneousField};
    use crate::geodesic::{integrate, ChartState, IntegratorConfig};

    #[test]
    fn same_input_same_bytes() {
        let cd = connection_data(&HomogeneousField::model(1, Cx::new(0.0, 1.0), Cx::new(0.0, 0.0), 0).unwrap()).unwrap();
        let s = ChartState::new(Chart::Zero, Cx::new(0.5, 0.5), Cx::new(1.0, 0.0), 0.0);
        let cfg = IntegratorConfig { t_max: 100.0, ..Default::default() };
        let a = trajectory_svg(&integrate(&cd, &s, &cfg).unwrap(), &cd);
        let b = trajectory_svg(&integrate(&cd, &s, &cfg).unwrap(), &cd);
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        assert_eq!(a, b);
    }
}

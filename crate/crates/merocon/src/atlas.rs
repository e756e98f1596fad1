//! Normal forms of quadratic homogeneous fields on C² under linear
//! conjugation, with closed-form integral curves where they exist.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{Cx, ProjPoint, ONE, ZERO};
use crate::error::{Error, Result};
use crate::field::{
    connection_data, leaf_closure_class, mat_inv, mat_mul, monodromy_info, ConnectionData, HomogeneousField,
    LeafClosure, Mat2, MonodromyInfo,
};
use crate::singularity::{predict_dynamics, DynamicsPrediction, SingClass, SingularityReport};

/// Accepted relative coefficient distance between `L⋆Q` and the template.
pub const ATLAS_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "label")]
pub enum AtlasLabel {
    #[serde(rename = "INF")]
    Inf,
    C100,
    C110,
    C111,
    C2001,
    C2011,
    C210 {
        rho: Cx,
    },
    C211 {
        rho: Cx,
    },
    C3100,
    #[serde(rename = "C3r10")]
    C3Rho10 {
        rho: Cx,
    },
    #[serde(rename = "C3rt1")]
    C3RhoTau1 {
        rho: Cx,
        tau: Cx,
    },
}

impl AtlasLabel {
    pub fn name(&self) -> &'static str {
        match self {
            AtlasLabel::Inf => "INF",
            AtlasLabel::C100 => "C100",
            AtlasLabel::C110 => "C110",
            AtlasLabel::C111 => "C111",
            AtlasLabel::C2001 => "C2001",
            AtlasLabel::C2011 => "C2011",
            AtlasLabel::C210 { .. } => "C210",
            AtlasLabel::C211 { .. } => "C211",
            AtlasLabel::C3100 => "C3100",
            AtlasLabel::C3Rho10 { .. } => "C3r10",
            AtlasLabel::C3RhoTau1 { .. } => "C3rt1",
        }
    }

    pub fn params(&self) -> Vec<Cx> {
        match *self {
            AtlasLabel::C210 { rho } | AtlasLabel::C211 { rho } | AtlasLabel::C3Rho10 { rho } => vec![rho],
            AtlasLabel::C3RhoTau1 { rho, tau } => vec![rho, tau],
            _ => Vec::new(),
        }
    }

    /// Label from its name and parameter list.
    pub fn from_parts(name: &str, params: &[Cx]) -> Result<AtlasLabel> {
        let want = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} takes {n} parameter(s), got {}", params.len())))
            }
        };
        let label = match name.to_ascii_uppercase().as_str() {
            "INF" => want(0).map(|_| AtlasLabel::Inf),
            "C100" => want(0).map(|_| AtlasLabel::C100),
            "C110" => want(0).map(|_| AtlasLabel::C110),
            "C111" => want(0).map(|_| AtlasLabel::C111),
            "C2001" => want(0).map(|_| AtlasLabel::C2001),
            "C2011" => want(0).map(|_| AtlasLabel::C2011),
            "C210" => want(1).map(|_| AtlasLabel::C210 { rho: params[0] }),
            "C211" => want(1).map(|_| AtlasLabel::C211 { rho: params[0] }),
            "C3100" => want(0).map(|_| AtlasLabel::C3100),
            "C3R10" => want(1).map(|_| AtlasLabel::C3Rho10 { rho: params[0] }),
            "C3RT1" => want(2).map(|_| AtlasLabel::C3RhoTau1 { rho: params[0], tau: params[1] }),
            _ => Err(Error::InvalidInput(format!("unknown atlas label {name}"))),
        }?;
        label.check()?;
        Ok(label)
    }

    /// Parameter constraints of the normal form.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(format!("{}: {msg}", self.name())));
        match *self {
            AtlasLabel::C210 { rho } | AtlasLabel::C211 { rho } if rho == ZERO => bad("rho must be nonzero"),
            AtlasLabel::C3Rho10 { rho } if rho == ZERO || rho == ONE => bad("rho must differ from 0 and 1"),
            AtlasLabel::C3RhoTau1 { rho, tau } if rho == ZERO || tau == ZERO || rho + tau == ONE => {
                bad("rho, tau must be nonzero with rho + tau != 1")
            }
            AtlasLabel::C210 { rho } | AtlasLabel::C211 { rho } | AtlasLabel::C3Rho10 { rho }
                if !crate::algebra::is_finite(rho) =>
            {
                bad("non-finite parameter")
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for AtlasLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.params();
        if p.is_empty() {
            write!(f, "{}", self.name())
        } else {
            let s: Vec<String> = p.iter().map(|c| format!("{c}")).collect();
            write!(f, "{}({})", self.name(), s.join(", "))
        }
    }
}

/// Coefficients of the normal form.
pub fn template_field(label: &AtlasLabel) -> Result<HomogeneousField> {
    label.check()?;
    let o = ONE;
    let z = ZERO;
    let (q1, q2) = match *label {
        AtlasLabel::Inf => ([o, z, z], [z, o, z]),
        AtlasLabel::C100 => ([z, z, z], [-o, z, z]),
        AtlasLabel::C110 => ([-o, z, z], [-o, -o, z]),
        AtlasLabel::C111 => ([z, -o, z], [-o, z, -o]),
        AtlasLabel::C2001 => ([z, z, z], [z, o, z]),
        AtlasLabel::C2011 => ([z, o, z], [z, o, o]),
        AtlasLabel::C210 { rho } => ([-rho, z, z], [z, o - rho, z]),
        AtlasLabel::C211 { rho } => ([rho, o, z], [z, o + rho, o]),
        AtlasLabel::C3100 => ([o, -o, z], [z, z, z]),
        AtlasLabel::C3Rho10 { rho } => ([-rho, rho, z], [z, o - rho, rho - o]),
        AtlasLabel::C3RhoTau1 { rho, tau } => ([-rho, o - tau, z], [z, o - rho, -tau]),
    };
    HomogeneousField::new(1, q1.to_vec(), q2.to_vec())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasReport {
    #[serde(flatten)]
    pub label: AtlasLabel,
    /// `L` with `L⋆Q` equal to the template.
    pub conjugacy: Mat2,
    /// Relative coefficient distance between `L⋆Q` and the template.
    pub residual: f64,
}

fn diag(a: Cx, b: Cx) -> Mat2 {
    [[a, ZERO], [ZERO, b]]
}

fn scal(l: &Mat2, s: Cx) -> Mat2 {
    [[l[0][0] * s, l[0][1] * s], [l[1][0] * s, l[1][1] * s]]
}

/// `L` with `L⁻¹ = [a | b]`, sending `a ↦ [1:0]` and `b ↦ [0:1]`.
fn frame(a: &ProjPoint, b: &ProjPoint) -> Result<Mat2> {
    let (a1, a2) = a.unit_homog();
    let (b1, b2) = b.unit_homog();
    mat_inv(&[[a1, b1], [a2, b2]])
}

fn coeffs(q: &HomogeneousField) -> ([Cx; 3], [Cx; 3]) {
    ([q.q1[0], q.q1[1], q.q1[2]], [q.q2[0], q.q2[1], q.q2[2]])
}

fn relative_distance(a: &HomogeneousField, b: &HomogeneousField) -> f64 {
    let diff = a.q1.iter().zip(&b.q1).chain(a.q2.iter().zip(&b.q2)).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    diff / b.scale().max(f64::MIN_POSITIVE)
}

fn nonzero(x: Cx, what: &str) -> Result<Cx> {
    if x == ZERO || !crate::algebra::is_finite(x.inv()) {
        Err(Error::ClassificationFailed(format!("vanishing {what}")))
    } else {
        Ok(x)
    }
}

/// Finish a candidate: conjugate, compare with the template.
fn candidate(q: &HomogeneousField, label: AtlasLabel, l: Mat2) -> Result<AtlasReport> {
    label.check().map_err(|e| Error::ClassificationFailed(e.to_string()))?;
    let t = template_field(&label)?;
    let moved = q.conjugate(&l)?;
    Ok(AtlasReport { label, conjugacy: l, residual: relative_distance(&moved, &t) })
}

fn dicritical_form(q: &HomogeneousField) -> Result<AtlasReport> {
    // Q = ℓ·(z, w) with ℓ = l₁z + l₂w; the first row of L is (l₁, l₂)
    let (l1, l2) = (q.q1[0], q.q2[2]);
    let l = [[l1, l2], [-l2.conj(), l1.conj()]];
    candidate(q, AtlasLabel::Inf, l)
}

fn one_direction(q: &HomogeneousField, d: &crate::field::CharDirection) -> Result<AtlasReport> {
    let (a, b) = d.point.unit_homog();
    let other = ProjPoint::from_homog(-b.conj(), a.conj()).expect("nonzero");
    let l0 = frame(&other, &d.point)?;
    let q0 = q.conjugate(&l0)?;
    let (p1, p2) = coeffs(&q0);
    if !d.degenerate {
        // shear away z² in Q¹, then scale
        let s = [[ONE, ZERO], [p1[0] / nonzero(p1[1], "zw coefficient")?, ONE]];
        let l1 = mat_mul(&s, &l0);
        let (r1, r2) = coeffs(&q.conjugate(&l1)?);
        let beta = -r1[1];
        let alpha = (r1[1] * r2[0]).sqrt();
        nonzero(alpha, "z² coefficient")?;
        return candidate(q, AtlasLabel::C111, mat_mul(&diag(alpha, beta), &l1));
    }
    if d.sing_class == SingClass::Fuchsian {
        // a multiple of the identity divides Q by its factor, so every
        // coefficient is scaled alike
        let lam = -nonzero(p2[0], "z² coefficient")?;
        return candidate(q, AtlasLabel::C100, scal(&l0, lam));
    }
    let alpha = -nonzero(p1[0], "z² coefficient")?;
    let beta = -alpha * alpha / nonzero(p2[0], "z² coefficient")?;
    candidate(q, AtlasLabel::C110, mat_mul(&diag(alpha, beta), &l0))
}

fn two_directions(q: &HomogeneousField, simple: &crate::field::CharDirection, double: &crate::field::CharDirection) -> Result<AtlasReport> {
    let l0 = frame(&simple.point, &double.point)?;
    let (p1, p2) = coeffs(&q.conjugate(&l0)?);
    match (simple.degenerate, double.degenerate) {
        (true, true) => {
            let alpha = nonzero(p2[1], "zw coefficient")?;
            candidate(q, AtlasLabel::C2001, scal(&l0, alpha))
        }
        (true, false) => {
            let alpha = nonzero(p2[1], "zw coefficient")?;
            let beta = nonzero(p1[1], "zw coefficient")?;
            candidate(q, AtlasLabel::C2011, mat_mul(&diag(alpha, beta), &l0))
        }
        (false, true) => {
            let k = nonzero(p2[1] - p1[0], "director")?;
            let rho = -p1[0] / k;
            candidate(q, AtlasLabel::C210 { rho }, scal(&l0, k))
        }
        (false, false) => {
            let alpha = nonzero(p2[1] - p1[0], "director")?;
            let beta = nonzero(p1[1], "zw coefficient")?;
            let rho = p1[0] / alpha;
            candidate(q, AtlasLabel::C211 { rho }, mat_mul(&diag(alpha, beta), &l0))
        }
    }
}

/// Three directions sent to `[1:0]`, `[1:1]`, `[0:1]`.
fn three_directions(q: &HomogeneousField, at0: &ProjPoint, at1: &ProjPoint, atinf: &ProjPoint, kind: usize) -> Result<AtlasReport> {
    let l0 = frame(at0, atinf)?;
    let (x, y) = crate::field::mat_apply(&l0, at1.unit_homog());
    let s = nonzero(y / nonzero(x, "direction")?, "direction")?;
    let l1 = mat_mul(&diag(ONE, ONE / s), &l0);
    let (p1, p2) = coeffs(&q.conjugate(&l1)?);
    let k = p2[1] - p1[0];
    match kind {
        0 => {
            // Q² vanishes in the normal form; match Q¹ = z² − zw by scaling
            let lam = nonzero(p1[0], "z² coefficient")?;
            candidate(q, AtlasLabel::C3100, scal(&l1, lam))
        }
        1 => {
            let k = nonzero(k, "director")?;
            candidate(q, AtlasLabel::C3Rho10 { rho: -p1[0] / k }, scal(&l1, k))
        }
        _ => {
            let k = nonzero(k, "director")?;
            let (a, b) = (p1[0] / k, p1[1] / k);
            candidate(q, AtlasLabel::C3RhoTau1 { rho: -a, tau: ONE - b }, scal(&l1, k))
        }
    }
}

fn lex(a: &Cx, b: &Cx) -> std::cmp::Ordering {
    crate::algebra::lex_cmp(a, b)
}

/// Normal form of a quadratic field, with the conjugating map.
pub fn classify_quadratic(q: &HomogeneousField) -> Result<AtlasReport> {
    if q.nu != 1 {
        return Err(Error::Unsupported("the atlas covers quadratic fields (nu = 1) only".into()));
    }
    let report = if q.is_dicritical() {
        dicritical_form(q)?
    } else {
        let cd = connection_data(q)?;
        let dirs = &cd.directions;
        let orders: Vec<usize> = dirs.iter().map(|d| d.mu_x).collect();
        match orders.as_slice() {
            [3] => one_direction(q, &dirs[0])?,
            [1, 2] => two_directions(q, &dirs[0], &dirs[1])?,
            [2, 1] => two_directions(q, &dirs[1], &dirs[0])?,
            [1, 1, 1] => {
                let mut nondeg: Vec<&crate::field::CharDirection> = dirs.iter().filter(|d| !d.degenerate).collect();
                let deg: Vec<&crate::field::CharDirection> = dirs.iter().filter(|d| d.degenerate).collect();
                nondeg.sort_by(|a, b| lex(&a.residue, &b.residue));
                match nondeg.len() {
                    3 => three_directions(q, &nondeg[0].point, &nondeg[1].point, &nondeg[2].point, 2)?,
                    2 => three_directions(q, &nondeg[0].point, &deg[0].point, &nondeg[1].point, 1)?,
                    1 => {
                        let a = three_directions(q, &nondeg[0].point, &deg[0].point, &deg[1].point, 0);
                        let b = three_directions(q, &nondeg[0].point, &deg[1].point, &deg[0].point, 0);
                        match (a, b) {
                            (Ok(a), Ok(b)) => {
                                if a.residual <= b.residual {
                                    a
                                } else {
                                    b
                                }
                            }
                            (Ok(a), Err(_)) => a,
                            (Err(_), Ok(b)) => b,
                            (Err(e), Err(_)) => return Err(e),
                        }
                    }
                    n => {
                        return Err(Error::ClassificationFailed(format!(
                            "three simple directions with {n} non-degenerate ones"
                        )))
                    }
                }
            }
            other => {
                return Err(Error::ClassificationFailed(format!("unexpected direction orders {other:?}")));
            }
        }
    };
    if !(report.residual <= ATLAS_TOL) {
        return Err(Error::ClassificationFailed(format!(
            "best candidate {} has residual {:e}",
            report.label, report.residual
        )));
    }
    Ok(report)
}

fn path_crosses_cut(c: Cx, t: f64) -> bool {
    // s ↦ 1 + c·s on [0, t] meets (−∞, 0] only when c is real
    c.im == 0.0 && 1.0 + c.re * t <= 0.0
}

/// Exact integral curve of a normal form with a closed-form solution.
pub fn closed_form_oracle(label: &AtlasLabel, init: (Cx, Cx), t: f64) -> Result<(Cx, Cx)> {
    let (z0, w0) = init;
    match *label {
        AtlasLabel::C100 => Ok((z0, w0 - z0 * z0 * t)),
        AtlasLabel::C2001 => Ok((z0, w0 * (z0 * t).exp())),
        AtlasLabel::C3100 => {
            let n = 256;
            for k in 0..=n {
                let s = t * k as f64 / n as f64;
                let den = z0 - (z0 - w0) * (w0 * s).exp();
                if den.norm() <= 1e-12 * (z0.norm() + w0.norm()) {
                    return Err(Error::SingularTime(s));
                }
            }
            let den = z0 - (z0 - w0) * (w0 * t).exp();
            Ok((z0 * w0 / den, w0))
        }
        AtlasLabel::C210 { rho } => {
            let c = rho * z0;
            if path_crosses_cut(c, t) {
                return Err(Error::SingularTime(t));
            }
            let base = ONE + c * t;
            Ok((z0 / base, w0 * base.powc((ONE - rho) / rho)))
        }
        _ => Err(Error::Unsupported(format!("no closed form for {label}"))),
    }
}

/// A global statement with its hypotheses checked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Statement {
    pub name: String,
    pub hypotheses_satisfied: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionDossier {
    pub point: ProjPoint,
    pub report: SingularityReport,
    pub prediction: DynamicsPrediction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dossier {
    pub atlas: AtlasReport,
    pub directions: Vec<DirectionDossier>,
    pub monodromy: Option<MonodromyInfo>,
    pub leaf_closure: Option<LeafClosure>,
    pub statements: Vec<Statement>,
}

const SUBSET_TOL: f64 = 1e-9;

/// Proper nonempty subsets of the directions as bit masks.
fn subsets(n: usize) -> impl Iterator<Item = usize> {
    1..(1usize << n).saturating_sub(1)
}

fn subset_sum(cd: &ConnectionData, mask: usize, f: impl Fn(&crate::field::CharDirection) -> Cx) -> Cx {
    cd.directions.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, d)| f(d)).sum()
}

fn describe(cd: &ConnectionData, mask: usize) -> String {
    let pts: Vec<String> = cd
        .directions
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, d)| {
            let (a, b) = d.point.homog();
            format!("[{a}:{b}]")
        })
        .collect();
    pts.join(" ")
}

fn statements(cd: &ConnectionData) -> Vec<Statement> {
    let n = cd.directions.len();
    let mut out = Vec::new();

    let periodic: Vec<String> = subsets(n)
        .filter(|&m| (subset_sum(cd, m, |d| d.induced_residue) + ONE).norm() < SUBSET_TOL)
        .map(|m| describe(cd, m))
        .collect();
    out.push(Statement {
        name: "periodic_integral_curves".into(),
        hypotheses_satisfied: !periodic.is_empty(),
        detail: if periodic.is_empty() {
            "no set of directions has induced residues summing to -1, so no non-constant periodic integral curve".into()
        } else {
            format!("induced residues sum to -1 on: {}", periodic.join("; "))
        },
    });

    let closed: Vec<String> = subsets(n)
        .filter(|&m| (subset_sum(cd, m, |d| d.induced_residue).re + 1.0).abs() < SUBSET_TOL)
        .map(|m| describe(cd, m))
        .collect();
    out.push(Statement {
        name: "closed_geodesics".into(),
        hypotheses_satisfied: !closed.is_empty(),
        detail: if closed.is_empty() {
            "no set of directions has real induced residue sum -1, so no simple closed geodesic".into()
        } else {
            format!("real induced residue sum -1 on: {}", closed.join("; "))
        },
    });

    let windows: Vec<String> = subsets(n)
        .filter(|&m| {
            let s = subset_sum(cd, m, |d| d.induced_residue).re;
            s > -1.5 && s < -0.5 && (s + 1.0).abs() > SUBSET_TOL
        })
        .map(|m| describe(cd, m))
        .collect();
    out.push(Statement {
        name: "no_infinite_self_intersection".into(),
        hypotheses_satisfied: windows.is_empty(),
        detail: if windows.is_empty() {
            "no set of directions has real induced residue sum in (-3/2,-1)u(-1,-1/2)".into()
        } else {
            format!("window sums attained on: {}", windows.join("; "))
        },
    });

    let all_simple = cd.directions.iter().all(|d| d.mu_x == 1 && d.sing_class == SingClass::Fuchsian);
    let balanced = (1..1usize << n).any(|m| {
        let g = m.count_ones() as f64;
        (subset_sum(cd, m, |d| d.residue).re - (g - 1.0)).abs() < SUBSET_TOL
    });
    let attracting: Vec<String> = cd
        .directions
        .iter()
        .enumerate()
        .filter(|(_, d)| d.residue.re < 0.0)
        .map(|(i, _)| describe(cd, 1 << i))
        .collect();
    out.push(Statement {
        name: "generic_convergence_to_origin".into(),
        hypotheses_satisfied: all_simple && !balanced,
        detail: if !all_simple {
            "violated: not every direction is a Fuchsian singularity of order 1".into()
        } else if balanced {
            "violated: some set of g directions has real residue sum g-1".into()
        } else {
            format!(
                "curves off the characteristic leaves converge to the origin along {} or escape or self-intersect infinitely often",
                if attracting.is_empty() { "no direction".to_string() } else { attracting.join(" ") }
            )
        },
    });

    for d in &cd.directions {
        if d.sing_class != SingClass::Fuchsian {
            continue;
        }
        let Some(mu_y) = d.mu_y else { continue };
        let rho = d.residue;
        let my = mu_y as f64;
        let ok = rho.re < my && my * rho.re < rho.norm_sqr();
        out.push(Statement {
            name: format!("local_basin {}", describe(cd, 1 << cd.directions.iter().position(|x| x == d).unwrap_or(0))),
            hypotheses_satisfied: ok,
            detail: if ok {
                "integral curves whose direction tends here converge to the origin".into()
            } else {
                format!("Re rho = {:.6} against mu_Y = {mu_y}", rho.re)
            },
        });
    }
    out
}

/// Per-direction reports, monodromy and global statements for a classified
/// quadratic field.
pub fn dynamics_dossier(q: &HomogeneousField, atlas: &AtlasReport) -> Result<Dossier> {
    if q.is_dicritical() {
        return Ok(Dossier {
            atlas: atlas.clone(),
            directions: Vec::new(),
            monodromy: None,
            leaf_closure: None,
            statements: vec![Statement {
                name: "dicritical".into(),
                hypotheses_satisfied: true,
                detail: "every line through the origin is invariant".into(),
            }],
        });
    }
    let cd = connection_data(q)?;
    let directions = cd
        .directions
        .iter()
        .map(|d| DirectionDossier { point: d.point, report: d.report.clone(), prediction: predict_dynamics(&d.report) })
        .collect();
    let m = monodromy_info(&cd);
    Ok(Dossier {
        atlas: atlas.clone(),
        directions,
        leaf_closure: Some(leaf_closure_class(&cd)),
        monodromy: Some(m),
        statements: statements(&cd),
    })
}

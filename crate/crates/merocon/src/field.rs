//! Homogeneous vector fields on C² and the induced connection data on P¹.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    aberth_raw, lex_cmp, merge_clusters, ratfn_residue_tol, refine_multiple, taylor_scaled, Chart,
    Cx, Poly1, ProjPoint, RatFn, TruncSeries, DEFAULT_TOL, ONE, ZERO,
};
use crate::error::{Error, Result};
use crate::singularity::{classify, LocalGerm, SingClass, SingularityReport};

/// Relative tolerance for the dicritical test.
pub const DICRITICAL_TOL: f64 = 1e-10;
/// Relative tolerance for the degeneracy test `|Q(v)| ≤ tol·‖Q‖`.
pub const DEGENERATE_TOL: f64 = 1e-9;

/// 2×2 complex matrix, row major.
pub type Mat2 = [[Cx; 2]; 2];

pub fn mat_det(m: &Mat2) -> Cx {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn mat_inv(m: &Mat2) -> Result<Mat2> {
    let d = mat_det(m);
    if d == ZERO || !crate::algebra::is_finite(d.inv()) {
        return Err(Error::InvalidInput("singular matrix".into()));
    }
    let di = d.inv();
    Ok([[m[1][1] * di, -m[0][1] * di], [-m[1][0] * di, m[0][0] * di]])
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn mat_apply(m: &Mat2, w: (Cx, Cx)) -> (Cx, Cx) {
    (m[0][0] * w.0 + m[0][1] * w.1, m[1][0] * w.0 + m[1][1] * w.1)
}

/// Homogeneous polynomial `Σ c[k] z^{d−k} w^k` products.
fn hom_mul(a: &[Cx], b: &[Cx]) -> Vec<Cx> {
    let mut c = vec![ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            c[i + j] += x * y;
        }
    }
    c
}

fn hom_pow(a: &[Cx], n: usize) -> Vec<Cx> {
    (0..n).fold(vec![ONE], |acc, _| hom_mul(&acc, a))
}

/// `Q = Q¹ ∂_z + Q² ∂_w` with `Q^i` homogeneous of degree `ν+1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousField {
    pub nu: usize,
    /// `q1[k]` multiplies `z^{ν+1−k} w^k`.
    pub q1: Vec<Cx>,
    pub q2: Vec<Cx>,
}

impl HomogeneousField {
    pub fn new(nu: usize, q1: Vec<Cx>, q2: Vec<Cx>) -> Result<Self> {
        if nu < 1 {
            return Err(Error::InvalidInput("nu must be at least 1".into()));
        }
        if q1.len() != nu + 2 || q2.len() != nu + 2 {
            return Err(Error::InvalidInput(format!(
                "expected {} coefficients per component, got {} and {}",
                nu + 2,
                q1.len(),
                q2.len()
            )));
        }
        if q1.iter().chain(&q2).any(|c| !crate::algebra::is_finite(*c)) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        if q1.iter().chain(&q2).all(|&c| c == ZERO) {
            return Err(Error::InvalidInput("field is identically zero".into()));
        }
        Ok(HomogeneousField { nu, q1, q2 })
    }

    pub fn from_real(nu: usize, q1: &[f64], q2: &[f64]) -> Result<Self> {
        let cv = |v: &[f64]| v.iter().map(|&x| Cx::new(x, 0.0)).collect();
        HomogeneousField::new(nu, cv(q1), cv(q2))
    }

    /// Field whose geodesic field in chart 0 is `X = ζ^μ`,
    /// `Y = ρ ζ^{μ−1}(1 + a ζ^n)`, of the smallest degree that carries it.
    pub fn model(mu_x: usize, rho: Cx, a: Cx, n: usize) -> Result<Self> {
        if mu_x == 0 {
            return Err(Error::InvalidInput("model order must be at least 1".into()));
        }
        if rho == ZERO {
            return Err(Error::InvalidInput("model residue must be nonzero".into()));
        }
        let n = if a == ZERO { 0 } else { n };
        let nu = (mu_x - 1 + n).max(1);
        let mut q1 = vec![ZERO; nu + 2];
        let mut q2 = vec![ZERO; nu + 2];
        let c = -rho / nu as f64;
        q1[mu_x - 1] += c;
        q1[mu_x - 1 + n] += c * a;
        q2[mu_x] += ONE;
        for k in 0..=nu {
            q2[k + 1] += q1[k];
        }
        HomogeneousField::new(nu, q1, q2)
    }

    /// Coefficients uniform in the unit square.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, nu: usize) -> Self {
        let mut draw = || (0..nu + 2).map(|_| Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let q1 = draw();
        let q2 = draw();
        HomogeneousField { nu, q1, q2 }
    }

    /// Largest coefficient modulus.
    pub fn scale(&self) -> f64 {
        self.q1.iter().chain(&self.q2).map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn abs_sum(&self) -> f64 {
        self.q1.iter().chain(&self.q2).map(|c| c.norm()).sum()
    }

    pub fn eval(&self, w: (Cx, Cx)) -> (Cx, Cx) {
        let d = self.nu + 1;
        let ev = |q: &[Cx]| {
            q.iter().enumerate().map(|(k, &c)| c * w.0.powu((d - k) as u32) * w.1.powu(k as u32)).sum::<Cx>()
        };
        (ev(&self.q1), ev(&self.q2))
    }

    /// Coefficients `p[k]` of `z^{ν+2−k} w^k` in `zQ² − wQ¹`.
    pub fn char_coeffs(&self) -> Vec<Cx> {
        let mut p = vec![ZERO; self.nu + 3];
        for k in 0..self.nu + 2 {
            p[k] += self.q2[k];
            p[k + 1] -= self.q1[k];
        }
        p
    }

    pub fn is_dicritical(&self) -> bool {
        let s = self.scale();
        self.char_coeffs().iter().all(|c| c.norm() <= DICRITICAL_TOL * s)
    }

    /// `X` in the given chart: `P(1,ζ)` in chart 0, `−P(ζ,1)` in chart ∞.
    pub fn x_poly(&self, chart: Chart) -> Poly1 {
        let p = self.char_coeffs();
        match chart {
            Chart::Zero => Poly1::new(p),
            Chart::Inf => Poly1::new(p.iter().rev().map(|&c| -c).collect()),
        }
    }

    /// `Y` in the given chart: `−νQ¹(1,ζ)` in chart 0, `−νQ²(ζ,1)` in chart ∞.
    pub fn y_poly(&self, chart: Chart) -> Poly1 {
        let s = Cx::new(-(self.nu as f64), 0.0);
        match chart {
            Chart::Zero => Poly1::new(self.q1.iter().map(|&c| c * s).collect()),
            Chart::Inf => Poly1::new(self.q2.iter().rev().map(|&c| c * s).collect()),
        }
    }

    /// `L⋆Q(w) = L Q(L⁻¹w)`.
    pub fn conjugate(&self, l: &Mat2) -> Result<HomogeneousField> {
        let m = mat_inv(l)?;
        let d = self.nu + 1;
        let zp = [m[0][0], m[0][1]];
        let wp = [m[1][0], m[1][1]];
        let zpow: Vec<Vec<Cx>> = (0..=d).map(|k| hom_pow(&zp, k)).collect();
        let wpow: Vec<Vec<Cx>> = (0..=d).map(|k| hom_pow(&wp, k)).collect();
        let subst = |q: &[Cx]| {
            let mut out = vec![ZERO; d + 1];
            for (k, &c) in q.iter().enumerate() {
                if c == ZERO {
                    continue;
                }
                for (j, t) in hom_mul(&zpow[d - k], &wpow[k]).into_iter().enumerate() {
                    out[j] += c * t;
                }
            }
            out
        };
        let a = subst(&self.q1);
        let b = subst(&self.q2);
        let q1 = (0..=d).map(|j| l[0][0] * a[j] + l[0][1] * b[j]).collect();
        let q2 = (0..=d).map(|j| l[1][0] * a[j] + l[1][1] * b[j]).collect();
        HomogeneousField::new(self.nu, q1, q2)
    }

    /// `λ` with `Q(v) = λ v` at the unit representative of a characteristic
    /// direction, together with `|Q(v)|`.
    pub fn eigen_at(&self, p: &ProjPoint) -> (Cx, f64) {
        let v = p.unit_homog();
        let q = self.eval(v);
        let lam = if v.0.norm() >= v.1.norm() { q.0 / v.0 } else { q.1 / v.1 };
        (lam, (q.0.norm_sqr() + q.1.norm_sqr()).sqrt())
    }

    pub fn is_degenerate_at(&self, p: &ProjPoint) -> bool {
        self.eigen_at(p).1 <= DEGENERATE_TOL * self.abs_sum()
    }
}

/// Characteristic directions with multiplicities (orders of `X`).
pub fn characteristic_directions(q: &HomogeneousField) -> Result<Vec<(ProjPoint, usize)>> {
    characteristic_directions_tol(q, DEFAULT_TOL)
}

pub fn characteristic_directions_tol(q: &HomogeneousField, tol: f64) -> Result<Vec<(ProjPoint, usize)>> {
    if q.is_dicritical() {
        return Err(Error::Dicritical);
    }
    let n = q.nu + 2;
    let p0 = q.x_poly(Chart::Zero);
    let pinf = q.x_poly(Chart::Inf);
    let deg = p0.degree().unwrap_or(0);
    let mut raw: Vec<ProjPoint> = if deg >= 1 {
        aberth_raw(&p0)?.into_iter().map(|r| ProjPoint::new(Chart::Zero, r).canonical()).collect()
    } else {
        Vec::new()
    };
    raw.extend(std::iter::repeat(ProjPoint::infinity()).take(n - deg));
    let poly_of = |c: Chart| if c == Chart::Zero { &p0 } else { &pinf };
    let clusters = merge_clusters(
        &raw,
        |a, b| a.chordal(b),
        |m| {
            let mut chart = m[0].chart;
            if m.iter().any(|p| p.coord_in(chart).is_none()) {
                chart = chart.other();
            }
            let coords: Option<Vec<Cx>> = m.iter().map(|p| p.coord_in(chart)).collect();
            let coords = coords?;
            let c = coords.iter().sum::<Cx>() / coords.len() as f64;
            let radius = 0.05 * (1.0 + c.norm());
            if coords.iter().any(|z| (z - c).norm() > radius) {
                return None;
            }
            refine_multiple(poly_of(chart), c, m.len(), tol, radius).map(|r| ProjPoint::new(chart, r).canonical())
        },
    );
    let mut out: Vec<(ProjPoint, usize)> = clusters
        .into_iter()
        .map(|(c, m)| {
            if m.len() == 1 {
                let radius = 0.05 * (1.0 + c.coord.norm());
                let polished = refine_multiple(poly_of(c.chart), c.coord, 1, tol, radius)
                    .map(|r| ProjPoint::new(c.chart, r).canonical())
                    .unwrap_or(c);
                (polished, 1)
            } else {
                (c, m.len())
            }
        })
        .collect();
    out.sort_by(|a, b| {
        (a.0.chart as u8)
            .cmp(&(b.0.chart as u8))
            .then_with(|| lex_cmp(&a.0.coord, &b.0.coord))
    });
    Ok(out)
}

/// A characteristic direction together with its local invariants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharDirection {
    pub point: ProjPoint,
    pub mu_x: usize,
    pub mu_y: Option<usize>,
    pub degenerate: bool,
    /// `Res(∇)`; zero at apparent singularities.
    pub residue: Cx,
    /// `Res(∇°) = Res(∇) − μ_X`.
    pub induced_residue: Cx,
    /// `ι = −Res/ν`.
    pub index: Cx,
    pub sing_class: SingClass,
    pub irregularity: usize,
    pub report: SingularityReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionData {
    pub nu: usize,
    /// Coefficient of `dζ₀` of the connection form in chart 0.
    pub eta0: RatFn,
    pub eta_inf: RatFn,
    pub x0: Poly1,
    pub x_inf: Poly1,
    pub y0: Poly1,
    pub y_inf: Poly1,
    pub directions: Vec<CharDirection>,
}

impl ConnectionData {
    pub fn x_poly(&self, chart: Chart) -> &Poly1 {
        match chart {
            Chart::Zero => &self.x0,
            Chart::Inf => &self.x_inf,
        }
    }

    pub fn y_poly(&self, chart: Chart) -> &Poly1 {
        match chart {
            Chart::Zero => &self.y0,
            Chart::Inf => &self.y_inf,
        }
    }

    pub fn eta(&self, chart: Chart) -> &RatFn {
        match chart {
            Chart::Zero => &self.eta0,
            Chart::Inf => &self.eta_inf,
        }
    }

    /// Residue of the connection form at a point, computed in the given chart.
    pub fn residue_in_chart(&self, chart: Chart, coord: Cx) -> Cx {
        let e = self.eta(chart);
        ratfn_residue_tol(&e.num, &e.den, coord, DEFAULT_TOL)
    }

    pub fn residue_sum(&self) -> Cx {
        self.directions.iter().map(|d| d.residue).sum()
    }

    pub fn induced_residue_sum(&self) -> Cx {
        self.directions.iter().map(|d| d.induced_residue).sum()
    }

    pub fn order_sum(&self) -> usize {
        self.directions.iter().map(|d| d.mu_x).sum()
    }

    /// Non-apparent directions (poles of the connection).
    pub fn poles(&self) -> impl Iterator<Item = &CharDirection> {
        self.directions.iter().filter(|d| d.sing_class != SingClass::Apparent)
    }

    /// Direction nearest to `p` in the chordal metric, with its distance.
    pub fn nearest_direction(&self, p: &ProjPoint) -> Option<(usize, f64)> {
        self.directions
            .iter()
            .enumerate()
            .map(|(i, d)| (i, d.point.chordal(p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Base series order for local germs of a field of degree `ν+1`.
fn germ_order(nu: usize) -> usize {
    nu + 2 + 24
}

/// Local germ of the geodesic field at a direction, in its canonical chart.
pub fn local_germ(q: &HomogeneousField, point: &ProjPoint, mu_x: usize, order: usize) -> Result<LocalGerm> {
    let chart = point.chart;
    let xp = q.x_poly(chart);
    let yp = q.y_poly(chart);
    let tx = xp.taylor_at(point.coord);
    let x = TruncSeries::new(tx, order);
    let mu_y = if !q.is_degenerate_at(point) {
        Some(0)
    } else if yp.is_zero() {
        None
    } else {
        let (ty, sy) = taylor_scaled(&yp, point.coord);
        let scale = yp.abs_scale(point.coord).max(sy.iter().cloned().fold(0.0, f64::max));
        let pos = ty.iter().zip(&sy).enumerate().skip(1).find(|(_, (c, s))| c.norm() > DEFAULT_TOL * s.max(1e-300) && c.norm() > 1e-14 * scale);
        pos.map(|(k, _)| k)
    };
    let y = TruncSeries::new(yp.taylor_at(point.coord), order);
    let mut y = y;
    if mu_y.is_none() {
        y = TruncSeries::zero(order);
    }
    LocalGerm::with_orders(x, y, mu_x, mu_y)
}

fn classify_direction(q: &HomogeneousField, point: &ProjPoint, mu_x: usize) -> Result<(LocalGerm, SingularityReport)> {
    let mut order = germ_order(q.nu);
    for _ in 0..3 {
        let g = local_germ(q, point, mu_x, order)?;
        match classify(&g) {
            Ok(r) => return Ok((g, r)),
            Err(Error::TruncationTooSmall { required, .. }) => order = order.max(mu_x + required + 1),
            Err(e) => return Err(e),
        }
    }
    Err(Error::ClassificationFailed("series order escalation failed".into()))
}

pub fn connection_data(q: &HomogeneousField) -> Result<ConnectionData> {
    let dirs = characteristic_directions(q)?;
    let nu = q.nu;
    let x0 = q.x_poly(Chart::Zero);
    let x_inf = q.x_poly(Chart::Inf);
    let y0 = q.y_poly(Chart::Zero);
    let y_inf = q.y_poly(Chart::Inf);
    let eta0 = RatFn::new(y0.clone(), x0.clone())?.reduced(DEFAULT_TOL)?;
    let eta_inf = RatFn::new(y_inf.clone(), x_inf.clone())?.reduced(DEFAULT_TOL)?;
    let mut directions = Vec::with_capacity(dirs.len());
    for (point, mu_x) in dirs {
        let (g, report) = classify_direction(q, &point, mu_x)?;
        let residue = report.residue;
        directions.push(CharDirection {
            point,
            mu_x,
            mu_y: g.mu_y,
            degenerate: report.degenerate,
            residue,
            induced_residue: residue - mu_x as f64,
            index: -residue / nu as f64,
            sing_class: report.sing_class,
            irregularity: report.irregularity,
            report,
        });
    }
    Ok(ConnectionData { nu, eta0, eta_inf, x0, x_inf, y0, y_inf, directions })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonodromyInfo {
    pub real_periods: bool,
    pub finite_cyclic: bool,
    pub cyclic_order: Option<usize>,
}

pub const DEFAULT_CYCLIC_SEARCH: usize = 64;

pub fn monodromy_info(cd: &ConnectionData) -> MonodromyInfo {
    monodromy_info_with(cd, DEFAULT_CYCLIC_SEARCH, 1e-8)
}

/// Real periods: all indices real.  Finite cyclic: `ℓ·ν·ι_h ∈ Z` for some
/// `ℓ ≤ l_max`; the group is then cyclic of order `νℓ` for the least such `ℓ`.
pub fn monodromy_info_with(cd: &ConnectionData, l_max: usize, tol: f64) -> MonodromyInfo {
    let idx: Vec<Cx> = cd.directions.iter().map(|d| d.index).collect();
    let real_periods = idx.iter().all(|i| i.im.abs() <= tol);
    let nu = cd.nu as f64;
    let ell = if real_periods {
        (1..=l_max).find(|&l| {
            idx.iter().all(|i| {
                let x = i.re * nu * l as f64;
                (x - x.round()).abs() <= tol * l as f64 * (1.0 + x.abs())
            })
        })
    } else {
        None
    };
    MonodromyInfo { real_periods, finite_cyclic: ell.is_some(), cyclic_order: ell.map(|l| l * cd.nu) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafClosure {
    ClosedLeaves,
    DenseInMetricLeaf,
    AccumulatesOriginAndInfinity,
}

pub fn leaf_closure_class(cd: &ConnectionData) -> LeafClosure {
    leaf_closure_from(&monodromy_info(cd))
}

pub fn leaf_closure_from(m: &MonodromyInfo) -> LeafClosure {
    if !m.real_periods {
        LeafClosure::AccumulatesOriginAndInfinity
    } else if m.finite_cyclic {
        LeafClosure::ClosedLeaves
    } else {
        LeafClosure::DenseInMetricLeaf
    }
}

/// Scale factor `ζ(t) = ζ₀/(1 − λ₀ζ₀^ν ν t)^{1/ν}` of the integral curve
/// through `ζ₀ v` on the characteristic leaf of `dir`, where `v` is the
/// chart representative `(1, ζ)` or `(ζ, 1)` and `Q(v) = λ₀ v`.
pub fn characteristic_leaf_curve(q: &HomogeneousField, dir: &ProjPoint, zeta0: Cx, t: f64) -> Result<Cx> {
    let v = dir.homog();
    let qv = q.eval(v);
    let lam = if v.0.norm() >= v.1.norm() { qv.0 / v.0 } else { qv.1 / v.1 };
    if q.is_degenerate_at(dir) {
        return Ok(zeta0);
    }
    let nu = q.nu;
    let c = lam * zeta0.powu(nu as u32) * nu as f64;
    let s = ONE - c * t;
    let real_c = c.im.abs() <= 1e-14 * c.norm();
    if s.norm() <= 1e-14 || (real_c && s.re <= 0.0) {
        return Err(Error::SingularTime(1.0 / c.re));
    }
    Ok(zeta0 * s.powf(-1.0 / nu as f64))
}

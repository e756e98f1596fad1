//! Local germs `G = X v ∂_z − Y v² ∂_v` of the geodesic field at a singular
//! point, their classification, formal normal forms and local dynamics.

use serde::{Deserialize, Serialize};

use crate::algebra::{Cx, TruncSeries, ZERO};
use crate::error::{Error, Result};

/// Relative tolerance used to read orders off series coefficients.
pub const ORDER_TOL: f64 = 1e-9;
/// Integer test used for resonance detection.
pub const RESONANCE_TOL: f64 = 1e-9;
/// Distance to an integer below which a warning is attached.
pub const NEAR_RESONANCE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingClass {
    Apparent,
    Fuchsian,
    Irregular,
}

/// Germ of the geodesic field at `z = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalGerm {
    pub x: TruncSeries,
    pub y: TruncSeries,
    pub mu_x: usize,
    /// `None` when `Y ≡ 0`.
    pub mu_y: Option<usize>,
}

fn series_order_of(s: &TruncSeries, tol: f64) -> Option<usize> {
    s.valuation(tol)
}

impl LocalGerm {
    /// Orders are read off with relative threshold [`ORDER_TOL`]; coefficients
    /// below the orders are set to zero.
    pub fn new(x: TruncSeries, y: TruncSeries) -> Result<Self> {
        let mu_x = series_order_of(&x, ORDER_TOL)
            .ok_or_else(|| Error::NotAGerm("X vanishes identically".into()))?;
        let mu_y = series_order_of(&y, ORDER_TOL);
        LocalGerm::with_orders(x, y, mu_x, mu_y)
    }

    pub fn with_orders(mut x: TruncSeries, mut y: TruncSeries, mu_x: usize, mu_y: Option<usize>) -> Result<Self> {
        if mu_x == 0 {
            return Err(Error::NotAGerm("X does not vanish at the point".into()));
        }
        if mu_x > x.order() || x.coeff(mu_x) == ZERO {
            return Err(Error::NotAGerm("X vanishes identically to the stored order".into()));
        }
        for k in 0..mu_x {
            x.set_coeff(k, ZERO);
        }
        match mu_y {
            Some(my) => {
                if my > y.order() || y.coeff(my) == ZERO {
                    return Err(Error::NotAGerm("stated order of Y has zero coefficient".into()));
                }
                for k in 0..my {
                    y.set_coeff(k, ZERO);
                }
            }
            None => y = TruncSeries::zero(y.order()),
        }
        Ok(LocalGerm { x, y, mu_x, mu_y })
    }

    /// Germ from coefficient lists of `X` and `Y` in ascending degree.
    pub fn from_coeffs(x: &[Cx], y: &[Cx], order: usize) -> Result<Self> {
        LocalGerm::new(TruncSeries::new(x.to_vec(), order), TruncSeries::new(y.to_vec(), order))
    }

    pub fn order(&self) -> usize {
        self.x.order().min(self.y.order())
    }

    pub fn a0(&self) -> Cx {
        self.x.coeff(self.mu_x)
    }

    pub fn b0(&self) -> Cx {
        self.mu_y.map_or(ZERO, |m| self.y.coeff(m))
    }

    /// Image under the change of coordinates `(ψ, ξ)`:
    /// `X̃∘ψ = ψ′X/ξ`, `Ỹ∘ψ = Y/ξ − ξ′X/ξ²`.
    pub fn transform(&self, psi: &TruncSeries, xi: &TruncSeries) -> Result<LocalGerm> {
        let (x, y) = apply_change(&self.x, &self.y, psi, xi)?;
        LocalGerm::new(x, y)
    }
}

fn apply_change(x: &TruncSeries, y: &TruncSeries, psi: &TruncSeries, xi: &TruncSeries) -> Result<(TruncSeries, TruncSeries)> {
    let n = x.order().min(y.order()).min(psi.order()).min(xi.order());
    let x = x.truncate(n);
    let y = y.truncate(n);
    let psi = psi.truncate(n);
    let xi = xi.truncate(n);
    let rxi = xi.recip()?;
    let dpsi = psi.derivative().truncate(n);
    let dxi = xi.derivative().truncate(n);
    let xt = dpsi.mul(&x).mul(&rxi);
    let yt = y.mul(&rxi).sub(&dxi.mul(&x).mul(&rxi).mul(&rxi));
    let inv = psi.reversion()?;
    Ok((xt.compose(&inv)?, yt.compose(&inv)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub sing_class: SingClass,
    pub degenerate: bool,
    pub mu_x: usize,
    pub mu_y: Option<usize>,
    /// `b₀/a₀`; zero when `Y ≡ 0`.
    pub rho: Cx,
    /// Residue of `Y/X dz` at the point; zero for apparent singularities.
    pub residue: Cx,
    /// `μ_X − μ_Y` for irregular germs, 1 for Fuchsian, 0 otherwise.
    pub irregularity: usize,
    pub resonant: bool,
    pub resonance_degree: Option<usize>,
    pub resonant_index: Option<Cx>,
    pub apparent_index: Option<Cx>,
    pub near_resonant: bool,
    pub notes: Vec<String>,
}

fn nearest_int(z: Cx) -> (i64, f64) {
    let r = z.re.round();
    (r as i64, Cx::new(z.re - r, z.im).norm())
}

/// Residue of `Y/X dz` at 0 computed from the series.
fn germ_residue(g: &LocalGerm) -> Result<Cx> {
    let Some(my) = g.mu_y else { return Ok(ZERO) };
    if my >= g.mu_x {
        return Ok(ZERO);
    }
    let k = g.mu_x - 1;
    if g.x.order() < g.mu_x + k {
        return Err(Error::TruncationTooSmall { given: g.x.order(), required: g.mu_x + k });
    }
    let xh = g.x.shift_down(g.mu_x).truncate(k);
    let y = g.y.truncate(k);
    Ok(y.mul(&xh.recip()?).coeff(k))
}

pub fn classify(g: &LocalGerm) -> Result<SingularityReport> {
    let a0 = g.a0();
    let b0 = g.b0();
    let rho = b0 / a0;
    let mut rep = SingularityReport {
        sing_class: SingClass::Apparent,
        degenerate: g.mu_y.map_or(true, |m| m >= 1),
        mu_x: g.mu_x,
        mu_y: g.mu_y,
        rho,
        residue: ZERO,
        irregularity: 0,
        resonant: false,
        resonance_degree: None,
        resonant_index: None,
        apparent_index: None,
        near_resonant: false,
        notes: Vec::new(),
    };
    match g.mu_y {
        Some(my) if my < g.mu_x => {
            let m = g.mu_x - my;
            rep.irregularity = m;
            rep.residue = germ_residue(g)?;
            if m == 1 {
                rep.sing_class = SingClass::Fuchsian;
                let (k, d) = nearest_int(Cx::new(my as f64, 0.0) - rho);
                if d <= RESONANCE_TOL && k >= 1 {
                    rep.resonant = true;
                    rep.resonance_degree = Some(k as usize);
                    let (_, nrep, _) = normalize_formal(g, k as usize)?;
                    rep.resonant_index = nrep.resonant_index;
                } else if d <= NEAR_RESONANCE_TOL && k >= 1 {
                    rep.near_resonant = true;
                    rep.notes.push(format!("near-resonant: mu_Y - rho is within {d:.3e} of {k}"));
                }
            } else {
                rep.sing_class = SingClass::Irregular;
                rep.resonant = true;
                rep.resonance_degree = Some(m - 1);
                rep.resonant_index = Some(rep.residue / rho);
            }
        }
        _ => {
            rep.notes.push("mu_Y read in the presented chart; it is chart-dependent for apparent germs".into());
            if g.mu_x > 1 {
                rep.apparent_index = apparent_index(g)?;
            }
        }
    }
    Ok(rep)
}

/// Degree-by-degree formal normalization through degree `n_max`.
///
/// Returns the normalized germ, its report (with the resonant index read
/// from the normalized series) and the accumulated change `(ψ, ξ)`.
pub fn normalize_formal(g: &LocalGerm, n_max: usize) -> Result<(LocalGerm, SingularityReport, (TruncSeries, TruncSeries))> {
    let Some(my) = g.mu_y.filter(|&m| m < g.mu_x) else {
        return Err(Error::NotAGerm("normalization needs a Fuchsian or irregular germ".into()));
    };
    let mu = g.mu_x;
    let m = mu - my;
    let k_ord = mu + n_max;
    if g.order() < k_ord {
        return Err(Error::TruncationTooSmall { given: g.order().saturating_sub(mu), required: n_max });
    }
    let a0 = g.a0();
    let gx = g.x.truncate(k_ord);
    let gy = g.y.truncate(k_ord);
    let rho = gy.coeff(my) / a0;
    let res_deg = if m == 1 {
        let (k, d) = nearest_int(Cx::new(my as f64, 0.0) - rho);
        (d <= RESONANCE_TOL && k >= 1).then_some(k as usize)
    } else {
        Some(m - 1)
    };
    if let Some(n) = res_deg {
        if n > n_max {
            return Err(Error::TruncationTooSmall { given: n_max, required: n });
        }
    }
    // A step (z + c₁z^{n+1}, 1 + c₂zⁿ) changes the accumulated ψ, ξ only at
    // degrees n+1 and n below the orders still to be normalized, so the
    // totals are kept as polynomials and the original germ is re-transformed.
    let mut psi = TruncSeries::var(k_ord);
    let mut xi = TruncSeries::new(vec![a0], k_ord);
    let (mut x, mut y) = apply_change(&gx, &gy, &psi, &xi)?;
    for n in 1..=n_max {
        let an = x.coeff(mu + n);
        let bn = y.coeff(my + n);
        let (c1, c2) = if Some(n) == res_deg {
            (ZERO, an)
        } else {
            // (μ−n−1)c₁ + c₂ = a_n ;  μ_Y ρ c₁ + (n[m=1] + ρ) c₂ = b_n
            let a11 = Cx::new(mu as f64 - n as f64 - 1.0, 0.0);
            let a21 = rho * my as f64;
            let a22 = rho + if m == 1 { n as f64 } else { 0.0 };
            let det = a11 * a22 - a21;
            ((an * a22 - bn) / det, (a11 * bn - a21 * an) / det)
        };
        if c1 != ZERO || c2 != ZERO {
            psi.set_coeff(n + 1, psi.coeff(n + 1) + c1);
            xi.set_coeff(n, xi.coeff(n) + c2 * a0);
            (x, y) = apply_change(&gx, &gy, &psi, &xi)?;
        }
    }
    let resonant_index = res_deg.map(|n| y.coeff(my + n) / rho);
    let normal = LocalGerm::with_orders(x, y, mu, Some(my))?;
    let mut rep = classify_without_resonance(&normal)?;
    rep.resonance_degree = res_deg;
    rep.resonant = res_deg.is_some();
    rep.resonant_index = resonant_index;
    if m > 1 {
        rep.residue = germ_residue(g)?;
    }
    Ok((normal, rep, (psi, xi)))
}

fn classify_without_resonance(g: &LocalGerm) -> Result<SingularityReport> {
    let my = g.mu_y.expect("normalized germ has Y");
    let m = g.mu_x - my;
    Ok(SingularityReport {
        sing_class: if m == 1 { SingClass::Fuchsian } else { SingClass::Irregular },
        degenerate: my >= 1,
        mu_x: g.mu_x,
        mu_y: g.mu_y,
        rho: g.b0() / g.a0(),
        residue: if m == 1 { g.b0() / g.a0() } else { ZERO },
        irregularity: m,
        resonant: false,
        resonance_degree: None,
        resonant_index: None,
        apparent_index: None,
        near_resonant: false,
        notes: Vec::new(),
    })
}

/// Apparent index `a` of an apparent germ of order `μ > 1`; `None` for `μ = 1`.
pub fn apparent_index(g: &LocalGerm) -> Result<Option<Cx>> {
    if let Some(my) = g.mu_y {
        if my < g.mu_x {
            return Err(Error::NotAGerm("apparent index of a non-apparent germ".into()));
        }
    }
    let mu = g.mu_x;
    if mu == 1 {
        return Ok(None);
    }
    let k = mu - 1;
    if g.x.order() < mu + k {
        return Err(Error::TruncationTooSmall { given: g.x.order(), required: mu + k });
    }
    let a0 = g.a0();
    let xh = g.x.shift_down(mu).truncate(k).scale(a0.inv());
    // ξ′ = (Y/X) ξ with ξ(0) = 1
    let xi = match g.mu_y {
        None => TruncSeries::one(k),
        Some(my) => {
            let yx = g.y.shift_down(my).truncate(k).scale(a0.inv()).mul(&xh.recip()?).shift_up(my - mu);
            yx.integral().exp()
        }
    };
    Ok(Some(-xi.mul(&xh.recip()?).coeff(k)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    GenericAttractToPole,
    GenericEscape,
    ClosedOrAccumulatingClosed,
    PeriodicFamily,
    MixedApparent,
    ResonantUnknown,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityLimit {
    ToZero,
    ToInfinity,
    BoundedCircle,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsPrediction {
    pub regime: Regime,
    pub velocity_limit: VelocityLimit,
    pub detail: String,
}

fn velocity_by_sign(mu_y: f64, rho: Cx) -> VelocityLimit {
    let s = mu_y * rho.re - rho.norm_sqr();
    let scale = 1e-12 * (1.0 + rho.norm_sqr());
    if s < -scale {
        VelocityLimit::ToZero
    } else if s > scale {
        VelocityLimit::ToInfinity
    } else {
        VelocityLimit::BoundedCircle
    }
}

pub fn predict_dynamics(r: &SingularityReport) -> DynamicsPrediction {
    let pred = |regime, velocity_limit, detail: &str| DynamicsPrediction { regime, velocity_limit, detail: detail.to_string() };
    match r.sing_class {
        SingClass::Apparent => {
            let detail = if r.mu_x == 1 {
                "v = ζ v₀: Re ζ < 0 tends to the point, Re ζ > 0 escapes, Re ζ = 0 is a periodic geodesic around it".to_string()
            } else {
                match r.apparent_index {
                    Some(a) if a != ZERO => format!(
                        "v = ζ v₀: Re(ζ/a) > 0 tends to the point, Re(ζ/a) = 0 tends, is periodic or escapes, Re(ζ/a) < 0 tends or escapes (a = {a})"
                    ),
                    _ => format!("{} real directions escape, all other directions tend to the point", r.mu_x - 1),
                }
            };
            DynamicsPrediction { regime: Regime::MixedApparent, velocity_limit: VelocityLimit::BoundedCircle, detail }
        }
        SingClass::Irregular => pred(Regime::Undetermined, VelocityLimit::Undetermined, "irregular singularity"),
        SingClass::Fuchsian => {
            if r.resonant && r.resonant_index.is_some_and(|a| a.norm() > RESONANCE_TOL) {
                return pred(Regime::ResonantUnknown, VelocityLimit::Undetermined, "resonant with nonzero resonant index");
            }
            let my = r.mu_y.unwrap_or(0) as f64;
            let rho = r.rho;
            let tol = 1e-12 * (1.0 + rho.norm());
            if (rho - my).norm() <= tol && my > 0.0 {
                pred(Regime::PeriodicFamily, VelocityLimit::BoundedCircle, "all nearby geodesics are periodic")
            } else if rho.re < my - tol {
                pred(
                    Regime::GenericAttractToPole,
                    velocity_by_sign(my, rho),
                    "all geodesics but one issuing near the pole tend to it",
                )
            } else if rho.re > my + tol {
                pred(
                    Regime::GenericEscape,
                    VelocityLimit::ToInfinity,
                    "all geodesics but one escape; the exceptional one reaches the pole in finite time",
                )
            } else {
                pred(
                    Regime::ClosedOrAccumulatingClosed,
                    velocity_by_sign(my, rho),
                    "geodesics near the pole are closed or accumulate a closed geodesic",
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ONE;

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    fn germ(x: &[Cx], y: &[Cx], n: usize) -> LocalGerm {
        LocalGerm::from_coeffs(x, y, n).unwrap()
    }

    #[test]
    fn irregular_two_direction_germ() {
        let rho = c(0.4, 0.7);
        // X = −ζ², Y = −(1 + (1−ρ)ζ)
        let g = germ(&[ZERO, ZERO, c(-1.0, 0.0)], &[c(-1.0, 0.0), -(ONE - rho)], 20);
        let r = classify(&g).unwrap();
        assert_eq!(r.sing_class, SingClass::Irregular);
        assert_eq!(r.irregularity, 2);
        assert!((r.rho - 1.0).norm() < 1e-15);
        assert!((r.resonant_index.unwrap() - (ONE - rho)).norm() < 1e-14);
    }

    #[test]
    fn irregular_one_direction_germ() {
        let g = germ(&[ZERO, ZERO, ZERO, ONE], &[ZERO, ONE, ONE], 20);
        let r = classify(&g).unwrap();
        assert_eq!((r.sing_class, r.mu_x, r.irregularity), (SingClass::Irregular, 3, 2));
        assert!(r.degenerate);
        assert!((r.resonant_index.unwrap() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn fuchsian_nonresonant() {
        let g = germ(&[ZERO, ONE], &[c(0.37, 0.0)], 20);
        let r = classify(&g).unwrap();
        assert_eq!(r.sing_class, SingClass::Fuchsian);
        assert!(!r.resonant);
        assert!((r.residue - 0.37).norm() < 1e-15);
    }

    #[test]
    fn resonance_at_rho_minus_one() {
        // X = ζ(1 − ζ)... from (2_{11ρ}) at [1:0] with ρ = −1: X = ζ, Y = ρ − ζ
        let g = germ(&[ZERO, ONE], &[c(-1.0, 0.0), c(-1.0, 0.0)], 20);
        let r = classify(&g).unwrap();
        assert!(r.resonant);
        assert_eq!(r.resonance_degree, Some(1));
        assert!((r.resonant_index.unwrap() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn normal_form_is_fixed_point() {
        let g = germ(&[ZERO, ZERO, ONE], &[ZERO, c(0.3, 0.2)], 24);
        let (n, _, (psi, xi)) = normalize_formal(&g, 16).unwrap();
        assert!(psi.sub(&TruncSeries::var(psi.order())).max_abs() < 1e-15);
        assert!(xi.sub(&TruncSeries::one(xi.order())).max_abs() < 1e-15);
        assert!(n.x.sub(&g.x.truncate(n.x.order())).max_abs() < 1e-15);
    }

    #[test]
    fn normalization_kills_nonresonant_terms() {
        let g = germ(
            &[ZERO, ZERO, c(2.0, 0.0), c(0.5, -0.3), c(0.1, 0.0)],
            &[ZERO, c(0.6, 0.4), c(-0.2, 0.1), c(0.3, 0.3)],
            24,
        );
        let (n, r, _) = normalize_formal(&g, 16).unwrap();
        assert!(!r.resonant);
        for k in 3..=18 {
            assert!(n.x.coeff(k).norm() < 1e-9, "x[{k}] = {}", n.x.coeff(k));
        }
        for k in 2..=17 {
            assert!(n.y.coeff(k).norm() < 1e-9, "y[{k}] = {}", n.y.coeff(k));
        }
        assert!((n.x.coeff(2) - 1.0).norm() < 1e-12);
        assert!((n.y.coeff(1) - c(0.3, 0.2)).norm() < 1e-12);
    }

    #[test]
    fn truncation_too_small_names_requirement() {
        // μ_Y − ρ = 0 − (−5) = 5 > N
        let g = germ(&[ZERO, ONE], &[c(-5.0, 0.0)], 24);
        match normalize_formal(&g, 3) {
            Err(Error::TruncationTooSmall { required, .. }) => assert_eq!(required, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn apparent_index_examples() {
        let g = LocalGerm::with_orders(TruncSeries::new(vec![ZERO, ZERO, ONE], 8), TruncSeries::zero(8), 2, None).unwrap();
        assert_eq!(apparent_index(&g).unwrap(), Some(ZERO));
        let a = c(0.7, -1.2);
        let g = LocalGerm::with_orders(TruncSeries::new(vec![ZERO, ZERO, ONE, a], 8), TruncSeries::zero(8), 2, None).unwrap();
        assert!((apparent_index(&g).unwrap().unwrap() - a).norm() < 1e-14);
        let g = germ(&[ZERO, ONE], &[ZERO, ONE], 8);
        assert_eq!(apparent_index(&g).unwrap(), None);
        let g = germ(&[ZERO, ONE], &[ONE], 8);
        assert!(apparent_index(&g).is_err());
    }

    #[test]
    fn apparent_index_after_reduction() {
        // X = z², Y = z³: ξ = exp(z²/2), so ξ/X = z⁻²(1 + z²/2 + …) and a = 0
        let g = germ(&[ZERO, ZERO, ONE], &[ZERO, ZERO, ZERO, ONE], 12);
        assert!(apparent_index(&g).unwrap().unwrap().norm() < 1e-15);
        // X = z²(1 + z), Y = z²: ξ = exp(∫ 1/(1+z)) = 1 + z, ξ/X = z⁻², a = 0
        let g = germ(&[ZERO, ZERO, ONE, ONE], &[ZERO, ZERO, ONE], 12);
        assert!(apparent_index(&g).unwrap().unwrap().norm() < 1e-14);
    }

    #[test]
    fn prediction_table() {
        let fuchs = |rho: Cx, my: usize| {
            let mut x = vec![ZERO; my + 2];
            x[my + 1] = ONE;
            let mut y = vec![ZERO; my + 1];
            y[my] = rho;
            predict_dynamics(&classify(&germ(&x, &y, 24)).unwrap())
        };
        assert_eq!(fuchs(c(0.1, 0.0), 0).regime, Regime::GenericEscape);
        assert_eq!(fuchs(c(0.0, 1.0), 0).regime, Regime::ClosedOrAccumulatingClosed);
        let p = fuchs(c(-0.5, 0.0), 0);
        assert_eq!((p.regime, p.velocity_limit), (Regime::GenericAttractToPole, VelocityLimit::ToZero));
        let p = fuchs(c(0.5, 0.0), 1);
        assert_eq!((p.regime, p.velocity_limit), (Regime::GenericAttractToPole, VelocityLimit::ToInfinity));
        assert_eq!(fuchs(c(1.0, 0.0), 1).regime, Regime::PeriodicFamily);
        let app = predict_dynamics(&classify(&germ(&[ZERO, ONE], &[ZERO, ONE], 8)).unwrap());
        assert_eq!(app.regime, Regime::MixedApparent);
    }
}

//! Complex polynomials, rational functions, truncated power series and
//! points of the projective line.

mod poly;
mod ratfn;
mod roots;
mod series;

use serde::{Deserialize, Serialize};

pub use num_complex::Complex64 as Cx;
pub use poly::Poly1;
pub use ratfn::{ratfn_residue, ratfn_residue_tol, RatFn};
pub use roots::{aberth_raw, poly_roots, taylor_scaled};
pub(crate) use roots::{merge_clusters, refine_multiple};
pub use series::{series_compose, series_mul, series_recip, TruncSeries};

/// Default relative tolerance of the algebra kernel.
pub const DEFAULT_TOL: f64 = 1e-9;

pub const ZERO: Cx = Cx::new(0.0, 0.0);
pub const ONE: Cx = Cx::new(1.0, 0.0);
pub const I: Cx = Cx::new(0.0, 1.0);

pub fn is_finite(z: Cx) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// One of the two standard affine charts of P¹.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    /// `ζ₀ = w²/w¹`
    #[serde(rename = "0")]
    Zero,
    /// `ζ_∞ = w¹/w²`
    #[serde(rename = "inf")]
    Inf,
}

impl Chart {
    pub fn other(self) -> Chart {
        match self {
            Chart::Zero => Chart::Inf,
            Chart::Inf => Chart::Zero,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Chart::Zero => "0",
            Chart::Inf => "inf",
        }
    }
}

/// A point of P¹ given by a chart and a coordinate in it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjPoint {
    pub chart: Chart,
    pub coord: Cx,
}

impl ProjPoint {
    pub fn new(chart: Chart, coord: Cx) -> Self {
        ProjPoint { chart, coord }
    }

    /// `[1:0]`
    pub fn zero() -> Self {
        ProjPoint::new(Chart::Zero, ZERO)
    }

    /// `[0:1]`
    pub fn infinity() -> Self {
        ProjPoint::new(Chart::Inf, ZERO)
    }

    /// Point `[w¹:w²]`; `None` for the zero vector.
    pub fn from_homog(w1: Cx, w2: Cx) -> Option<Self> {
        if w1.norm() >= w2.norm() {
            if w1 == ZERO {
                return None;
            }
            Some(ProjPoint::new(Chart::Zero, w2 / w1))
        } else {
            Some(ProjPoint::new(Chart::Inf, w1 / w2))
        }
    }

    /// A representative `(w¹, w²)` of the point.
    pub fn homog(&self) -> (Cx, Cx) {
        match self.chart {
            Chart::Zero => (ONE, self.coord),
            Chart::Inf => (self.coord, ONE),
        }
    }

    /// Unit-norm representative.
    pub fn unit_homog(&self) -> (Cx, Cx) {
        let (a, b) = self.homog();
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        (a / n, b / n)
    }

    /// Canonical form: chart 0 iff `|ζ₀| ≤ 1`.
    pub fn canonical(&self) -> Self {
        let (a, b) = self.homog();
        ProjPoint::from_homog(a, b).expect("projective point has nonzero representative")
    }

    /// Coordinate of the point in the given chart, `None` if it is the
    /// centre of the other chart.
    pub fn coord_in(&self, chart: Chart) -> Option<Cx> {
        if chart == self.chart {
            Some(self.coord)
        } else if self.coord == ZERO {
            None
        } else {
            Some(self.coord.inv())
        }
    }

    /// Chordal (Fubini–Study) distance, at most 1.
    pub fn chordal(&self, other: &ProjPoint) -> f64 {
        let (a1, a2) = self.homog();
        let (b1, b2) = other.homog();
        let num = (a1 * b2 - a2 * b1).norm();
        let den = ((a1.norm_sqr() + a2.norm_sqr()) * (b1.norm_sqr() + b2.norm_sqr())).sqrt();
        num / den
    }
}

/// Chordal distance between two affine coordinates of the same chart.
pub fn chordal(p: Cx, q: Cx) -> f64 {
    (p - q).norm() / ((1.0 + p.norm_sqr()) * (1.0 + q.norm_sqr())).sqrt()
}

/// Sort key on complex numbers: lexicographic by `(re, im)`.
pub fn lex_cmp(a: &Cx, b: &Cx) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_chart_choice() {
        let p = ProjPoint::new(Chart::Zero, Cx::new(2.0, 0.0)).canonical();
        assert_eq!(p.chart, Chart::Inf);
        assert!((p.coord - Cx::new(0.5, 0.0)).norm() < 1e-15);
        let q = ProjPoint::new(Chart::Inf, Cx::new(1.0, 0.0)).canonical();
        assert_eq!(q.chart, Chart::Zero);
    }

    #[test]
    fn chordal_is_chart_independent() {
        let p = ProjPoint::new(Chart::Zero, Cx::new(0.3, -1.7));
        let q = ProjPoint::new(Chart::Zero, Cx::new(-2.0, 0.4));
        let d0 = chordal(p.coord, q.coord);
        let pi = ProjPoint::new(Chart::Inf, p.coord.inv());
        let qi = ProjPoint::new(Chart::Inf, q.coord.inv());
        assert!((p.chordal(&q) - d0).abs() < 1e-15);
        assert!((pi.chordal(&qi) - d0).abs() < 1e-14);
        assert!((ProjPoint::zero().chordal(&ProjPoint::infinity()) - 1.0).abs() < 1e-15);
    }
}

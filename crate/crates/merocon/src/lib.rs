//! Geodesic flows of meromorphic connections on the Riemann sphere induced by
//! homogeneous holomorphic vector fields on C².
//!
//! A homogeneous field `Q` of degree `ν+1` blows down to a morphism `X` and a
//! meromorphic connection `∇` on `N^{⊗ν}` over P¹.  Integral curves of `Q` are
//! lifts of geodesics of the induced connection on TP¹; this crate computes
//! the connection data, classifies its singularities, integrates the geodesic
//! field and classifies quadratic fields up to linear conjugacy.

pub mod algebra;
pub mod atlas;
pub mod error;
pub mod field;
pub mod geodesic;
pub mod io;
pub mod singularity;

pub use algebra::{Cx, Poly1, ProjPoint, RatFn, TruncSeries};
pub use error::{Error, Result};
pub use field::{CharDirection, ConnectionData, HomogeneousField};

//! File formats: field specifications, reports, trajectory CSV and SVG.

mod check;
mod csv;
mod svg;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use check::{check_connection, check_field, CheckRow};
pub use csv::{parse_trajectory_csv, trajectory_csv, CsvTrajectory};
pub use svg::trajectory_svg;

use crate::algebra::Cx;
use crate::atlas::{classify_quadratic, dynamics_dossier, Dossier};
use crate::error::{Error, Result};
use crate::field::{connection_data, leaf_closure_class, monodromy_info, ConnectionData, HomogeneousField, LeafClosure, MonodromyInfo};
use crate::geodesic::IntegratorConfig;
use crate::singularity::{predict_dynamics, DynamicsPrediction};

/// On-disk form of a homogeneous field. Coefficients are `[re, im]` pairs
/// in the monomial order `z^{ν+1}, z^ν w, …, w^{ν+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpecFile {
    pub degree: usize,
    #[serde(rename = "Q1")]
    pub q1: Vec<[f64; 2]>,
    #[serde(rename = "Q2")]
    pub q2: Vec<[f64; 2]>,
}

impl FieldSpecFile {
    pub fn from_field(q: &HomogeneousField) -> Self {
        let pairs = |v: &[Cx]| v.iter().map(|c| [c.re, c.im]).collect();
        FieldSpecFile { degree: q.nu + 1, q1: pairs(&q.q1), q2: pairs(&q.q2) }
    }

    pub fn to_field(&self) -> Result<HomogeneousField> {
        if self.degree < 2 {
            return Err(Error::Parse(format!("degree: must be at least 2, got {}", self.degree)));
        }
        let want = self.degree + 1;
        for (name, v) in [("Q1", &self.q1), ("Q2", &self.q2)] {
            if v.len() != want {
                return Err(Error::Parse(format!(
                    "{name}: degree {} needs {want} coefficients, got {}",
                    self.degree,
                    v.len()
                )));
            }
            if let Some(k) = v.iter().position(|c| !(c[0].is_finite() && c[1].is_finite())) {
                return Err(Error::Parse(format!("{name}[{k}]: non-finite coefficient")));
            }
        }
        let cx = |v: &[[f64; 2]]| v.iter().map(|c| Cx::new(c[0], c[1])).collect();
        HomogeneousField::new(self.degree - 1, cx(&self.q1), cx(&self.q2)).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn is_toml(path: Option<&Path>, text: &str) -> bool {
    match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some(ext) => ext.eq_ignore_ascii_case("toml"),
        None => !text.trim_start().starts_with('{'),
    }
}

/// Parse a field file (JSON, or TOML by extension).
pub fn parse_field_spec(text: &str, path: Option<&Path>) -> Result<HomogeneousField> {
    let spec: FieldSpecFile = if is_toml(path, text) {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?
    } else {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?
    };
    spec.to_field()
}

pub fn read_field_spec(path: &Path) -> Result<HomogeneousField> {
    let text = std::fs::read_to_string(path)?;
    parse_field_spec(&text, Some(path)).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn field_spec_json(q: &HomogeneousField) -> String {
    serde_json::to_string_pretty(&FieldSpecFile::from_field(q)).expect("serializable")
}

/// Everything `classify` reports about a field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub field: FieldSpecFile,
    pub dicritical: bool,
    pub connection: Option<ConnectionData>,
    pub predictions: Vec<DynamicsPrediction>,
    pub monodromy: Option<MonodromyInfo>,
    pub leaf_closure: Option<LeafClosure>,
    pub atlas: Option<Dossier>,
    pub atlas_error: Option<String>,
    pub notes: Vec<String>,
}

pub fn build_report(q: &HomogeneousField) -> Result<Report> {
    let field = FieldSpecFile::from_field(q);
    if q.is_dicritical() {
        let atlas = if q.nu == 1 { Some(dynamics_dossier(q, &classify_quadratic(q)?)?) } else { None };
        return Ok(Report {
            field,
            dicritical: true,
            connection: None,
            predictions: Vec::new(),
            monodromy: None,
            leaf_closure: None,
            atlas,
            atlas_error: None,
            notes: vec![
                "every line through the origin is invariant".into(),
                "Q = f(w) w with f homogeneous of degree nu; w(t) = w0 (1 - nu f(w0) t)^(-1/nu)".into(),
            ],
        });
    }
    let cd = connection_data(q)?;
    let predictions = cd.directions.iter().map(|d| predict_dynamics(&d.report)).collect();
    let m = monodromy_info(&cd);
    let (atlas, atlas_error) = if q.nu == 1 {
        match classify_quadratic(q).and_then(|r| dynamics_dossier(q, &r)) {
            Ok(d) => (Some(d), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    Ok(Report {
        field,
        dicritical: false,
        leaf_closure: Some(leaf_closure_class(&cd)),
        connection: Some(cd),
        predictions,
        monodromy: Some(m),
        atlas,
        atlas_error,
        notes: Vec::new(),
    })
}

pub fn report_json(r: &Report) -> String {
    serde_json::to_string_pretty(r).expect("serializable")
}

pub fn parse_report(text: &str) -> Result<Report> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Write a whole file through a temporary in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Complex number in `a`, `bi`, `a+bi` or `a-bi` form (`j` also accepted).
pub fn parse_cx(s: &str) -> Result<Cx> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("bad complex number '{s}'"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse::<f64>().map(|x| Cx::new(x, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |m: &str| match m {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => m.parse::<f64>().map_err(|_| bad()),
    };
    match split {
        Some(k) => Ok(Cx::new(body[..k].parse::<f64>().map_err(|_| bad())?, imag(&body[k..])?)),
        None => Ok(Cx::new(0.0, imag(body)?)),
    }
}

/// Configuration file: an `[integrator]` table of `IntegratorConfig` fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub integrator: IntegratorConfig,
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let c: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    c.integrator.validate()?;
    Ok(c)
}

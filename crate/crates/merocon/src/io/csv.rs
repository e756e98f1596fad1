use serde_json::{Map, Value};

use crate::algebra::{Chart, Cx};
use crate::error::{Error, Result};
use crate::geodesic::{ChartState, Event, OmegaReport, Termination, Trajectory};

pub const CSV_HEADER: &str = "t,chart,zeta_re,zeta_im,v_re,v_im,h_drift";

/// Trajectory data recovered from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTrajectory {
    pub samples: Vec<ChartState>,
    pub h_drift: Vec<f64>,
    pub events: Vec<Event>,
    pub termination: Option<Termination>,
    pub omega: Option<OmegaReport>,
}

fn push_pairs(line: &mut String, obj: &Map<String, Value>) {
    for (k, v) in obj {
        line.push(' ');
        line.push_str(k);
        line.push('=');
        line.push_str(&serde_json::to_string(v).expect("json"));
    }
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

fn term_label(t: Termination) -> String {
    serde_json::to_value(t).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

/// One row per sample, `{:.16e}` numbers, then `# EVENT`, `# TERMINATION`
/// and `# OMEGA` comment lines.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.samples.len() * 140);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (s, h) in traj.samples.iter().zip(&traj.h_drift) {
        out.push_str(&format!(
            "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            s.t,
            s.chart.label(),
            s.zeta.re,
            s.zeta.im,
            s.v.re,
            s.v.im,
            h
        ));
    }
    for e in &traj.events {
        let mut obj = object(serde_json::to_value(e).expect("json"));
        obj.remove("kind");
        obj.remove("t");
        let mut line = format!("# EVENT {} t={:.16e}", e.label(), e.t);
        push_pairs(&mut line, &obj);
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str(&format!("# TERMINATION {}\n", term_label(traj.termination)));
    let mut omega = object(serde_json::to_value(&traj.omega).expect("json"));
    let class = omega.remove("class").and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
    let mut line = format!("# OMEGA {class}");
    push_pairs(&mut line, &omega);
    out.push_str(&line);
    out.push('\n');
    out
}

/// `key=json` pairs; values may contain spaces inside strings.
fn parse_pairs(mut s: &str, line_no: usize) -> Result<Map<String, Value>> {
    let mut m = Map::new();
    loop {
        s = s.trim_start();
        if s.is_empty() {
            return Ok(m);
        }
        let eq = s.find('=').ok_or_else(|| Error::Parse(format!("line {line_no}: expected key=value")))?;
        let key = s[..eq].to_string();
        let rest = &s[eq + 1..];
        let mut it = serde_json::Deserializer::from_str(rest).into_iter::<Value>();
        let v = it
            .next()
            .ok_or_else(|| Error::Parse(format!("line {line_no}: missing value for {key}")))?
            .map_err(|e| Error::Parse(format!("line {line_no}: {key}: {e}")))?;
        s = &rest[it.byte_offset()..];
        m.insert(key, v);
    }
}

fn num(field: &str, name: &str, line_no: usize) -> Result<f64> {
    field.trim().parse().map_err(|_| Error::Parse(format!("line {line_no}: bad {name} '{field}'")))
}

pub fn parse_trajectory_csv(text: &str) -> Result<CsvTrajectory> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Parse("line 1: missing header".into())),
    }
    let mut out = CsvTrajectory { samples: Vec::new(), h_drift: Vec::new(), events: Vec::new(), termination: None, omega: None };
    for (i, line) in lines {
        let n = i + 1;
        if let Some(rest) = line.strip_prefix("# EVENT ") {
            let (kind, pairs) = rest.split_once(' ').unwrap_or((rest, ""));
            let mut m = parse_pairs(pairs, n)?;
            m.insert("kind".into(), Value::String(kind.into()));
            let e: Event = serde_json::from_value(Value::Object(m)).map_err(|e| Error::Parse(format!("line {n}: {e}")))?;
            out.events.push(e);
        } else if let Some(rest) = line.strip_prefix("# TERMINATION ") {
            out.termination = Some(
                serde_json::from_value(Value::String(rest.trim().into()))
                    .map_err(|e| Error::Parse(format!("line {n}: {e}")))?,
            );
        } else if let Some(rest) = line.strip_prefix("# OMEGA ") {
            let (class, pairs) = rest.split_once(' ').unwrap_or((rest, ""));
            let mut m = parse_pairs(pairs, n)?;
            m.insert("class".into(), Value::String(class.into()));
            out.omega = Some(serde_json::from_value(Value::Object(m)).map_err(|e| Error::Parse(format!("line {n}: {e}")))?);
        } else if line.starts_with('#') || line.trim().is_empty() {
            continue;
        } else {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::Parse(format!("line {n}: expected 7 fields, got {}", f.len())));
            }
            let chart = match f[1].trim() {
                "0" => Chart::Zero,
                "inf" => Chart::Inf,
                other => return Err(Error::Parse(format!("line {n}: bad chart '{other}'"))),
            };
            let t = num(f[0], "t", n)?;
            if out.samples.last().is_some_and(|s| s.t >= t) {
                return Err(Error::Parse(format!("line {n}: t not increasing")));
            }
            out.samples.push(ChartState::new(
                chart,
                Cx::new(num(f[2], "zeta_re", n)?, num(f[3], "zeta_im", n)?),
                Cx::new(num(f[4], "v_re", n)?, num(f[5], "v_im", n)?),
                t,
            ));
            out.h_drift.push(num(f[6], "h_drift", n)?);
        }
    }
    Ok(out)
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use merocon::algebra::{Chart, Cx};
use merocon::atlas::{classify_quadratic, dynamics_dossier, template_field, AtlasLabel};
use merocon::field::connection_data;
use merocon::geodesic::{batch_sweep, integrate, lift_nu_polar, ChartState, IntegratorConfig};
use merocon::io::{
    build_report, check_field, field_spec_json, parse_config, parse_cx, read_field_spec, report_json, trajectory_csv,
    trajectory_svg, write_atomic,
};
use merocon::{Error, HomogeneousField};

#[derive(Parser)]
#[command(name = "merocon", version, about = "Homogeneous vector fields on C2 and geodesics of the induced connection on P1")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Integ {
    /// Relative tolerance (absolute tolerance is 1e-2 of it)
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    tmax: Option<f64>,
    /// Escape radius for |v|
    #[arg(long)]
    escape: Option<f64>,
    #[arg(long)]
    pole_radius: Option<f64>,
    /// Minimum time between recorded samples
    #[arg(long)]
    stride: Option<f64>,
    /// TOML file with an [integrator] table
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Connection data, singularity reports and atlas dossier as JSON
    Classify {
        field: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate one geodesic and write the trajectory CSV
    Simulate {
        field: Option<PathBuf>,
        /// Normal-form model: MU_X RHO [A N]
        #[arg(long, num_args = 2..=4, value_names = ["MU_X", "RHO"])]
        model: Option<Vec<String>>,
        /// Start at a point z0,w0 of C2
        #[arg(long, allow_hyphen_values = true, conflicts_with = "state")]
        from: Option<String>,
        /// Start at chart,zeta,v with chart 0 or inf
        #[arg(long, allow_hyphen_values = true)]
        state: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[command(flatten)]
        integ: Integ,
    },
    /// Integrate many geodesics in parallel and summarize each
    Sweep {
        field: PathBuf,
        /// File of starts, one chart,zeta,v per line
        #[arg(long)]
        starts: Option<PathBuf>,
        /// Number of random starts when no file is given
        #[arg(long, default_value_t = 16)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        integ: Integ,
    },
    /// Quadratic normal form of a field, or the field of a normal form
    Atlas {
        field: Option<PathBuf>,
        #[arg(long, conflicts_with = "field")]
        label: Option<String>,
        /// Template parameters, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        params: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Invariant checks on a field
    Check {
        field: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Fail {
    Input(String),
    Run(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Parse(_) | Error::Io(_) | Error::Dicritical => Fail::Input(e.to_string()),
            _ => Fail::Run(e.to_string()),
        }
    }
}

type Res<T> = std::result::Result<T, Fail>;

fn emit(out: Option<&Path>, text: &str) -> Res<()> {
    match out {
        Some(p) => Ok(write_atomic(p, text.as_bytes())?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn config(i: &Integ) -> Res<IntegratorConfig> {
    let mut cfg = match &i.config {
        Some(p) => parse_config(&std::fs::read_to_string(p).map_err(Error::from)?)?.integrator,
        None => IntegratorConfig::default(),
    };
    if let Some(t) = i.tol {
        cfg.rel_tol = t;
        cfg.abs_tol = t * 1e-2;
    }
    if let Some(t) = i.tmax {
        cfg.t_max = t;
    }
    if let Some(r) = i.escape {
        cfg.escape_radius = r;
    }
    if let Some(r) = i.pole_radius {
        cfg.pole_radius = r;
    }
    if let Some(s) = i.stride {
        cfg.record_stride = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_state(s: &str) -> Res<ChartState> {
    let f: Vec<&str> = s.split(',').collect();
    if f.len() != 3 {
        return Err(Fail::Input(format!("--state wants chart,zeta,v; got '{s}'")));
    }
    let chart = match f[0].trim() {
        "0" => Chart::Zero,
        "inf" => Chart::Inf,
        c => return Err(Fail::Input(format!("chart must be 0 or inf, got '{c}'"))),
    };
    let v = parse_cx(f[2])?;
    if v == Cx::new(0.0, 0.0) {
        return Err(Fail::Input("v = 0 lies on the zero section".into()));
    }
    Ok(ChartState::new(chart, parse_cx(f[1])?, v, 0.0))
}

fn model_field(m: &[String]) -> Res<HomogeneousField> {
    let mu: usize = m[0].parse().map_err(|_| Fail::Input(format!("MU_X must be a positive integer, got '{}'", m[0])))?;
    let rho = parse_cx(&m[1])?;
    if rho == Cx::new(0.0, 0.0) {
        return Err(Fail::Input("rho = 0 has no Fuchsian model; use an apparent field file instead".into()));
    }
    let (a, n) = match m.len() {
        2 => (Cx::new(0.0, 0.0), 0),
        4 => (parse_cx(&m[2])?, m[3].parse().map_err(|_| Fail::Input(format!("bad N '{}'", m[3])))?),
        _ => return Err(Fail::Input("--model takes MU_X RHO or MU_X RHO A N".into())),
    };
    Ok(HomogeneousField::model(mu, rho, a, n)?)
}

fn run(cli: Cli) -> Res<bool> {
    match cli.cmd {
        Cmd::Classify { field, out } => {
            let q = read_field_spec(&field)?;
            emit(out.as_deref(), &(report_json(&build_report(&q)?) + "\n"))?;
            Ok(true)
        }
        Cmd::Simulate { field, model, from, state, out, svg, integ } => {
            let q = match (&field, &model) {
                (Some(p), None) => read_field_spec(p)?,
                (None, Some(m)) => model_field(m)?,
                _ => return Err(Fail::Input("give exactly one of a field file or --model".into())),
            };
            let init = match (&from, &state) {
                (Some(f), None) => {
                    let (a, b) = f.split_once(',').ok_or_else(|| Fail::Input("--from wants z0,w0".into()))?;
                    lift_nu_polar((parse_cx(a)?, parse_cx(b)?), q.nu)?
                }
                (None, Some(s)) => parse_state(s)?,
                _ => return Err(Fail::Input("give --from or --state".into())),
            };
            let cfg = config(&integ)?;
            let cd = connection_data(&q)?;
            let traj = integrate(&cd, &init, &cfg)?;
            emit(out.as_deref(), &trajectory_csv(&traj))?;
            if let Some(p) = svg {
                write_atomic(&p, trajectory_svg(&traj, &cd).as_bytes())?;
            }
            eprintln!(
                "t_end={:.6e} termination={:?} omega={:?} self_intersections={} drift={:.3e}",
                traj.last().t,
                traj.termination,
                traj.omega.class,
                traj.omega.self_intersections,
                traj.invariant_drift
            );
            Ok(true)
        }
        Cmd::Sweep { field, starts, count, seed, out, integ } => {
            let q = read_field_spec(&field)?;
            let cfg = config(&integ)?;
            let inits: Vec<ChartState> = match starts {
                Some(p) => std::fs::read_to_string(&p)
                    .map_err(Error::from)?
                    .lines()
                    .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
                    .map(parse_state)
                    .collect::<Res<_>>()?,
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..count)
                        .map(|_| {
                            let z = Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                            let v = Cx::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
                            ChartState::new(Chart::Zero, z, v, 0.0)
                        })
                        .collect()
                }
            };
            let cd = connection_data(&q)?;
            let mut text = String::from("index,chart,zeta_re,zeta_im,v_re,v_im,termination,omega,self_intersections,t_end\n");
            for (i, (s, r)) in inits.iter().zip(batch_sweep(&cd, &inits, &cfg)).enumerate() {
                let head = format!("{i},{},{:.16e},{:.16e},{:.16e},{:.16e}", s.chart.label(), s.zeta.re, s.zeta.im, s.v.re, s.v.im);
                match r {
                    Ok(t) => text.push_str(&format!(
                        "{head},{:?},{:?},{},{:.16e}\n",
                        t.termination,
                        t.omega.class,
                        t.omega.self_intersections,
                        t.last().t
                    )),
                    Err(e) => text.push_str(&format!("{head},error,\"{}\",,\n", e.replace('"', "'"))),
                }
            }
            emit(out.as_deref(), &text)?;
            Ok(true)
        }
        Cmd::Atlas { field, label, params, out } => {
            if let Some(name) = label {
                let p: Vec<Cx> = params.iter().map(|s| parse_cx(s)).collect::<merocon::Result<_>>()?;
                let l = AtlasLabel::from_parts(&name, &p)?;
                emit(out.as_deref(), &(field_spec_json(&template_field(&l)?) + "\n"))?;
                return Ok(true);
            }
            let path = field.ok_or_else(|| Fail::Input("give a field file or --label".into()))?;
            let q = read_field_spec(&path)?;
            let r = classify_quadratic(&q)?;
            let d = dynamics_dossier(&q, &r)?;
            emit(out.as_deref(), &(serde_json::to_string_pretty(&d).expect("json") + "\n"))?;
            Ok(true)
        }
        Cmd::Check { field, seed } => {
            let q = read_field_spec(&field)?;
            let rows = check_field(&q, seed)?;
            let mut ok = true;
            for r in &rows {
                ok &= r.passed;
                println!(
                    "{:<28} {}  value={:.3e} tol={:.1e}  {}",
                    r.name,
                    if r.passed { "PASS" } else { "FAIL" },
                    r.value,
                    r.tolerance,
                    r.detail
                );
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Fail::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Fail::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

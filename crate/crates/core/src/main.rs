//! Command-line front end: evaluates expressions, estimates seminorms, and
//! runs the two escape-certificate pipelines, emitting versioned JSON
//! reports and CSV traces.
//!
//! Exit codes: 0 success, 2 input error, 3 domain error, 4 certificate
//! verdict FAIL.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use blochlab::error::Error;
use blochlab::lab::{
    self, NonblochThresholds, SelectOpts, Theorem2Status, VerdictStatus,
};
use blochlab::parse::{expr_from_json, parse_expr, read_zeros_file};
use blochlab::seminorms::{
    self, ExecCtx, RefineRow, SeminormKind, SupProfile,
};
use blochlab::{DiscPoint, FunctionExpr, SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "blochlab", version, about = "disc-function laboratory: seminorm estimators and escape certificates")]
struct Cli {
    /// Plain key=value defaults, overridden by explicit flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Parallelism width for circle scans (results are width-independent).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Attach a volatile metadata block (timestamp) to JSON output.
    #[arg(long, global = true)]
    meta: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate an expression at a point: value, log-modulus, derivative.
    Eval {
        /// Expression in the mini-language, e.g. "product(inner(1), log1m())".
        #[arg(long)]
        expr: Option<String>,
        /// Expression as a JSON AST file.
        #[arg(long)]
        expr_json: Option<PathBuf>,
        /// Point as "re,im" (Cartesian).
        #[arg(long)]
        z: Option<String>,
        /// Point as "gap_log,theta" (boundary-gap form).
        #[arg(long)]
        z_gap: Option<String>,
    },
    /// Lower-bound seminorm estimate (bloch, blog or normal).
    Seminorm {
        #[arg(long)]
        expr: Option<String>,
        #[arg(long)]
        expr_json: Option<PathBuf>,
        /// bloch | blog | normal
        #[arg(long, default_value = "bloch")]
        kind: String,
        /// Radial ladder depth: circles at 1 - 2^{-j}, j <= levels.
        #[arg(long)]
        levels: Option<u32>,
        /// Write the refinement trace as CSV.
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Horocycle-versus-radius dichotomy for F = S f with S the atomic
    /// singular inner function.
    Theorem2 {
        #[arg(long)]
        expr: Option<String>,
        #[arg(long)]
        expr_json: Option<PathBuf>,
        /// Horocycle parameter in (0, 1).
        #[arg(long)]
        a: Option<f64>,
        /// Inner-function mass.
        #[arg(long)]
        c: Option<f64>,
        /// Trace depth: boundary distances 10^{-1} .. 10^{-depth}.
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        out_json: Option<PathBuf>,
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
    /// Radius-schedule construction of g with g f escaping the Bloch class.
    Theorem4 {
        #[arg(long)]
        expr: Option<String>,
        #[arg(long)]
        expr_json: Option<PathBuf>,
        /// Number of schedule steps.
        #[arg(long)]
        n: Option<usize>,
        /// gap_log of the first radius.
        #[arg(long)]
        r1_gap: Option<f64>,
        /// Headroom factor >= 1 on each minimal radius.
        #[arg(long)]
        margin: Option<f64>,
        /// Sup profile: real-ray | scan.
        #[arg(long)]
        sup_profile: Option<String>,
        /// Verdict threshold: required escape ratio across the window.
        #[arg(long)]
        escape_ratio_min: Option<f64>,
        /// Verdict threshold: ceiling for II/I and III/I at n = N.
        #[arg(long)]
        dominance_max: Option<f64>,
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Uniform separation and the derivative identity for a zero set.
    Interp {
        /// Zeros file: one point per line, `re im` or `gap_log theta g`.
        #[arg(long)]
        zeros: PathBuf,
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// key=value defaults from --config; explicit flags win.
struct Config(HashMap<String, String>);

impl Config {
    fn load(path: Option<&Path>) -> Result<Self, Error> {
        let mut map = HashMap::new();
        if let Some(p) = path {
            for (lineno, line) in std::fs::read_to_string(p)?.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    Error::Parse(format!("config line {}: expected key=value", lineno + 1))
                })?;
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Config(map))
    }

    fn get<T: std::str::FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, Error> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.0.get(key) {
            Some(s) => s
                .parse()
                .map_err(|_| Error::Parse(format!("config key {key}: cannot parse {s:?}"))),
            None => Ok(default),
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let cfg = Config::load(cli.config.as_deref())?;
    let jobs = cfg.get("jobs", cli.jobs, 1usize)?;
    let ctx = ExecCtx::new(jobs)?;
    let meta = cli.meta;

    match cli.cmd {
        Cmd::Eval {
            expr,
            expr_json,
            z,
            z_gap,
        } => {
            let f = load_expr(expr.as_deref(), expr_json.as_deref(), &cfg)?;
            let z = load_point(z.as_deref(), z_gap.as_deref())?;
            let value = f.eval(&z);
            let d = f.deriv();
            let dv = d.eval(&z);
            let payload = json!({
                "schema": SCHEMA_VERSION,
                "value": [value.re, value.im],
                "log_modulus": f.log_modulus(&z),
                "derivative": [dv.re, dv.im],
                "derivative_log_modulus": d.log_modulus(&z),
                "point": z,
            });
            emit(&payload, None, meta)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Seminorm {
            expr,
            expr_json,
            kind,
            levels,
            out_csv,
            out_json,
        } => {
            let f = load_expr(expr.as_deref(), expr_json.as_deref(), &cfg)?;
            let kind = match kind.as_str() {
                "bloch" => SeminormKind::Bloch,
                "blog" => SeminormKind::Blog,
                "normal" => SeminormKind::Normal,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "seminorm kind must be bloch|blog|normal, got {other:?}"
                    )))
                }
            };
            let levels = cfg.get("levels", levels, 10u32)?;
            let (est, rows) = seminorms::seminorm_est(&f, kind, levels, &ctx)?;
            if let Some(p) = out_csv {
                write_refine_csv(&p, &rows)?;
            }
            let payload = json!({
                "schema": SCHEMA_VERSION,
                "kind": kind,
                "estimate": est,
            });
            emit(&payload, out_json.as_deref(), meta)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Theorem2 {
            expr,
            expr_json,
            a,
            c,
            depth,
            out_json,
            out_csv,
        } => {
            let f = load_expr_default(expr.as_deref(), expr_json.as_deref(), &cfg)?;
            let a = cfg.get("a", a, 0.5f64)?;
            let c = cfg.get("c", c, 1.0f64)?;
            let depth = cfg.get("depth", depth, 6u32)?;
            let report = lab::verify_theorem2(&f, c, a, depth, &ctx)?;
            if let Some(p) = out_csv {
                write_trace_csv(&p, &report)?;
            }
            let status = report.status;
            let payload = json!({
                "schema": SCHEMA_VERSION,
                "report": report,
            });
            emit(&payload, out_json.as_deref(), meta)?;
            Ok(match status {
                Theorem2Status::Pass => ExitCode::SUCCESS,
                _ => ExitCode::from(4),
            })
        }
        Cmd::Theorem4 {
            expr,
            expr_json,
            n,
            r1_gap,
            margin,
            sup_profile,
            escape_ratio_min,
            dominance_max,
            out_json,
        } => {
            let f = load_expr_default(expr.as_deref(), expr_json.as_deref(), &cfg)?;
            let n = cfg.get("n", n, 8usize)?;
            let r1_gap = cfg.get("r1_gap", r1_gap, 1.0f64)?;
            let margin = cfg.get("margin", margin, lab::DEFAULT_SCHEDULE_MARGIN)?;
            let profile_name: String =
                cfg.get("sup_profile", sup_profile, "auto".to_string())?;
            let profile = match profile_name.as_str() {
                "real-ray" => SupProfile::RealRayMax,
                "scan" => SupProfile::DenseScan,
                "auto" => {
                    if f.real_ray_maximal_hint() {
                        SupProfile::RealRayMax
                    } else {
                        SupProfile::DenseScan
                    }
                }
                other => {
                    return Err(Error::InvalidInput(format!(
                        "sup profile must be real-ray|scan|auto, got {other:?}"
                    )))
                }
            };
            let thresholds = NonblochThresholds {
                escape_ratio_min: cfg.get("escape_ratio_min", escape_ratio_min, 4.0)?,
                dominance_max: cfg.get("dominance_max", dominance_max, 0.5)?,
                ..NonblochThresholds::default()
            };
            let opts = SelectOpts { margin, profile };
            let report = lab::build_counterexample(&f, n, r1_gap, &opts, &thresholds, &ctx)?;
            let status = report.verdict.status;
            let payload = json!({
                "schema": SCHEMA_VERSION,
                "report": report,
            });
            emit(&payload, out_json.as_deref(), meta)?;
            Ok(match status {
                VerdictStatus::Pass => ExitCode::SUCCESS,
                _ => ExitCode::from(4),
            })
        }
        Cmd::Interp { zeros, out_json } => {
            let pts = read_zeros_file(
                zeros
                    .to_str()
                    .ok_or_else(|| Error::InvalidInput("zeros path is not UTF-8".into()))?,
            )?;
            let delta = lab::uniform_separation(&pts);
            let deviation = lab::interpolation_derivative_identity(&pts)?;
            let payload = json!({
                "schema": SCHEMA_VERSION,
                "count": pts.len(),
                "delta": delta,
                "identity_max_deviation": deviation,
            });
            emit(&payload, out_json.as_deref(), meta)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_expr(
    expr: Option<&str>,
    expr_json: Option<&Path>,
    _cfg: &Config,
) -> Result<FunctionExpr, Error> {
    match (expr, expr_json) {
        (Some(src), None) => parse_expr(src),
        (None, Some(p)) => expr_from_json(&std::fs::read_to_string(p)?),
        (None, None) => Err(Error::InvalidInput(
            "give an expression with --expr or --expr-json".into(),
        )),
        (Some(_), Some(_)) => Err(Error::InvalidInput(
            "--expr and --expr-json are mutually exclusive".into(),
        )),
    }
}

/// Like `load_expr` but defaulting to the unbounded Bloch model function
/// log(1/(1-z)) when nothing is given.
fn load_expr_default(
    expr: Option<&str>,
    expr_json: Option<&Path>,
    cfg: &Config,
) -> Result<FunctionExpr, Error> {
    if expr.is_none() && expr_json.is_none() {
        return Ok(FunctionExpr::LogOneMinus);
    }
    load_expr(expr, expr_json, cfg)
}

fn load_point(z: Option<&str>, z_gap: Option<&str>) -> Result<DiscPoint, Error> {
    let parse_pair = |s: &str, what: &str| -> Result<(f64, f64), Error> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        match parts.as_slice() {
            [a] => Ok((
                a.parse()
                    .map_err(|_| Error::Parse(format!("{what}: bad number {a:?}")))?,
                0.0,
            )),
            [a, b] => Ok((
                a.parse()
                    .map_err(|_| Error::Parse(format!("{what}: bad number {a:?}")))?,
                b.parse()
                    .map_err(|_| Error::Parse(format!("{what}: bad number {b:?}")))?,
            )),
            _ => Err(Error::Parse(format!("{what}: expected one or two numbers"))),
        }
    };
    match (z, z_gap) {
        (Some(s), None) => {
            let (re, im) = parse_pair(s, "--z")?;
            DiscPoint::from_cartesian(re, im)
        }
        (None, Some(s)) => {
            let (gap, theta) = parse_pair(s, "--z-gap")?;
            DiscPoint::from_gap(gap, theta)
        }
        (None, None) => Ok(DiscPoint::ZERO),
        (Some(_), Some(_)) => Err(Error::InvalidInput(
            "--z and --z-gap are mutually exclusive".into(),
        )),
    }
}

fn emit<T: Serialize>(payload: &T, out: Option<&Path>, meta: bool) -> Result<(), Error> {
    let mut value = serde_json::to_value(payload)?;
    if meta {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        value["meta"] = json!({ "generated_unix_ms": now });
    }
    let body = serde_json::to_string_pretty(&value)?;
    match out {
        Some(p) => {
            let mut fh = std::fs::File::create(p)?;
            fh.write_all(body.as_bytes())?;
            fh.write_all(b"\n")?;
        }
        None => println!("{body}"),
    }
    Ok(())
}

fn write_refine_csv(path: &Path, rows: &[RefineRow]) -> Result<(), Error> {
    let mut out = String::from("level,r_gap_log,theta,quantity,log_scale_flag\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e},{}\n",
            r.level, r.r_gap_log, r.theta, r.quantity, r.log_scale as u8
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn write_trace_csv(path: &Path, report: &lab::Theorem2Report) -> Result<(), Error> {
    let mut out = String::from(
        "path,param,gap_log,theta,log_mod_product,log_mod_inner,log_mod_bloch,bloch_q,normal_q\n",
    );
    for (name, trace) in [
        ("horocycle", &report.horocycle_trace),
        ("radial", &report.radial_trace),
    ] {
        for s in trace {
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                name,
                s.param,
                s.gap_log,
                s.theta,
                s.log_mod_product,
                s.log_mod_inner,
                s.log_mod_bloch,
                s.bloch_q,
                s.normal_q
            ));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

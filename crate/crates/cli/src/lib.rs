//! Command-line front end: reads a JSON config, runs one command and emits
//! CSV or JSON. Exit codes: 0 success, 1 a check failed (or the inputs are
//! mathematically degenerate), 2 usage or configuration error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clab::bounds::{self, LevelCoefficients, MomentGrowthSpec};
use clab::calculus::PolyFunction;
use clab::discrete::{self, FiniteProductSpace};
use clab::samplers::{self, SampleBatch};
use clab::tensor::{self, OpNormOptions, Tensor};
use clab::verify::{self, TailSource, DEFAULT_DELTA, SCHEMA_VERSION};
use clab::{Error, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use config::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_FD_POINTS: usize = 16;
/// Finite-difference acceptance thresholds.
pub const FD_GRAD_TOL: f64 = 1e-5;
pub const FD_HESS_TOL: f64 = 1e-4;

#[derive(Parser, Debug)]
#[command(
    name = "clab",
    version,
    about = "Multilevel concentration bounds and their verification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the sample count in the config.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Overrides the confidence level δ.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// HS and op(q) norms of tensors or derivative tensors.
    Norms,
    /// Tail-bound curves.
    Bound,
    /// Draw samples.
    Sample,
    /// Compare an inequality against samples or exact enumeration.
    Verify,
    /// Dependence profile and difference operators on a finite space.
    Discrete,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Outcome of a command that ran to completion.
struct Output {
    bytes: Vec<u8>,
    passed: bool,
}

impl Output {
    fn ok(bytes: Vec<u8>) -> Self {
        Output { bytes, passed: true }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::DegenerateLevels | Error::Dobrushin(_) | Error::Singular(_) => EXIT_FAILED,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            let written = match &cli.out {
                Some(path) => fs::write(path, &out.bytes).map_err(Error::from),
                None => stdout.write_all(&out.bytes).map_err(Error::from),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_USAGE;
            }
            if out.passed {
                EXIT_OK
            } else {
                let _ = writeln!(stderr, "verification failed");
                EXIT_FAILED
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> Result<Output> {
    if let Some(d) = cli.delta {
        check_delta(d)?;
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("--config is required".into()))?;
    let text = fs::read_to_string(path)?;
    match cli.command {
        Command::Norms => cmd_norms(&parse(&text)?, cli),
        Command::Bound => cmd_bound(&parse(&text)?, cli),
        Command::Sample => cmd_sample(&parse(&text)?, cli),
        Command::Verify => cmd_verify(&parse(&text)?, cli),
        Command::Discrete => cmd_discrete(&parse(&text)?, cli),
    }
}

fn check_delta(d: f64) -> Result<()> {
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {d}")));
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Adds `schema_version` to a serialized report object when missing.
fn versioned<T: Serialize>(v: &T) -> Result<Value> {
    let mut value = serde_json::to_value(v)?;
    if let Value::Object(m) = &mut value {
        m.entry("schema_version").or_insert_with(|| json!(SCHEMA_VERSION));
    }
    Ok(value)
}

/// Header plus one row from the scalar fields of a JSON object.
fn flat_csv(value: &Value) -> Vec<u8> {
    let mut header = Vec::new();
    let mut row = Vec::new();
    if let Value::Object(m) = value {
        for (k, v) in m {
            let cell = match v {
                Value::Null => String::new(),
                Value::Bool(b) => b.to_string(),
                Value::Number(n) => n.to_string(),
                Value::String(s) => s.clone(),
                _ => continue,
            };
            header.push(k.clone());
            row.push(cell);
        }
    }
    format!("{}\n{}\n", header.join(","), row.join(",")).into_bytes()
}

fn join(v: &[f64], sep: &str) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

#[derive(Serialize)]
struct NormRow {
    point: Option<Vec<f64>>,
    order: usize,
    hs: f64,
    op: f64,
    converged: bool,
}

fn cmd_norms(cfg: &NormsConfig, cli: &Cli) -> Result<Output> {
    let opts = OpNormOptions {
        seed: cli.seed.or(cfg.seed).unwrap_or(OpNormOptions::default().seed),
        ..OpNormOptions::default()
    };
    let norm_row = |t: &Tensor, point: Option<Vec<f64>>| -> Result<NormRow> {
        let r = tensor::op_norm(t, cfg.q, &opts)?;
        Ok(NormRow {
            point,
            order: t.order(),
            hs: tensor::hs_norm(t),
            op: r.value,
            converged: r.converged,
        })
    };
    let mut rows = Vec::new();
    match (&cfg.tensor, &cfg.function) {
        (Some(t), None) => rows.push(norm_row(t, None)?),
        (None, Some(spec)) => {
            let f = spec.build()?;
            if cfg.points.is_empty() || cfg.orders.is_empty() {
                return Err(Error::InvalidParameter("function norms need points and orders".into()));
            }
            for x in &cfg.points {
                for &j in &cfg.orders {
                    if j == 0 {
                        return Err(Error::InvalidParameter("derivative order must be at least 1".into()));
                    }
                    let d = f.derivative_tensor(j, x)?;
                    rows.push(norm_row(d.as_tensor(), Some(x.clone()))?);
                }
            }
        }
        _ => return Err(Error::InvalidParameter("give exactly one of tensor or function".into())),
    }
    let bytes = match cli.format {
        Format::Json => to_json(&json!({ "schema_version": SCHEMA_VERSION, "q": cfg.q, "rows": rows }))?,
        Format::Csv => {
            let mut s = String::from("point,order,hs,op\n");
            for r in &rows {
                let p = r.point.as_deref().map(|p| join(p, ";")).unwrap_or_default();
                s.push_str(&format!("{},{},{},{}\n", p, r.order, r.hs, r.op));
            }
            s.into_bytes()
        }
    };
    Ok(Output::ok(bytes))
}

fn cmd_bound(cfg: &BoundConfig, cli: &Cli) -> Result<Output> {
    let (kind, grid, values) = match cfg {
        BoundConfig::Tail { setting, levels, grid } => {
            let s = setting.build()?;
            let k = LevelCoefficients::new(levels.clone())?;
            let g = grid.build()?;
            let v = eval(&g, |t| bounds::tail_bound(&s, &k, t))?;
            ("tail", g, v)
        }
        BoundConfig::Hw { setting, hs, op, grid } => {
            let s = setting.build()?;
            let g = grid.build()?;
            let v = eval(&g, |t| bounds::hw_bound(&s, *hs, *op, t))?;
            ("hw", g, v)
        }
        BoundConfig::Chaos {
            ew,
            a,
            b,
            sigma2,
            two_sided,
            grid,
        } => {
            let g = grid.build()?;
            let v = eval(&g, |t| {
                if *two_sided {
                    bounds::chaos_sup_bound_two_sided(ew, *a, *b, *sigma2, t)
                } else {
                    bounds::chaos_sup_bound(ew, *a, *b, *sigma2, t)
                }
            })?;
            ("chaos", g, v)
        }
        BoundConfig::Moments { terms, r0, grid } => {
            let m = MomentGrowthSpec {
                terms: terms.clone(),
                r0: *r0,
            };
            m.validate()?;
            let g = grid.build()?;
            let v = eval(&g, |t| bounds::tail_from_moments(&m, t))?;
            ("moments", g, v)
        }
    };
    let bytes = match cli.format {
        Format::Json => {
            to_json(&json!({ "schema_version": SCHEMA_VERSION, "kind": kind, "grid": grid, "bound": values }))?
        }
        Format::Csv => {
            let mut s = String::from("t,bound\n");
            for (t, b) in grid.iter().zip(&values) {
                s.push_str(&format!("{t},{b}\n"));
            }
            s.into_bytes()
        }
    };
    Ok(Output::ok(bytes))
}

fn eval<F: Fn(f64) -> Result<f64>>(grid: &[f64], f: F) -> Result<Vec<f64>> {
    grid.iter().map(|&t| f(t)).collect()
}

fn draw(source: &SourceSpec, count: usize, seed: u64) -> Result<SampleBatch> {
    match source {
        SourceSpec::Measure(m) => samplers::sample(m, count, seed),
        other => samplers::sample_finite(&other.finite_space()?, count, seed),
    }
}

fn cmd_sample(cfg: &SampleConfig, cli: &Cli) -> Result<Output> {
    let count = cli.samples.or(cfg.count).unwrap_or(DEFAULT_SAMPLES);
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let batch = draw(&cfg.source, count, seed)?;
    let bytes = if cfg.binary {
        samplers::encode_binary(&batch)
    } else {
        match cli.format {
            Format::Csv => {
                let mut buf = Vec::new();
                samplers::write_csv(&batch, &mut buf)?;
                buf
            }
            Format::Json => to_json(&versioned(&batch)?)?,
        }
    };
    Ok(Output::ok(bytes))
}

/// Function values and levels for a verification source.
enum Prepared {
    Samples { batch: SampleBatch, f: PolyFunction },
    Exhaustive { space: FiniteProductSpace, table: Vec<f64> },
}

impl Prepared {
    fn new(source: &SourceSpec, function: &FunctionSpec, samples: usize, seed: u64) -> Result<Self> {
        let f = function.build()?;
        Ok(match source {
            SourceSpec::Measure(m) => {
                let batch = samplers::sample(m, samples, seed)?;
                if f.nvars() != batch.dim {
                    return Err(Error::Shape(format!(
                        "function has {} variables, samples have {}",
                        f.nvars(),
                        batch.dim
                    )));
                }
                Prepared::Samples { batch, f }
            }
            other => {
                let space = other.finite_space()?;
                let table = space.tabulate_poly(&f)?;
                Prepared::Exhaustive { space, table }
            }
        })
    }

    fn source(&self, mean: Option<f64>) -> TailSource<'_> {
        match self {
            Prepared::Samples { batch, f } => TailSource::Samples { batch, f, mean },
            Prepared::Exhaustive { space, table } => TailSource::Exhaustive { space, table },
        }
    }

    fn levels(&self, given: &Option<Vec<f64>>, d: u32) -> Result<LevelCoefficients> {
        if let Some(k) = given {
            return LevelCoefficients::new(k.clone());
        }
        let opts = OpNormOptions::default();
        match self {
            Prepared::Samples { batch, f } => Ok(verify::poly_levels_mc(f, batch, d as usize, &opts)?.k),
            Prepared::Exhaustive { space, table } => verify::h_levels_exact(table, space, d as usize, &opts),
        }
    }
}

fn emit_curve(rep: &verify::VerificationReport, format: Format) -> Result<Output> {
    let bytes = match format {
        Format::Json => {
            let mut s = rep.to_json()?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let mut buf = Vec::new();
            rep.write_csv(&mut buf)?;
            buf
        }
    };
    Ok(Output {
        bytes,
        passed: rep.pass,
    })
}

fn emit_flat<T: Serialize>(rep: &T, pass: bool, format: Format) -> Result<Output> {
    let value = versioned(rep)?;
    let bytes = match format {
        Format::Json => to_json(&value)?,
        Format::Csv => flat_csv(&value),
    };
    Ok(Output { bytes, passed: pass })
}

fn cmd_verify(cfg: &VerifyConfig, cli: &Cli) -> Result<Output> {
    let samples = |own: &Option<usize>| cli.samples.or(*own).unwrap_or(DEFAULT_SAMPLES);
    let seed = |own: &Option<u64>| cli.seed.or(*own).unwrap_or(0);
    let delta = |own: &Option<f64>| -> Result<f64> {
        let d = cli.delta.or(*own).unwrap_or(DEFAULT_DELTA);
        check_delta(d)?;
        Ok(d)
    };
    match cfg {
        VerifyConfig::Tail {
            source,
            function,
            setting,
            levels,
            grid,
            mean,
            samples: n,
            seed: sd,
            delta: dl,
        } => {
            let delta = delta(dl)?;
            let s = setting.build()?;
            let grid = grid.build()?;
            let prep = Prepared::new(source, function, samples(n), seed(sd))?;
            let k = prep.levels(levels, s.d)?;
            let mut rep = verify::verify_tail(&prep.source(*mean), &s, &k, &grid, delta)?;
            rep.levels = k.values().to_vec();
            emit_curve(&rep, cli.format)
        }
        VerifyConfig::Hw {
            source,
            function,
            setting,
            hs,
            op,
            grid,
            mean,
            samples: n,
            seed: sd,
            delta: dl,
        } => {
            let delta = delta(dl)?;
            let s = setting.build()?;
            let grid = grid.build()?;
            let rep = match Prepared::new(source, function, samples(n), seed(sd))? {
                Prepared::Samples { batch, f } => {
                    let values = verify::evaluate_on_batch(&f, &batch)?;
                    let m = mean.unwrap_or_else(|| values.iter().sum::<f64>() / values.len() as f64);
                    let centered: Vec<f64> = values.iter().map(|v| v - m).collect();
                    verify::verify_hw(&centered, &s, *hs, *op, &grid, delta)?
                }
                Prepared::Exhaustive { space, table } => {
                    bounds::hw_bound(&s, *hs, *op, 1.0)?;
                    verify::curve_report_exhaustive(&space, &table, &grid, false, |t| {
                        bounds::hw_bound(&s, *hs, *op, t)
                    })?
                }
            };
            emit_curve(&rep, cli.format)
        }
        VerifyConfig::Moments {
            source,
            function,
            setting,
            levels,
            r,
            mean,
            samples: n,
            seed: sd,
        } => {
            let s = setting.build()?;
            let prep = Prepared::new(source, function, samples(n), seed(sd))?;
            let k = prep.levels(levels, s.d)?;
            let rep = verify::verify_moment_recursion(&prep.source(*mean), &s, &k, r)?;
            let bytes = match cli.format {
                Format::Json => to_json(&rep)?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    rep.write_csv(&mut buf)?;
                    buf
                }
            };
            Ok(Output {
                bytes,
                passed: rep.pass,
            })
        }
        VerifyConfig::ExpMoment {
            source,
            function,
            setting,
            levels,
        } => {
            let s = setting.build()?;
            let space = source.finite_space()?;
            let table = space.tabulate_poly(&function.build()?)?;
            let prep = Prepared::Exhaustive { space, table };
            let k = prep.levels(levels, s.d)?;
            let cert = bounds::exp_moment_certificate(&s, &k)?;
            let Prepared::Exhaustive { space, table } = &prep else {
                unreachable!()
            };
            let rep = verify::verify_exp_moment(space, table, &cert, true)?;
            emit_flat(&rep, rep.pass, cli.format)
        }
        VerifyConfig::Dlsi {
            source,
            sigma2,
            budget,
            seed: sd,
        } => {
            let space = source.finite_space()?;
            let claimed = match sigma2 {
                Some(v) => *v,
                None => discrete::dlsi_constant(&discrete::dependence_profile(&space)?)?.sigma2,
            };
            let rep = verify::verify_dlsi(&space, claimed, *budget, seed(sd))?;
            emit_flat(&rep, rep.pass, cli.format)
        }
        VerifyConfig::FiniteDifference {
            manifold,
            function,
            points,
            measure,
            samples: n,
            seed: sd,
            h,
        } => {
            let f = function.build()?;
            let pts: Vec<Vec<f64>> = if points.is_empty() {
                let m = measure
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter("give points or a measure to sample them from".into()))?;
                let count = cli.samples.or(*n).unwrap_or(DEFAULT_FD_POINTS);
                samplers::sample(m, count, seed(sd))?
                    .rows()
                    .map(|r| r.to_vec())
                    .collect()
            } else {
                points.clone()
            };
            let rep = verify::finite_difference_suite(&f, manifold, &pts, *h)?;
            let pass = rep.grad_rel_err <= FD_GRAD_TOL
                && rep.hess_rel_err.map_or(true, |e| e <= FD_HESS_TOL)
                && rep.contraction_holds;
            let mut value = versioned(&rep)?;
            value["pass"] = json!(pass);
            let bytes = match cli.format {
                Format::Json => to_json(&value)?,
                Format::Csv => flat_csv(&value),
            };
            Ok(Output { bytes, passed: pass })
        }
    }
}

#[derive(Serialize)]
struct PointDump {
    index: usize,
    labels: Vec<f64>,
    value: f64,
    h: Vec<f64>,
    h_plus: Vec<f64>,
    h_minus: Vec<f64>,
    d: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    tensors: Vec<TensorDump>,
}

#[derive(Serialize)]
struct TensorDump {
    order: usize,
    entries: Vec<f64>,
    hs: f64,
}

fn cmd_discrete(cfg: &DiscreteConfig, cli: &Cli) -> Result<Output> {
    let space = cfg.source.finite_space()?;
    let profile = discrete::dependence_profile(&space)?;
    let dlsi = match discrete::dlsi_constant(&profile) {
        Ok(c) => Some(c),
        Err(Error::Dobrushin(_)) => None,
        Err(e) => return Err(e),
    };
    let mut dumps = Vec::new();
    if let Some(spec) = &cfg.function {
        let table = space.tabulate_poly(&spec.build()?)?;
        let indices: Vec<usize> = if cfg.points.is_empty() {
            (0..space.size()).collect()
        } else {
            cfg.points.clone()
        };
        for x in indices {
            let (h, h_plus, h_minus) = discrete::h_vectors(&table, &space, x)?;
            let d = Some(discrete::d_operator(&table, &space, x)?);
            let tensors = cfg
                .orders
                .iter()
                .map(|&j| {
                    let t = discrete::h_tensor(&table, &space, j, x)?.into_tensor();
                    Ok(TensorDump {
                        order: j,
                        hs: tensor::hs_norm(&t),
                        entries: t.entries().to_vec(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            dumps.push(PointDump {
                index: x,
                labels: space.labels(x),
                value: table[x],
                h,
                h_plus,
                h_minus,
                d,
                tensors,
            });
        }
    }
    let bytes = match cli.format {
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "n": space.n(),
            "configurations": space.size(),
            "profile": profile,
            "dlsi": dlsi,
            "points": dumps,
        }))?,
        Format::Csv if dumps.is_empty() => {
            // interdependence matrix, one row per site
            let mut s = String::new();
            for row in &profile.j {
                s.push_str(&join(row, ","));
                s.push('\n');
            }
            s.into_bytes()
        }
        Format::Csv => {
            let mut s = String::from("index,site,h,h_plus,h_minus,d\n");
            for p in &dumps {
                for i in 0..space.n() {
                    let d = p.d.as_ref().map(|d| d[i].to_string()).unwrap_or_default();
                    s.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        p.index, i, p.h[i], p.h_plus[i], p.h_minus[i], d
                    ));
                }
            }
            s.into_bytes()
        }
    };
    Ok(Output::ok(bytes))
}

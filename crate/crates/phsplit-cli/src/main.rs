//! Command-line front end: scheme catalogue, single runs, convergence and
//! dissipation studies, and the deterministic property suites.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure.

mod modelfile;
mod output;
mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use phsplit::diagnostics::{
    attach_supplied, convergence_study, h_grid, integrate, trace_from_trajectory, Method,
};
use phsplit::phmodel::{hamiltonian, oscillator, rigid_body};
use phsplit::schemes::{preset, SchemeKind, CATALOGUE};
use phsplit::{Error, Input, Real, System};

#[derive(Parser)]
#[command(
    name = "phsplit",
    version,
    about = "Structure-preserving splitting integrators for linear port-Hamiltonian systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect the scheme catalogue
    Schemes {
        #[command(subcommand)]
        action: SchemesAction,
    },
    /// Integrate a single trajectory and write it out
    Run(RunArgs),
    /// Convergence study over a halving step-size grid
    Converge(ConvergeArgs),
    /// Dissipation trace at a single step size
    Dissipation(DissipationArgs),
    /// Run the deterministic property suites
    Selftest {
        /// Seed for the random suites
        #[arg(long, default_value_t = 0xC0FFEE)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum SchemesAction {
    /// Print one row per preset
    List,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Model: oscillator | rigidbody | custom
    #[arg(long, default_value = "oscillator")]
    model: String,

    /// Matrix file for `--model custom` (first line `n p`, then rows of J,
    /// R, B and optionally x0)
    #[arg(long)]
    model_file: Option<PathBuf>,

    /// Oscillator mass
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Oscillator damping
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    /// Oscillator stiffness
    #[arg(long, default_value_t = 1000.0)]
    k: f64,
    /// Drive the model with u(t) = f0 cos(omega t)
    #[arg(long)]
    driven: bool,
    /// Driving amplitude
    #[arg(long, default_value_t = 5.0)]
    f0: f64,
    /// Driving frequency
    #[arg(long, default_value_t = 3.0)]
    omega: f64,

    /// Rigid-body friction coefficients
    #[arg(long, default_value_t = 0.0)]
    r1: f64,
    #[arg(long, default_value_t = 5.0)]
    r2: f64,
    #[arg(long, default_value_t = 1000.0)]
    r3: f64,
    /// Rigid-body moments of inertia
    #[arg(long = "I1", default_value_t = 1.0 / 4900.0)]
    i1: f64,
    #[arg(long = "I2", default_value_t = 1.0)]
    i2: f64,
    #[arg(long = "I3", default_value_t = 25.0)]
    i3: f64,
}

#[derive(Args, Clone)]
struct SpanArgs {
    /// Start time
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    /// Final time
    #[arg(long = "t-end", default_value_t = 5.0)]
    t_end: f64,
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Scheme name (see `schemes list`; driven models also accept `esq`
    /// and `esq-tilde3`)
    #[arg(long)]
    scheme: String,
    /// Step size
    #[arg(long)]
    h: f64,
    #[command(flatten)]
    span: SpanArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Scheme names (repeatable)
    #[arg(long, required = true)]
    scheme: Vec<String>,
    /// Grid exponents `k0..k1` for h = 0.1 * 2^-k
    #[arg(long = "h-grid", default_value = "0..5")]
    h_grid: String,
    #[command(flatten)]
    span: SpanArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Also emit a log-log SVG plot next to the output file
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct DissipationArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Scheme name
    #[arg(long)]
    scheme: String,
    /// Step size
    #[arg(long)]
    h: f64,
    #[command(flatten)]
    span: SpanArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Also emit a time-series SVG plot next to the output file
    #[arg(long)]
    plot: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum CliError {
    Config(String),
    Numeric(String),
}

impl CliError {
    fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite(_)
            | Error::Singular
            | Error::NonFiniteState { .. }
            | Error::QuadratureNoConvergence { .. }
            | Error::OrderIndeterminate(_) => CliError::Numeric(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o error: {e}"))
    }
}

/// Base tolerance for structure validation and violation detection;
/// overridden by the PHSPLIT_TOL environment variable.
fn base_tol() -> Result<Real, CliError> {
    match std::env::var("PHSPLIT_TOL") {
        Ok(text) => text
            .parse::<Real>()
            .ok()
            .filter(|v| v.is_finite() && *v > 0.0)
            .ok_or_else(|| CliError::config(format!("PHSPLIT_TOL must be a positive number, got '{text}'"))),
        Err(_) => Ok(1e-12),
    }
}

struct ModelSetup {
    system: System,
    input: Option<Input>,
    x0: Vec<Real>,
    label: String,
}

fn build_model(args: &ModelArgs, tol: Real) -> Result<ModelSetup, CliError> {
    match args.model.as_str() {
        "oscillator" => {
            let driven = args.driven.then_some((args.f0, args.omega));
            let (system, input) = oscillator(args.m, args.d, args.k, driven)?;
            Ok(ModelSetup {
                system,
                input: args.driven.then_some(input),
                x0: vec![0.0, 1.0],
                label: if args.driven {
                    "oscillator(driven)".into()
                } else {
                    "oscillator".into()
                },
            })
        }
        "rigidbody" => {
            let system = rigid_body([args.r1, args.r2, args.r3], [args.i1, args.i2, args.i3])?;
            Ok(ModelSetup {
                system,
                input: None,
                x0: vec![1.0, 0.0, 0.0],
                label: "rigidbody".into(),
            })
        }
        "custom" => {
            let path = args
                .model_file
                .as_ref()
                .ok_or_else(|| CliError::config("--model custom needs --model-file"))?;
            let text = fs::read_to_string(path)?;
            let parsed = modelfile::parse(&text, tol).map_err(CliError::Config)?;
            let ports = parsed.system.ports();
            let input = match ports {
                0 => None,
                1 => Some(Input::cosine(args.f0, args.omega)),
                p => {
                    return Err(CliError::config(format!(
                        "custom driven models support one port, file declares {p}"
                    )))
                }
            };
            Ok(ModelSetup {
                system: parsed.system,
                input,
                x0: parsed.x0,
                label: format!("custom({})", path.display()),
            })
        }
        other => Err(CliError::config(format!(
            "unknown model '{other}' (expected oscillator, rigidbody or custom)"
        ))),
    }
}

fn resolve_method(name: &str, driven: bool) -> Result<Method<Real>, CliError> {
    if name == "esq" || name == "esq-tilde3" {
        if !driven {
            return Err(CliError::config(format!("scheme '{name}' needs a driven model")));
        }
        return Ok(Method::Esq {
            inner: preset("ea5-a")?,
            tilde3_half: name == "esq-tilde3",
        });
    }
    let spec = preset::<Real>(name)?;
    match (spec.kind, driven) {
        (SchemeKind::PortBased, true) => Ok(Method::PortBased(spec)),
        (SchemeKind::PortBased, false) => Err(CliError::config(format!(
            "scheme '{name}' needs a driven model"
        ))),
        (SchemeKind::EnergyAssociated, false) => Ok(Method::Autonomous(spec)),
        (SchemeKind::EnergyAssociated, true) => {
            if spec.is_pbs_compatible() {
                Ok(Method::PortBased(spec))
            } else {
                Err(CliError::config(format!(
                    "scheme '{name}' integrates autonomous systems; driven runs take pbs*, strang-* or esq*"
                )))
            }
        }
    }
}

fn parse_grid(text: &str) -> Result<Vec<Real>, CliError> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| CliError::config(format!("--h-grid expects 'k0..k1', got '{text}'")))?;
    let k0: u32 = lo
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("bad grid start '{lo}'")))?;
    let k1: u32 = hi
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("bad grid end '{hi}'")))?;
    if k1 < k0 {
        return Err(CliError::config("empty step-size grid"));
    }
    Ok(h_grid(k0, k1))
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn plot_path(out: &Option<PathBuf>, fallback: &str) -> PathBuf {
    match out {
        Some(path) => path.with_extension("svg"),
        None => Path::new(fallback).to_path_buf(),
    }
}

fn cmd_schemes_list() {
    println!("name | class | stages | order | positive-steps | dissipation-preserving");
    for name in CATALOGUE {
        let spec = preset::<Real>(name).expect("catalogue preset");
        println!(
            "{} | {} | {} | {} | {} | {}",
            spec.name,
            spec.class.label(),
            spec.stages(),
            spec.order,
            if spec.positive_steps { "yes" } else { "no" },
            if spec.dissipation_preserving { "yes" } else { "no" },
        );
    }
}

fn cmd_run(args: &RunArgs, tol: Real) -> Result<(), CliError> {
    let model = build_model(&args.model, tol)?;
    let driven = model.input.is_some();
    let method = resolve_method(&args.scheme, driven)?;
    let mut traj = integrate(
        &model.system,
        model.input.as_ref(),
        &method,
        &model.x0,
        args.span.t0,
        args.span.t_end,
        args.h,
    )?;
    if let Some(u) = &model.input {
        attach_supplied(&model.system, u, &mut traj)?;
    }
    let meta = output::RunMeta {
        model: &model.label,
        scheme: &method.label(),
        t0: args.span.t0,
        t_end: args.span.t_end,
        h: args.h,
    };
    let content = match args.output.format {
        Format::Csv => output::run_csv(&traj),
        Format::Json => output::run_json(&traj, &meta),
    };
    emit(&args.output.out, &content)
}

fn cmd_converge(args: &ConvergeArgs, tol: Real) -> Result<(), CliError> {
    let model = build_model(&args.model, tol)?;
    let driven = model.input.is_some();
    let grid = parse_grid(&args.h_grid)?;

    let mut studies = Vec::new();
    for name in &args.scheme {
        let method = resolve_method(name, driven)?;
        studies.push(convergence_study(
            &model.system,
            model.input.as_ref(),
            &method,
            &model.label,
            &model.x0,
            args.span.t0,
            args.span.t_end,
            &grid,
        )?);
    }

    let content = match args.output.format {
        Format::Csv => output::converge_csv(&studies),
        Format::Json => output::converge_json(&studies),
    };
    emit(&args.output.out, &content)?;

    if args.plot {
        let series: Vec<plot::Series> = studies
            .iter()
            .map(|s| plot::Series {
                label: s.scheme.clone(),
                points: s.h.iter().copied().zip(s.errors.iter().copied()).collect(),
            })
            .collect();
        let svg = plot::loglog(
            &format!("Convergence, {}", model.label),
            "step size h",
            "error at final time",
            &series,
        );
        fs::write(plot_path(&args.output.out, "phsplit-converge.svg"), svg)?;
    }
    Ok(())
}

fn cmd_dissipation(args: &DissipationArgs, tol: Real) -> Result<(), CliError> {
    let model = build_model(&args.model, tol)?;
    let driven = model.input.is_some();
    let method = resolve_method(&args.scheme, driven)?;
    let mut traj = integrate(
        &model.system,
        model.input.as_ref(),
        &method,
        &model.x0,
        args.span.t0,
        args.span.t_end,
        args.h,
    )?;
    if let Some(u) = &model.input {
        attach_supplied(&model.system, u, &mut traj)?;
    }
    let threshold = tol * hamiltonian(&model.x0).max(1.0);
    let trace = trace_from_trajectory(&traj, threshold);

    let meta = output::RunMeta {
        model: &model.label,
        scheme: &method.label(),
        t0: args.span.t0,
        t_end: args.span.t_end,
        h: args.h,
    };
    let content = match args.output.format {
        Format::Csv => output::dissipation_csv(&traj, &trace),
        Format::Json => output::dissipation_json(&trace, &meta),
    };
    emit(&args.output.out, &content)?;

    if args.plot {
        let step_times = &trace.times[1..];
        let mut series = vec![plot::Series {
            label: "dH/h".into(),
            points: step_times.iter().copied().zip(trace.dh_rate.iter().copied()).collect(),
        }];
        if let Some(est) = &trace.estimator_rate {
            series.push(plot::Series {
                label: "d/h".into(),
                points: step_times.iter().copied().zip(est.iter().copied()).collect(),
            });
        }
        if let Some(sup) = &trace.supplied_rate {
            series.push(plot::Series {
                label: "supplied".into(),
                points: step_times.iter().copied().zip(sup.iter().copied()).collect(),
            });
        }
        let svg = plot::timeseries(
            &format!("Dissipation, {} ({}, h = {})", model.label, method.label(), args.h),
            "t",
            "energy rate",
            &series,
        );
        fs::write(plot_path(&args.output.out, "phsplit-dissipation.svg"), svg)?;
    }
    Ok(())
}

fn cmd_selftest(seed: u64) -> Result<(), CliError> {
    let reports = phsplit::selftest::run_all(seed);
    let mut failed = false;
    for r in &reports {
        println!(
            "{}: {} ({})",
            r.name,
            if r.passed { "pass" } else { "FAIL" },
            r.detail
        );
        failed |= !r.passed;
    }
    if failed {
        Err(CliError::Numeric("property suites failed".into()))
    } else {
        println!("all {} suites passed", reports.len());
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = base_tol().and_then(|tol| match &cli.command {
        Command::Schemes { action: SchemesAction::List } => {
            cmd_schemes_list();
            Ok(())
        }
        Command::Run(args) => cmd_run(args, tol),
        Command::Converge(args) => cmd_converge(args, tol),
        Command::Dissipation(args) => cmd_dissipation(args, tol),
        Command::Selftest { seed } => cmd_selftest(*seed),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(3)
        }
    }
}

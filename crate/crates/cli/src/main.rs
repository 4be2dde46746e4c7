//! `rbtr`: decompose, complete and evaluate colour images, frame stacks and
//! RBT1 tensors.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 numerical failure.

mod config;
mod io;
mod report;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rbtr_core::format;
use rbtr_core::imaging;
use rbtr_core::tensor::project_mask;
use rbtr_core::{rbtr_svd, CompletionConfig, RbError};
use serde_json::{Map, Value};

use config::{layered, parse_list, FileConfig, COMPLETE_KEYS, DECOMPOSE_KEYS};
use io::{Input, Staging};
use report::{metrics, render, to_value, Format};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError { code: 2, msg: msg.into() }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError { code: 3, msg: msg.into() }
    }

    pub fn context(self, what: &str) -> Self {
        CliError { code: self.code, msg: format!("{what}: {}", self.msg) }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl From<RbError> for CliError {
    fn from(e: RbError) -> Self {
        let code = match e {
            RbError::Dimension(_) | RbError::InvalidArgument(_) => 2,
            RbError::Io(_) | RbError::Image(_) | RbError::Json(_) | RbError::Format(_) => 3,
            RbError::SvdNonConvergence(_) | RbError::NonFinite { .. } => 4,
        };
        CliError { code, msg: e.to_string() }
    }
}

#[derive(Parser)]
#[command(name = "rbtr", version, about = "Reduced biquaternion tensor-ring decomposition and completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tensor-ring decomposition of an image, frame directory or RBT1 tensor.
    Decompose(DecomposeArgs),
    /// Masks the input at the given sampling rate and recovers it.
    Complete(CompleteArgs),
    /// Prints RSE / PSNR of a test input against a reference.
    Eval(EvalArgs),
}

#[derive(Args)]
struct Common {
    /// key = value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct DecomposeArgs {
    input: PathBuf,
    /// Relative error target.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CompleteArgs {
    input: PathBuf,
    /// Sampling rate in (0, 1].
    #[arg(long)]
    sr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    beta3: Option<f64>,
    /// Comma-separated mode weights, normalised to sum 1 (default uniform).
    #[arg(long)]
    alpha: Option<String>,
    /// Circular unfolding offset (default round(N/2)).
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Relative-change stopping threshold.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct EvalArgs {
    reference: PathBuf,
    test: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn finish(staging: Staging, report: &Map<String, Value>, fmt: Format) -> Result<(), CliError> {
    let text = render(report, fmt)?;
    staging.write(&format!("report.{}", fmt.extension()), text.as_bytes())?;
    staging.commit()?;
    print!("{text}");
    Ok(())
}

fn decompose(args: &DecomposeArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref(), DECOMPOSE_KEYS)?;
    let eps = layered(args.eps, &file, "eps", 0.05)?;
    let fmt = layered(args.common.format, &file, "format", Format::Json)?;
    if eps.is_nan() || eps <= 0.0 || eps >= 1.0 {
        return Err(CliError::usage(format!("eps must lie in (0, 1), got {eps}")));
    }
    let input = Input::load(&args.input)?;
    let working = input.working()?;

    let tr = rbtr_svd(&working, eps)?;
    let recon = input.restore(&tr.reconstruct())?;
    let mut m = metrics(&recon, &input.raw, input.is_colour())?;
    m.storage_cost = Some(tr.storage_cost());
    m.compression_ratio = Some(tr.compression_ratio(&input.original_dims()));

    let staging = Staging::new(&args.out)?;
    tr.save(&staging.path("cores"), Some(eps))?;
    staging.write_data("reconstruction", &input, &recon)?;
    let mut report = Map::new();
    report.insert("eps".into(), Value::from(eps));
    report.insert("ranks".into(), to_value(&tr.ranks())?);
    report.insert("metrics".into(), to_value(&m)?);
    finish(staging, &report, fmt)
}

fn complete_config(args: &CompleteArgs, file: &FileConfig) -> Result<CompletionConfig, CliError> {
    let def = CompletionConfig::default();
    let alphas = match &args.alpha {
        Some(s) => Some(parse_list(s)?),
        None => file.get_list("alpha")?,
    };
    Ok(CompletionConfig {
        alphas,
        lambda: layered(args.lambda, file, "lambda", def.lambda)?,
        beta1: layered(args.beta1, file, "beta1", def.beta1)?,
        beta2: layered(args.beta2, file, "beta2", def.beta2)?,
        beta3: layered(args.beta3, file, "beta3", def.beta3)?,
        d: args.d.or(file.get("d")?),
        max_iter: layered(args.max_iter, file, "max_iter", def.max_iter)?,
        rel_tol: layered(args.tol, file, "tol", def.rel_tol)?,
        seed: layered(args.seed, file, "seed", def.seed)?,
        track_objective: def.track_objective,
    })
}

fn complete(args: &CompleteArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref(), COMPLETE_KEYS)?;
    let cfg = complete_config(args, &file)?;
    let fmt = layered(args.common.format, &file, "format", Format::Json)?;
    let sr = match args.sr {
        Some(v) => v,
        None => file.get("sr")?.ok_or_else(|| CliError::usage("missing --sr"))?,
    };
    if sr.is_nan() || sr <= 0.0 || sr > 1.0 {
        return Err(CliError::usage(format!("sr must lie in (0, 1], got {sr}")));
    }
    let input = Input::load(&args.input)?;
    let working = input.working()?;
    cfg.resolve(working.order())?;

    let mask = imaging::gen_mask(working.dims(), sr, cfg.seed)?;
    let observed = project_mask(&working, &mask, true)?;
    let (x, solve_report) = rbtr_core::completion::solve_with(&observed, &mask, &cfg, |p| {
        if p.iteration % 10 == 0 {
            eprintln!(
                "iter {:>4}  rel_change {:.3e}  x-a {:.3e}  x-z {:.3e}  grad-e {:.3e}",
                p.iteration, p.rel_change, p.x_a, p.x_z, p.grad_e
            );
        }
    })?;

    let recovered = input.restore(&x)?;
    let observed_raw = input.restore(&observed)?;
    let m = metrics(&recovered, &input.raw, input.is_colour())?;
    let m_obs = metrics(&observed_raw, &input.raw, input.is_colour())?;

    let staging = Staging::new(&args.out)?;
    staging.write_data("recovered", &input, &recovered)?;
    staging.write_data("observed", &input, &observed_raw)?;
    format::save_mask(&staging.path("mask.rbm"), &mask, cfg.seed, sr)?;
    let mut report = Map::new();
    report.insert("sr".into(), Value::from(sr));
    report.insert("seed".into(), Value::from(cfg.seed));
    report.insert("config".into(), to_value(&cfg)?);
    report.insert("metrics".into(), to_value(&m)?);
    report.insert("observed_metrics".into(), to_value(&m_obs)?);
    report.insert("solve".into(), to_value(&solve_report)?);
    finish(staging, &report, fmt)
}

fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let reference = Input::load(&args.reference)?;
    let test = Input::load(&args.test)?;
    if reference.raw.dims() != test.raw.dims() {
        return Err(CliError::usage(format!(
            "dimension mismatch: {:?} vs {:?}",
            reference.raw.dims(),
            test.raw.dims()
        )));
    }
    let colour = reference.is_colour() && test.is_colour();
    let m = metrics(&test.raw, &reference.raw, colour)?;
    let Value::Object(report) = to_value(&m)? else { unreachable!("metric report is an object") };
    print!("{}", render(&report, args.format)?);
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Decompose(a) => decompose(a),
        Command::Complete(a) => complete(a),
        Command::Eval(a) => eval(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rbtr: {e}");
            ExitCode::from(e.code)
        }
    }
}

//! Subcommand definitions and their implementations.
//!
//! Each command writes its primary output to the supplied writer and returns
//! the process exit code: 0 on success, 2 when a recovery hits `n_max`
//! without converging. Errors propagate and map to exit code 1 in `main`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pursuitlab::ric::DEFAULT_ENUMERATION_BUDGET;
use pursuitlab::{
    bounds, delta_for_rho, exact_ric_with_budget, instance_for_matrix, make_instance,
    near_isometry_matrix, recover, sampled_ric_lower_bound, Algorithm, BoundReport, Family,
    IterationRecord, RecoveryResult, RicEstimate, SignalKind, StoppingRule, TraceLevel,
};
use serde::Serialize;

use crate::experiment::{self, bounds_row, to_csv, ExperimentConfig, OutputFormat, SCHEMA_VERSION};
use crate::formats;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "pursuitlab",
    version,
    about = "Sparse recovery with certified restricted isometry constants"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recover a sparse signal from a matrix and a measurement vector.
    Recover(RecoverArgs),
    /// Certify (exact) or bound (sampled) the restricted isometry constant.
    Ric(RicArgs),
    /// Evaluate convergence-rate and error coefficients.
    Bounds(BoundsArgs),
    /// Run a batch experiment described by a JSON config.
    Experiment(ExperimentArgs),
    /// Generate a seeded instance as matrix and vector files.
    Gen(GenArgs),
}

fn parse_with<T: std::str::FromStr<Err = pursuitlab::Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: pursuitlab::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    /// Matrix file (`# dense m N` header).
    #[arg(long)]
    pub matrix: PathBuf,
    /// Measurement vector file (`# vector m` header).
    #[arg(long)]
    pub measurements: PathBuf,
    /// Sparsity level.
    #[arg(short, long)]
    pub s: usize,
    #[arg(long, default_value = "sp", value_parser = parse_with::<Algorithm>)]
    pub algorithm: Algorithm,
    /// Optional true signal; adds signal error and tail energy to the trace.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value = "norms", value_parser = parse_with::<TraceLevel>)]
    pub trace: TraceLevel,
    #[arg(long, default_value_t = StoppingRule::default().n_max)]
    pub n_max: usize,
    /// Residual threshold used when `--e-prime-norm` is not given.
    #[arg(long, default_value_t = StoppingRule::default().epsilon_abs)]
    pub epsilon_abs: f64,
    /// Residual multiplier for the `ε‖e′‖₂` criterion.
    #[arg(long, default_value_t = StoppingRule::default().epsilon)]
    pub epsilon: f64,
    /// Known `‖e′‖₂`; switches to the relative stopping criterion.
    #[arg(long, default_value_t = 0.0)]
    pub e_prime_norm: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RicModeArg {
    Exact,
    Sampled,
}

#[derive(Debug, Args)]
pub struct RicArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Order of the constant.
    #[arg(short, long)]
    pub s: usize,
    #[arg(long, value_enum, default_value_t = RicModeArg::Exact)]
    pub mode: RicModeArg,
    /// Number of sampled supports in sampled mode.
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest number of supports exact mode may enumerate.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value = "sp", value_parser = parse_with::<Family>)]
    pub family: Family,
    /// RIC value in `[0, 1)`.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Show every SP family side by side at `--delta`.
    #[arg(long)]
    pub compare: bool,
    /// Solve for the RIC at which the rate equals a target, e.g. `rho=0.5`.
    #[arg(long, value_name = "rho=<r>")]
    pub solve: Option<String>,
    #[arg(long, value_enum, default_value_t = TableFormat::Text)]
    pub format: TableFormat,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON experiment config.
    pub config: PathBuf,
    /// Overrides `output_path` from the config.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatrixKindArg {
    Gaussian,
    NearIsometry,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(short = 'm', long = "m")]
    pub m: usize,
    #[arg(short = 'N', long = "n")]
    pub n: usize,
    #[arg(short, long)]
    pub s: usize,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "exact-sparse", value_parser = parse_with::<SignalKind>)]
    pub kind: SignalKind,
    #[arg(long, value_enum, default_value_t = MatrixKindArg::Gaussian)]
    pub family: MatrixKindArg,
    /// Perturbation size for near-isometry matrices.
    #[arg(long, default_value_t = 0.1)]
    pub perturbation: f64,
    /// Directory receiving `matrix.csv`, `measurements.csv`, `signal.csv` and `noise.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Recover(a) => cmd_recover(&a, out),
        Command::Ric(a) => cmd_ric(&a, out),
        Command::Bounds(a) => cmd_bounds(&a, out),
        Command::Experiment(a) => cmd_experiment(&a, out),
        Command::Gen(a) => cmd_gen(&a, out),
    }
}

/// JSON shape of a single recovery.
#[derive(Debug, Serialize)]
pub struct RecoverOutput<'a> {
    pub schema_version: u32,
    pub algorithm: Algorithm,
    pub converged: bool,
    pub estimate: &'a [f64],
    pub support: &'a [usize],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<&'a [IterationRecord]>,
    pub residual_history: Vec<f64>,
}

impl<'a> RecoverOutput<'a> {
    pub fn new(result: &'a RecoveryResult, trace: TraceLevel) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            algorithm: result.algorithm,
            converged: result.converged,
            estimate: result.estimate.as_slice(),
            support: result.support.indices(),
            iterations: (trace != TraceLevel::None).then_some(&result.iterations[..]),
            residual_history: result.residual_history(),
        }
    }
}

#[derive(Serialize)]
struct IterationCsvRow {
    n: usize,
    residual_norm: f64,
    signal_error: Option<f64>,
    tail_energy: Option<f64>,
    support: String,
}

/// Renders a recovery result exactly as `recover` prints it.
pub fn render_recovery(
    result: &RecoveryResult,
    trace: TraceLevel,
    format: OutputFormat,
) -> Result<String> {
    match format {
        OutputFormat::Json => {
            Ok(serde_json::to_string_pretty(&RecoverOutput::new(result, trace))? + "\n")
        }
        OutputFormat::Csv => {
            let rows: Vec<_> = result
                .iterations
                .iter()
                .map(|r| IterationCsvRow {
                    n: r.n,
                    residual_norm: r.residual_norm,
                    signal_error: r.signal_error,
                    tail_energy: r.tail_energy,
                    support: r
                        .pruned_support
                        .indices()
                        .iter()
                        .map(usize::to_string)
                        .collect::<Vec<_>>()
                        .join(" "),
                })
                .collect();
            to_csv(&rows)
        }
    }
}

fn cmd_recover(a: &RecoverArgs, out: &mut dyn Write) -> Result<i32> {
    let phi = formats::read_matrix(&a.matrix)?;
    let y = formats::read_vector(&a.measurements)?;
    let truth = a.truth.as_deref().map(formats::read_vector).transpose()?;
    let stop = StoppingRule {
        epsilon: a.epsilon,
        n_max: a.n_max,
        e_prime_norm_hint: a.e_prime_norm,
        epsilon_abs: a.epsilon_abs,
    };
    let result = recover(
        a.algorithm,
        &phi,
        &y,
        a.s,
        &stop,
        a.trace,
        truth.as_ref().map(|t| t.as_slice()),
    )?;
    out.write_all(render_recovery(&result, a.trace, a.format)?.as_bytes())?;
    Ok(if result.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

#[derive(Serialize)]
struct RicOutput<'a> {
    schema_version: u32,
    #[serde(flatten)]
    estimate: &'a RicEstimate,
    rip_holds: bool,
    exceeds_one: bool,
}

pub fn render_ric(estimate: &RicEstimate) -> Result<String> {
    let doc = RicOutput {
        schema_version: SCHEMA_VERSION,
        estimate,
        rip_holds: estimate.rip_holds(),
        exceeds_one: estimate.exceeds_one(),
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

fn cmd_ric(a: &RicArgs, out: &mut dyn Write) -> Result<i32> {
    let phi = formats::read_matrix(&a.matrix)?;
    let pool = experiment::thread_pool()?;
    let estimate = pool.install(|| match a.mode {
        RicModeArg::Exact => exact_ric_with_budget(&phi, a.s, a.budget),
        RicModeArg::Sampled => sampled_ric_lower_bound(&phi, a.s, a.trials, a.seed),
    })?;
    out.write_all(render_ric(&estimate)?.as_bytes())?;
    Ok(EXIT_OK)
}

fn parse_solve(arg: &str) -> Result<f64> {
    let Some(v) = arg.trim().strip_prefix("rho=") else {
        bail!("--solve expects `rho=<r>`, got `{arg}`");
    };
    v.parse()
        .with_context(|| format!("--solve: `{v}` is not a number"))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |t| format!("{t:.6}"))
}

fn text_table(reports: &[BoundReport]) -> String {
    let mut s = format!(
        "{:<8} {:>8} {:>10} {:>12} {:>12} {:>6} {:>10} {:>10}\n",
        "family", "delta", "rho", "(1-rho)tau", "tau", "valid", "rho<1 at", "rho=1/2 at"
    );
    for r in reports {
        s.push_str(&format!(
            "{:<8} {:>8.4} {:>10.6} {:>12.6} {:>12} {:>6} {:>10.6} {:>10.6}\n",
            r.family.name(),
            r.delta,
            r.rho,
            r.noise_coefficient,
            fmt_opt(r.tau),
            r.valid,
            r.threshold_rho1,
            r.threshold_rho_half
        ));
    }
    s
}

#[derive(Serialize)]
struct SolveOutput {
    schema_version: u32,
    family: Family,
    rho: f64,
    delta: f64,
}

fn cmd_bounds(a: &BoundsArgs, out: &mut dyn Write) -> Result<i32> {
    if let Some(arg) = &a.solve {
        let rho = parse_solve(arg)?;
        let families: Vec<Family> = if a.compare {
            Family::SP_FAMILIES.to_vec()
        } else {
            vec![a.family]
        };
        let rows = families
            .into_iter()
            .map(|family| {
                Ok(SolveOutput {
                    schema_version: SCHEMA_VERSION,
                    family,
                    rho,
                    delta: delta_for_rho(family, rho)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let text = match a.format {
            TableFormat::Text => rows
                .iter()
                .map(|r| {
                    format!(
                        "{}: rho = {} at delta = {:.6}\n",
                        r.family.name(),
                        r.rho,
                        r.delta
                    )
                })
                .collect(),
            TableFormat::Csv => to_csv(&rows)?,
            TableFormat::Json => serde_json::to_string_pretty(&rows)? + "\n",
        };
        out.write_all(text.as_bytes())?;
        return Ok(EXIT_OK);
    }
    let Some(delta) = a.delta else {
        bail!("bounds needs --delta (or --solve rho=<r>)");
    };
    let families: Vec<Family> = if a.compare {
        Family::SP_FAMILIES.to_vec()
    } else {
        vec![a.family]
    };
    let reports = families
        .into_iter()
        .map(|f| bounds(f, delta))
        .collect::<pursuitlab::Result<Vec<_>>>()?;
    let text = match a.format {
        TableFormat::Text => text_table(&reports),
        TableFormat::Csv => to_csv(&reports.iter().map(bounds_row).collect::<Vec<_>>())?,
        TableFormat::Json => {
            serde_json::to_string_pretty(&reports.iter().map(bounds_row).collect::<Vec<_>>())?
                + "\n"
        }
    };
    out.write_all(text.as_bytes())?;
    Ok(EXIT_OK)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_experiment(a: &ExperimentArgs, out: &mut dyn Write) -> Result<i32> {
    let config = ExperimentConfig::load(&a.config)?;
    let results = experiment::run(&config)?;
    let text = results.render(config.experiment, a.format)?;
    match a.output.as_ref().or(config.output_path.as_ref()) {
        Some(path) => write_file(path, &text)?,
        None => out.write_all(text.as_bytes())?,
    }
    if let Some(path) = &config.detail_path {
        write_file(path, &results.render_detail(a.format)?)?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct GenOutput<'a> {
    schema_version: u32,
    m: usize,
    #[serde(rename = "N")]
    n: usize,
    s: usize,
    support: &'a [usize],
    e_prime_norm: f64,
}

fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> Result<i32> {
    let inst = match a.family {
        MatrixKindArg::Gaussian => make_instance(a.kind, a.m, a.n, a.s, a.sigma, a.seed)?,
        MatrixKindArg::NearIsometry => {
            let phi = near_isometry_matrix(a.m, a.n, a.perturbation, a.seed)?;
            instance_for_matrix(
                &phi,
                a.kind,
                a.s,
                a.sigma,
                pursuitlab::seed::splitmix64(a.seed),
            )?
        }
    };
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    formats::write_matrix(&a.out.join("matrix.csv"), &inst.phi)?;
    formats::write_vector(&a.out.join("measurements.csv"), &inst.y)?;
    formats::write_vector(&a.out.join("signal.csv"), &inst.x)?;
    formats::write_vector(&a.out.join("noise.csv"), &inst.e)?;
    let summary = GenOutput {
        schema_version: SCHEMA_VERSION,
        m: a.m,
        n: a.n,
        s: a.s,
        support: inst.s_support.indices(),
        e_prime_norm: inst.e_prime_norm,
    };
    out.write_all((serde_json::to_string_pretty(&summary)? + "\n").as_bytes())?;
    Ok(EXIT_OK)
}

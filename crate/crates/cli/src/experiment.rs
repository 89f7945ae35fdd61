//! Batch experiments driven by a JSON config.
//!
//! Every trial draws its instance from `hash64(master_seed, cell, trial)`, so
//! results do not depend on scheduling. Trials run on a rayon pool and are
//! collected in `(cell, trial)` order before aggregation.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use pursuitlab::ric::{binomial, DEFAULT_ENUMERATION_BUDGET};
use pursuitlab::seed::{hash64, splitmix64};
use pursuitlab::{
    audit_run, bounds, count_violations, exact_ric_with_budget, instance_for_matrix, make_instance,
    near_isometry_matrix, recover, Algorithm, Family, SignalKind, SparseInstance, StoppingRule,
    TraceLevel,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "PURSUITLAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PhaseTransition,
    Convergence,
    Audit,
    BoundsTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MatrixFamily {
    /// i.i.d. `N(0, 1/m)`; needs `m ≤ N`.
    #[default]
    Gaussian,
    /// Orthonormal columns plus a Gaussian perturbation; needs `N ≤ m`.
    NearIsometry { perturbation: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub m: Vec<usize>,
    #[serde(rename = "N", alias = "n")]
    pub n: Vec<usize>,
    pub s: Vec<usize>,
    pub noise_sigma: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub index: usize,
    pub m: usize,
    pub n: usize,
    pub s: usize,
    pub noise_sigma: f64,
}

impl Grid {
    /// Cartesian product with `m` outermost and `noise_sigma` innermost.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &m in &self.m {
            for &n in &self.n {
                for &s in &self.s {
                    for &noise_sigma in &self.noise_sigma {
                        out.push(Cell {
                            index: out.len(),
                            m,
                            n,
                            s,
                            noise_sigma,
                        });
                    }
                }
            }
        }
        out
    }
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Sp, Algorithm::Cosamp]
}
fn default_trials() -> usize {
    1
}
fn default_threshold() -> f64 {
    1e-4
}
fn default_budget() -> u64 {
    DEFAULT_ENUMERATION_BUDGET
}
fn default_n_max() -> usize {
    StoppingRule::default().n_max
}
fn default_signal() -> SignalKind {
    SignalKind::ExactSparse
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default = "default_trials")]
    pub trials_per_cell: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Relative `ℓ₂` error at or below which a trial counts as a success.
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub matrix: MatrixFamily,
    #[serde(default = "default_signal")]
    pub signal: SignalKind,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Enumeration budget for exact RIC certification in audits.
    #[serde(default = "default_budget")]
    pub ric_budget: u64,
    /// Per-iteration inequality table for audit experiments.
    #[serde(default)]
    pub detail_path: Option<PathBuf>,
    /// Bounds-table only.
    #[serde(default)]
    pub deltas: Vec<f64>,
    /// Bounds-table only; all families when empty.
    #[serde(default)]
    pub families: Vec<Family>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).context("parsing experiment config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.trials_per_cell >= 1,
            "trials_per_cell must be at least 1"
        );
        ensure!(self.n_max >= 1, "n_max must be at least 1");
        ensure!(
            self.success_threshold >= 0.0 && self.success_threshold.is_finite(),
            "success_threshold must be finite and non-negative"
        );
        if let MatrixFamily::NearIsometry { perturbation } = self.matrix {
            ensure!(
                perturbation >= 0.0 && perturbation.is_finite(),
                "matrix perturbation must be finite and non-negative"
            );
        }
        if self.experiment == ExperimentKind::BoundsTable {
            ensure!(
                !self.deltas.is_empty(),
                "bounds-table needs a non-empty `deltas` list"
            );
            for &d in &self.deltas {
                ensure!((0.0..1.0).contains(&d), "delta {d} is outside [0, 1)");
            }
            return Ok(());
        }
        ensure!(
            !self.algorithms.is_empty(),
            "`algorithms` must not be empty"
        );
        let Some(grid) = &self.grid else {
            bail!("{:?} experiments need a `grid`", self.experiment);
        };
        ensure!(
            !(grid.m.is_empty()
                || grid.n.is_empty()
                || grid.s.is_empty()
                || grid.noise_sigma.is_empty()),
            "every grid list must be non-empty"
        );
        for &sigma in &grid.noise_sigma {
            ensure!(
                sigma >= 0.0 && sigma.is_finite(),
                "noise_sigma {sigma} must be finite and non-negative"
            );
        }
        for cell in grid.cells() {
            ensure!(
                cell.s >= 1 && cell.m >= 1 && cell.n >= 1,
                "grid dimensions must be positive"
            );
            ensure!(
                cell.s <= cell.n && cell.s <= cell.m,
                "grid cell {cell:?} needs s <= min(m, N)"
            );
            match self.matrix {
                MatrixFamily::Gaussian => {
                    ensure!(
                        cell.m <= cell.n,
                        "grid cell {cell:?}: Gaussian matrices need m <= N"
                    )
                }
                MatrixFamily::NearIsometry { .. } => {
                    ensure!(
                        cell.n <= cell.m,
                        "grid cell {cell:?}: near-isometry matrices need N <= m"
                    )
                }
            }
        }
        Ok(())
    }

    fn stopping_rule(&self) -> StoppingRule {
        StoppingRule::default().with_n_max(self.n_max)
    }
}

/// Sub-seed of one trial.
pub fn trial_seed(master_seed: u64, cell: usize, trial: usize) -> u64 {
    hash64(master_seed, cell as u64, trial as u64)
}

/// The instance drawn for `(cell, trial)`.
pub fn trial_instance(
    config: &ExperimentConfig,
    cell: &Cell,
    trial: usize,
) -> Result<SparseInstance> {
    let seed = trial_seed(config.master_seed, cell.index, trial);
    let inst = match config.matrix {
        MatrixFamily::Gaussian => make_instance(
            config.signal,
            cell.m,
            cell.n,
            cell.s,
            cell.noise_sigma,
            seed,
        )?,
        MatrixFamily::NearIsometry { perturbation } => {
            let phi = near_isometry_matrix(cell.m, cell.n, perturbation, seed)?;
            instance_for_matrix(
                &phi,
                config.signal,
                cell.s,
                cell.noise_sigma,
                splitmix64(seed),
            )?
        }
    };
    Ok(inst)
}

/// Whether `algorithm` can run on the cell's dimensions at all.
fn supported(algorithm: Algorithm, cell: &Cell) -> bool {
    let ident = algorithm.ric_order_multiple() - 2;
    ident * cell.s <= cell.n && (ident + 1) * cell.s <= cell.m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Ok,
    /// Exact RIC certification would exceed the enumeration budget.
    Skipped,
    /// The algorithm cannot run at these dimensions (e.g. `3s > m` for CoSaMP).
    Unsupported,
}

/// One aggregated row per `(cell, algorithm)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub schema_version: u32,
    pub cell: usize,
    pub algorithm: Algorithm,
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub s: usize,
    pub noise_sigma: f64,
    pub trials: usize,
    pub status: CellStatus,
    pub success_rate: Option<f64>,
    pub median_iterations: Option<f64>,
    pub mean_final_error: Option<f64>,
    pub converged_rate: Option<f64>,
    /// Trials aborted by a singular least-squares system.
    pub singular_trials: Option<usize>,
    pub ric_order: Option<usize>,
    pub max_ric: Option<f64>,
    /// Trials whose certified RIC is below the algorithm's threshold.
    pub certified_trials: Option<usize>,
    /// Trials with RIC below 1, where every audited inequality applies.
    pub audited_trials: Option<usize>,
    pub audit_violations: Option<usize>,
}

/// One row per iteration of a convergence experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub schema_version: u32,
    pub cell: usize,
    pub algorithm: Algorithm,
    pub m: usize,
    #[serde(rename = "N")]
    pub n_cols: usize,
    pub s: usize,
    pub noise_sigma: f64,
    pub trial: usize,
    pub n: usize,
    pub residual_norm: f64,
    pub signal_error: f64,
    pub tail_energy: f64,
    pub e_prime_norm: f64,
}

/// One row per audited inequality per iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub schema_version: u32,
    pub cell: usize,
    pub algorithm: Algorithm,
    pub trial: usize,
    pub ric: f64,
    pub n: usize,
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRow {
    pub schema_version: u32,
    pub family: Family,
    pub delta: f64,
    pub rho: f64,
    pub noise_coefficient: f64,
    pub tau: Option<f64>,
    pub valid: bool,
    pub threshold_rho1: f64,
    pub threshold_rho_half: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentOutput {
    Cells(Vec<ResultRow>),
    Traces(Vec<TraceRow>),
    Bounds(Vec<BoundsRow>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    pub output: ExperimentOutput,
    /// Audit experiments only.
    pub audit_detail: Vec<AuditRow>,
}

#[derive(Debug, Clone, Default)]
struct Trial {
    singular: bool,
    success: bool,
    converged: bool,
    iterations: usize,
    relative_error: f64,
    ric: Option<f64>,
    certified: bool,
    audited: bool,
    violations: usize,
    traces: Vec<TraceRow>,
    audit: Vec<AuditRow>,
}

/// Builds a pool honouring [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("{THREADS_ENV}=`{v}` is not a positive integer"))?;
        ensure!(n >= 1, "{THREADS_ENV} must be at least 1");
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentResults> {
    config.validate()?;
    let pool = thread_pool()?;
    pool.install(|| run_in_pool(config))
}

fn run_in_pool(config: &ExperimentConfig) -> Result<ExperimentResults> {
    if config.experiment == ExperimentKind::BoundsTable {
        return Ok(ExperimentResults {
            output: ExperimentOutput::Bounds(bounds_table(config)?),
            audit_detail: Vec::new(),
        });
    }
    let cells = config.grid.as_ref().expect("validated").cells();
    let mut jobs = Vec::new();
    for cell in &cells {
        for &algorithm in &config.algorithms {
            if !supported(algorithm, cell) {
                continue;
            }
            if config.experiment == ExperimentKind::Audit && !within_budget(config, algorithm, cell)
            {
                continue;
            }
            for trial in 0..config.trials_per_cell {
                jobs.push((*cell, algorithm, trial));
            }
        }
    }
    let outcomes: Vec<Trial> = jobs
        .par_iter()
        .map(|(cell, algorithm, trial)| run_trial(config, cell, *algorithm, *trial))
        .collect::<Result<_>>()?;

    let mut detail = Vec::new();
    let output = match config.experiment {
        ExperimentKind::Convergence => {
            ExperimentOutput::Traces(outcomes.into_iter().flat_map(|t| t.traces).collect())
        }
        _ => {
            let mut rows = Vec::new();
            let mut next = outcomes.into_iter();
            for cell in &cells {
                for &algorithm in &config.algorithms {
                    let status = if !supported(algorithm, cell) {
                        CellStatus::Unsupported
                    } else if config.experiment == ExperimentKind::Audit
                        && !within_budget(config, algorithm, cell)
                    {
                        CellStatus::Skipped
                    } else {
                        CellStatus::Ok
                    };
                    let trials: Vec<Trial> = if status == CellStatus::Ok {
                        next.by_ref().take(config.trials_per_cell).collect()
                    } else {
                        Vec::new()
                    };
                    for t in &trials {
                        detail.extend(t.audit.iter().cloned());
                    }
                    rows.push(aggregate(config, cell, algorithm, status, &trials));
                }
            }
            ExperimentOutput::Cells(rows)
        }
    };
    Ok(ExperimentResults {
        output,
        audit_detail: detail,
    })
}

fn ric_order(algorithm: Algorithm, cell: &Cell) -> usize {
    algorithm.ric_order_multiple() * cell.s
}

fn within_budget(config: &ExperimentConfig, algorithm: Algorithm, cell: &Cell) -> bool {
    let order = ric_order(algorithm, cell);
    order <= cell.n && binomial(cell.n, order).is_some_and(|c| c <= config.ric_budget as u128)
}

fn run_trial(
    config: &ExperimentConfig,
    cell: &Cell,
    algorithm: Algorithm,
    trial: usize,
) -> Result<Trial> {
    let inst = trial_instance(config, cell, trial)?;
    let needs_truth = config.experiment != ExperimentKind::PhaseTransition;
    let truth = needs_truth.then_some(inst.x.as_slice());
    let mut out = Trial::default();
    let result = match recover(
        algorithm,
        &inst.phi,
        &inst.y,
        cell.s,
        &config.stopping_rule(),
        TraceLevel::Norms,
        truth,
    ) {
        Ok(r) => r,
        Err(pursuitlab::Error::Singular { .. }) => {
            out.singular = true;
            return Ok(out);
        }
        Err(e) => return Err(e.into()),
    };
    out.iterations = result.iterations.len();
    out.converged = result.converged;
    let x_norm = inst.x.norm2();
    let err = result.estimate.sub(&inst.x).norm2();
    out.relative_error = if x_norm > 0.0 { err / x_norm } else { err };
    out.success = out.relative_error <= config.success_threshold;

    match config.experiment {
        ExperimentKind::Convergence => {
            out.traces = result
                .iterations
                .iter()
                .map(|r| TraceRow {
                    schema_version: SCHEMA_VERSION,
                    cell: cell.index,
                    algorithm,
                    m: cell.m,
                    n_cols: cell.n,
                    s: cell.s,
                    noise_sigma: cell.noise_sigma,
                    trial,
                    n: r.n,
                    residual_norm: r.residual_norm,
                    signal_error: r.signal_error.expect("truth supplied"),
                    tail_energy: r.tail_energy.expect("truth supplied"),
                    e_prime_norm: inst.e_prime_norm,
                })
                .collect();
        }
        ExperimentKind::Audit => {
            let delta =
                exact_ric_with_budget(&inst.phi, ric_order(algorithm, cell), config.ric_budget)?;
            out.ric = Some(delta.value);
            out.certified = delta.value < algorithm.ric_threshold();
            if delta.rip_holds() {
                out.audited = true;
                let audits = audit_run(&result, &inst, &delta)?;
                out.violations = count_violations(&audits);
                if config.detail_path.is_some() {
                    for a in audits {
                        for c in a.checks {
                            out.audit.push(AuditRow {
                                schema_version: SCHEMA_VERSION,
                                cell: cell.index,
                                algorithm,
                                trial,
                                ric: delta.value,
                                n: a.n,
                                inequality: c.name,
                                lhs: c.lhs,
                                rhs: c.rhs,
                                holds: c.holds,
                            });
                        }
                    }
                }
            }
        }
        ExperimentKind::PhaseTransition | ExperimentKind::BoundsTable => {}
    }
    Ok(out)
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    })
}

fn aggregate(
    config: &ExperimentConfig,
    cell: &Cell,
    algorithm: Algorithm,
    status: CellStatus,
    trials: &[Trial],
) -> ResultRow {
    let ok = status == CellStatus::Ok;
    let total = trials.len() as f64;
    let completed: Vec<&Trial> = trials.iter().filter(|t| !t.singular).collect();
    let rate = |pred: fn(&Trial) -> bool| {
        ok.then(|| trials.iter().filter(|t| pred(t)).count() as f64 / total)
    };
    let audit = config.experiment == ExperimentKind::Audit && ok;
    ResultRow {
        schema_version: SCHEMA_VERSION,
        cell: cell.index,
        algorithm,
        m: cell.m,
        n: cell.n,
        s: cell.s,
        noise_sigma: cell.noise_sigma,
        trials: trials.len(),
        status,
        success_rate: rate(|t| t.success),
        median_iterations: median(completed.iter().map(|t| t.iterations as f64).collect()),
        mean_final_error: (!completed.is_empty()).then(|| {
            completed.iter().map(|t| t.relative_error).sum::<f64>() / completed.len() as f64
        }),
        converged_rate: rate(|t| t.converged),
        singular_trials: ok.then(|| trials.iter().filter(|t| t.singular).count()),
        ric_order: (config.experiment == ExperimentKind::Audit).then(|| ric_order(algorithm, cell)),
        max_ric: audit
            .then(|| {
                trials
                    .iter()
                    .filter_map(|t| t.ric)
                    .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
            })
            .flatten(),
        certified_trials: audit.then(|| trials.iter().filter(|t| t.certified).count()),
        audited_trials: audit.then(|| trials.iter().filter(|t| t.audited).count()),
        audit_violations: audit.then(|| trials.iter().map(|t| t.violations).sum()),
    }
}

fn bounds_table(config: &ExperimentConfig) -> Result<Vec<BoundsRow>> {
    let families: &[Family] = if config.families.is_empty() {
        &Family::ALL
    } else {
        &config.families
    };
    let mut rows = Vec::new();
    for &family in families {
        for &delta in &config.deltas {
            rows.push(bounds_row(&bounds(family, delta)?));
        }
    }
    Ok(rows)
}

pub fn bounds_row(r: &pursuitlab::BoundReport) -> BoundsRow {
    BoundsRow {
        schema_version: SCHEMA_VERSION,
        family: r.family,
        delta: r.delta,
        rho: r.rho,
        noise_coefficient: r.noise_coefficient,
        tau: r.tau,
        valid: r.valid,
        threshold_rho1: r.threshold_rho1,
        threshold_rho_half: r.threshold_rho_half,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[derive(Serialize)]
struct JsonDocument<'a, T> {
    schema_version: u32,
    experiment: ExperimentKind,
    rows: &'a [T],
}

fn render_rows<T: Serialize>(
    kind: ExperimentKind,
    rows: &[T],
    format: OutputFormat,
) -> Result<String> {
    match format {
        OutputFormat::Csv => to_csv(rows),
        OutputFormat::Json => {
            let doc = JsonDocument {
                schema_version: SCHEMA_VERSION,
                experiment: kind,
                rows,
            };
            Ok(serde_json::to_string_pretty(&doc)? + "\n")
        }
    }
}

impl ExperimentResults {
    pub fn render(&self, kind: ExperimentKind, format: OutputFormat) -> Result<String> {
        match &self.output {
            ExperimentOutput::Cells(rows) => render_rows(kind, rows, format),
            ExperimentOutput::Traces(rows) => render_rows(kind, rows, format),
            ExperimentOutput::Bounds(rows) => render_rows(kind, rows, format),
        }
    }

    pub fn render_detail(&self, format: OutputFormat) -> Result<String> {
        render_rows(ExperimentKind::Audit, &self.audit_detail, format)
    }
}

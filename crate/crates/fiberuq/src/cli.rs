//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::channel::{
    field_statistics, verify_global_stat_bounds, verify_partial_eval_bound, FieldGrid, GlobalBoundOptions,
    PartialBoundOptions, FIELD_SCHEMA,
};
use crate::config::{ConfigError, ProblemConfig};
use crate::experiments::{
    log_grid, mc_compare, reference_statistics, surrogate_statistics, tolerance_sweep, ExperimentError,
    McCompareSettings, StatsSettings,
};
use crate::fiber::FomModel;
use crate::poly::{fit_to_tolerance, CostReport, FitError, FitMode, FitOptions, Surrogate};
use crate::problem::FiberProblem;
use crate::stats::{atomic_write, BoundCheck, ReferenceCache, StatsError};

pub const MANIFEST_SCHEMA: &str = "fiberuq.manifest/1";
pub const ERROR_SCHEMA: &str = "fiberuq.error/1";
pub const SWEEP_SCHEMA: &str = "fiberuq.sweep/1";

#[derive(Debug, Parser)]
#[command(name = "fiberuq", version, about = "Surrogate-based uncertainty quantification of fiber orientation")]
pub struct Cli {
    /// TOML file with problem settings and optional [fit] and [stats] tables.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads (all cores by default).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Recompute cached results.
    #[arg(long, global = true)]
    pub force: bool,
    #[arg(long, global = true, default_value = "fiberuq-out")]
    pub out_dir: PathBuf,
    /// Override the orientation model of the configuration.
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelArg>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Jeffery,
    Fte,
    Ard,
    Iard,
}

impl From<ModelArg> for FomModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Jeffery => FomModel::Jeffery,
            ModelArg::Fte => FomModel::Fte,
            ModelArg::Ard => FomModel::Ard,
            ModelArg::Iard => FomModel::Iard,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    APriori,
    Adaptive,
}

impl From<ModeArg> for FitMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::APriori => FitMode::APriori,
            ModeArg::Adaptive => FitMode::Adaptive,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a surrogate to a tolerance.
    Fit(FitArgs),
    /// Statistics of a fitted surrogate, checked against the exact response.
    Stats(StatsArgs),
    /// Fit over a grid of tolerances and check every error bound.
    VerifyBounds(VerifyBoundsArgs),
    /// Mean, standard deviation and band-probability fields over the channel.
    ChannelField(ChannelFieldArgs),
    /// Monte Carlo error against cost, next to the surrogate pipeline.
    McCompare(McCompareArgs),
    /// Partial-evaluation bound ratios over the channel.
    VerifyPartial(VerifyPartialArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::APriori)]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Surrogate file (defaults to the output of `fit`).
    #[arg(long)]
    pub surrogate: Option<PathBuf>,
    #[arg(long = "threshold", num_args = 1..)]
    pub thresholds: Vec<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Skip the exact reference and the bound checks.
    #[arg(long)]
    pub no_reference: bool,
}

#[derive(Debug, Args)]
pub struct VerifyBoundsArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub eps_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eps_max: f64,
    #[arg(long, default_value_t = 15)]
    pub count: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::APriori)]
    pub mode: ModeArg,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ChannelFieldArgs {
    /// Surrogate over (T, L_f, x, y); fitted adaptively when absent.
    #[arg(long)]
    pub surrogate: Option<PathBuf>,
    #[arg(long, default_value_t = 5e-3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100)]
    pub nx: usize,
    #[arg(long, default_value_t = 100)]
    pub ny: usize,
    #[arg(long, default_value_t = 0.85)]
    pub band_low: f64,
    #[arg(long, default_value_t = 0.9)]
    pub band_high: f64,
    #[arg(long, default_value_t = 10_000)]
    pub band_samples: usize,
}

#[derive(Debug, Args)]
pub struct McCompareArgs {
    #[arg(long, default_value_t = 1e-2)]
    pub target: f64,
    /// Reference sample size.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyPartialArgs {
    #[arg(long)]
    pub surrogate: Option<PathBuf>,
    #[arg(long, default_value_t = 5e-3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100)]
    pub nx: usize,
    #[arg(long, default_value_t = 40)]
    pub ny: usize,
    #[arg(long, default_value_t = 2_000_000)]
    pub coefficient_samples: usize,
    /// Stop enlarging the error expansion once this fraction of the error is captured.
    #[arg(long, default_value_t = 0.95)]
    pub capture: f64,
    /// Largest error expansion used for C2.
    #[arg(long, default_value_t = 50_000)]
    pub max_terms: usize,
    /// Also check the field-statistic bounds on a coarse grid.
    #[arg(long)]
    pub global: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Invalid(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        ExperimentError::from(e).into()
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        ExperimentError::from(e).into()
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        ExperimentError::from(e).into()
    }
}

impl From<crate::channel::ChannelError> for CliError {
    fn from(e: crate::channel::ChannelError) -> Self {
        ExperimentError::from(e).into()
    }
}

/// Record of one command run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub command: String,
    pub config_hash: String,
    /// Hash of every input that determines the outputs.
    pub run_key: String,
    pub seed: u64,
    pub version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub passed: Option<bool>,
}

/// Configuration file contents: problem settings plus fit and statistics tables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub fit: FitOptions,
    pub stats: StatsSettings,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let mut table: toml::Table = toml::from_str(text)?;
        let fit = match table.remove("fit") {
            Some(v) => v.try_into()?,
            None => FitOptions::default(),
        };
        let stats = match table.remove("stats") {
            Some(v) => v.try_into()?,
            None => StatsSettings::default(),
        };
        let problem: ProblemConfig = table.try_into()?;
        problem.validate()?;
        Ok(Self { problem, fit, stats })
    }
}

struct Context {
    run: RunConfig,
    seed: u64,
    force: bool,
    out_dir: PathBuf,
    cache: ReferenceCache,
    start: Instant,
}

impl Context {
    fn problem(&self) -> Result<FiberProblem, CliError> {
        Ok(FiberProblem::new(self.run.problem)?)
    }

    /// Problem over the whole channel, keeping every other setting.
    fn channel_problem(&self, explicit_config: bool) -> Result<FiberProblem, CliError> {
        let mut c = self.run.problem;
        if !explicit_config {
            c = ProblemConfig::full_channel();
            c.fom.model = self.run.problem.fom.model;
        }
        c.location.full_channel = true;
        Ok(FiberProblem::new(c)?)
    }

    fn dir(&self, command: &str) -> Result<PathBuf, CliError> {
        let d = self.out_dir.join(command);
        fs::create_dir_all(&d).map_err(|source| CliError::Write { path: d.clone(), source })?;
        Ok(d)
    }

    fn run_key(&self, problem: &FiberProblem, command: &str, extra: &impl Serialize) -> String {
        let extra = serde_json::to_string(extra).expect("arguments serialize");
        let fit = serde_json::to_string(&self.run.fit).expect("options serialize");
        ReferenceCache::key(&format!(
            "{command}|{}|{fit}|{extra}|{}|{}",
            problem.config().canonical_json(),
            self.seed,
            env!("CARGO_PKG_VERSION")
        ))
    }

    fn manifest(
        &self,
        problem: &FiberProblem,
        command: &str,
        run_key: String,
        outputs: &[PathBuf],
        passed: Option<bool>,
    ) -> RunManifest {
        RunManifest {
            schema: MANIFEST_SCHEMA.into(),
            command: command.into(),
            config_hash: problem.config().fingerprint(),
            run_key,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            wall_time_s: self.start.elapsed().as_secs_f64(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            passed,
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    atomic_write(path, text.as_bytes()).map_err(|source| CliError::Write { path: path.into(), source })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invalid(e.to_string()))?;
    write(path, &(text + "\n"))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })
}

fn load_surrogate(path: &Path) -> Result<Surrogate, CliError> {
    Ok(Surrogate::from_json(&read(path)?)?)
}

fn cached_manifest(dir: &Path, key: &str) -> Option<RunManifest> {
    let m: RunManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).ok()?).ok()?;
    (m.schema == MANIFEST_SCHEMA && m.run_key == key && m.outputs.iter().all(|p| Path::new(p).exists())).then_some(m)
}

#[derive(Serialize)]
struct FitKey {
    epsilon: f64,
    mode: &'static str,
}

/// Fits (or reuses) a surrogate and writes it with its cost report into `dir`.
fn fit_cached(
    ctx: &Context,
    problem: &FiberProblem,
    command: &str,
    dir: &Path,
    epsilon: f64,
    mode: FitMode,
) -> Result<(Surrogate, Option<CostReport>, Vec<PathBuf>), CliError> {
    let key = ctx.run_key(
        problem,
        "fit",
        &FitKey { epsilon, mode: if mode == FitMode::APriori { "a-priori" } else { "adaptive" } },
    );
    let surrogate_path = dir.join("surrogate.json");
    let cost_path = dir.join("cost.json");
    let outputs = vec![surrogate_path.clone(), cost_path.clone()];
    if !ctx.force && cached_manifest(dir, &key).is_some() {
        let cost = serde_json::from_str(&read(&cost_path)?).ok();
        return Ok((load_surrogate(&surrogate_path)?, cost, outputs));
    }
    let (s, cost) = fit_to_tolerance(epsilon, problem, mode, &ctx.run.fit, ctx.seed)?;
    write(&surrogate_path, &(s.to_json()? + "\n"))?;
    write_json(&cost_path, &cost)?;
    write_json(&dir.join("manifest.json"), &ctx.manifest(problem, command, key, &outputs, None))?;
    Ok((s, Some(cost), outputs))
}

fn stats_settings(ctx: &Context, thresholds: &[f64], p: Option<f64>, samples: Option<usize>) -> Result<StatsSettings, CliError> {
    let mut s = ctx.run.stats.clone();
    if !thresholds.is_empty() {
        s.thresholds = thresholds.to_vec();
    }
    if let Some(p) = p {
        s.p = p;
    }
    if let Some(n) = samples {
        s.samples = n;
    }
    if !(s.p > 0.0 && s.p < 1.0) {
        return Err(CliError::Invalid(format!("p must lie in (0, 1), got {}", s.p)));
    }
    if s.samples < 2 || s.l2_samples < 2 {
        return Err(CliError::Invalid("sample counts must be at least 2".into()));
    }
    Ok(s)
}

fn checks_csv(rows: &[BoundCheck]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Invalid(e.to_string()))
}

fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Invalid(e.to_string()))
}

fn cmd_fit(ctx: &Context, a: &FitArgs) -> Result<bool, CliError> {
    let problem = ctx.problem()?;
    let dir = ctx.dir("fit")?;
    let (s, cost, _) = fit_cached(ctx, &problem, "fit", &dir, a.epsilon, a.mode.into())?;
    println!(
        "surrogate: {} terms, mean {:.6}, std {:.4e}, cost {} Euler steps",
        s.index_set().len(),
        s.mean(),
        s.variance().sqrt(),
        cost.map_or(0, |c| c.total_steps)
    );
    println!("wrote {}", dir.join("surrogate.json").display());
    Ok(true)
}

fn cmd_stats(ctx: &Context, a: &StatsArgs) -> Result<bool, CliError> {
    let problem = ctx.problem()?;
    let settings = stats_settings(ctx, &a.thresholds, a.p, a.samples)?;
    let path = a.surrogate.clone().unwrap_or_else(|| ctx.out_dir.join("fit").join("surrogate.json"));
    let s = load_surrogate(&path)?;
    if !a.no_reference && !s.fingerprint().is_empty() && s.fingerprint() != problem.config().fingerprint() {
        return Err(CliError::Invalid(format!(
            "{} was fitted for a different configuration; pass the same --config or --no-reference",
            path.display()
        )));
    }
    let reference = if a.no_reference {
        None
    } else {
        Some(reference_statistics(&problem, &settings, Some(&ctx.cache), ctx.force)?)
    };
    let report = surrogate_statistics(&s, &problem, &settings, reference.as_ref())?;
    let dir = ctx.dir("stats")?;
    let json = dir.join("stats.json");
    let csv = dir.join("stats.csv");
    write_json(&json, &report)?;
    write(&csv, &report.to_csv()?)?;
    println!("mean {:.6}  std {:.5e}", report.mean, report.std);
    for (t, v) in &report.cdf {
        println!("F({t}) = {v:.5}");
    }
    println!("q({}) = {:.6}", report.quantile.0, report.quantile.1);
    for b in &report.bounds {
        println!("{:<16} error {:.3e}  bound {:.3e}  {}", b.statistic, b.abs_error, b.bound, pass_word(b.pass));
    }
    let passed = report.all_pass();
    let key = ctx.run_key(&problem, "stats", &(path.display().to_string(), &settings));
    write_json(&dir.join("manifest.json"), &ctx.manifest(&problem, "stats", key, &[json, csv], Some(passed)))?;
    Ok(passed)
}

fn pass_word(p: bool) -> &'static str {
    if p { "pass" } else { "FAIL" }
}

#[derive(Serialize)]
struct SweepCsvRow {
    epsilon: f64,
    l2_error: f64,
    within_tolerance: bool,
    total_steps: u64,
    wall_time_s: f64,
    statistic: String,
    abs_error: f64,
    bound: f64,
    pass: bool,
}

fn cmd_verify_bounds(ctx: &Context, a: &VerifyBoundsArgs) -> Result<bool, CliError> {
    if !(a.eps_min > 0.0 && a.eps_min <= a.eps_max && a.eps_max <= 1.0) || a.count == 0 {
        return Err(CliError::Invalid("need 0 < eps-min <= eps-max <= 1 and count >= 1".into()));
    }
    let problem = ctx.problem()?;
    let settings = stats_settings(ctx, &[], None, a.samples)?;
    let reference = reference_statistics(&problem, &settings, Some(&ctx.cache), ctx.force)?;
    let eps = log_grid(a.eps_min, a.eps_max, a.count);
    let rows = tolerance_sweep(&problem, &eps, a.mode.into(), &ctx.run.fit, &settings, &reference, ctx.seed)?;
    let mut flat = Vec::new();
    let mut passed = true;
    for r in &rows {
        passed &= r.within_tolerance() && r.report.all_pass();
        println!(
            "eps {:.3e}  error {:.3e}  {}  bounds {}",
            r.epsilon,
            r.l2_error,
            pass_word(r.within_tolerance()),
            pass_word(r.report.all_pass())
        );
        for b in &r.report.bounds {
            flat.push(SweepCsvRow {
                epsilon: r.epsilon,
                l2_error: r.l2_error,
                within_tolerance: r.within_tolerance(),
                total_steps: r.total_steps,
                wall_time_s: r.wall_time_s,
                statistic: b.statistic.clone(),
                abs_error: b.abs_error,
                bound: b.bound,
                pass: b.pass,
            });
        }
    }
    let dir = ctx.dir("verify-bounds")?;
    let csv = dir.join("verify-bounds.csv");
    let json = dir.join("verify-bounds.json");
    write(&csv, &csv_string(&flat)?)?;
    write_json(&json, &serde_json::json!({ "schema": SWEEP_SCHEMA, "reference": reference, "rows": rows }))?;
    let key = ctx.run_key(&problem, "verify-bounds", &(a.eps_min, a.eps_max, a.count, &settings));
    write_json(&dir.join("manifest.json"), &ctx.manifest(&problem, "verify-bounds", key, &[csv, json], Some(passed)))?;
    Ok(passed)
}

fn channel_surrogate(
    ctx: &Context,
    problem: &FiberProblem,
    command: &str,
    dir: &Path,
    path: Option<&PathBuf>,
    epsilon: f64,
) -> Result<Surrogate, CliError> {
    let s = match path {
        Some(p) => load_surrogate(p)?,
        None => fit_cached(ctx, problem, command, dir, epsilon, FitMode::Adaptive)?.0,
    };
    if s.dim() != 4 {
        return Err(CliError::Invalid(format!("expected a surrogate over 4 inputs, got {}", s.dim())));
    }
    Ok(s)
}

#[derive(Serialize)]
struct FieldHeader<'a> {
    schema: &'a str,
    nx: usize,
    ny: usize,
    width: f64,
    height: f64,
    statistics: Vec<&'a str>,
    band: (f64, f64),
    fingerprint: &'a str,
    mean_range: (f64, f64),
    max_std_at: [f64; 2],
}

fn cmd_channel_field(ctx: &Context, a: &ChannelFieldArgs, explicit: bool) -> Result<bool, CliError> {
    let problem = ctx.channel_problem(explicit)?;
    let dir = ctx.dir("channel-field")?;
    let s = channel_surrogate(ctx, &problem, "channel-field", &dir, a.surrogate.as_ref(), a.epsilon)?;
    let cfg = problem.config();
    let grid = FieldGrid::new(a.nx, a.ny, cfg.channel.width, cfg.channel.height)?;
    let f = field_statistics(&s, &grid, Some((a.band_low, a.band_high, a.band_samples)))?;
    let mut outputs = vec![dir.join("mean.csv"), dir.join("std.csv")];
    write(&outputs[0], &f.to_csv(&f.mean)?)?;
    write(&outputs[1], &f.to_csv(&f.std)?)?;
    if let Some((_, band)) = &f.band {
        outputs.push(dir.join("band.csv"));
        write(&outputs[2], &f.to_csv(band)?)?;
    }
    let header = FieldHeader {
        schema: FIELD_SCHEMA,
        nx: a.nx,
        ny: a.ny,
        width: grid.width,
        height: grid.height,
        statistics: vec!["mean", "std", "band"],
        band: (a.band_low, a.band_high),
        fingerprint: s.fingerprint(),
        mean_range: f.mean_range(),
        max_std_at: f.argmax_std(),
    };
    let json = dir.join("field.json");
    write_json(&json, &header)?;
    outputs.push(json);
    println!("mean field in [{:.4}, {:.4}], largest std at {:?}", header.mean_range.0, header.mean_range.1, header.max_std_at);
    let key = ctx.run_key(&problem, "channel-field", &(a.nx, a.ny, a.band_low, a.band_high, a.band_samples));
    write_json(&dir.join("field-manifest.json"), &ctx.manifest(&problem, "channel-field", key, &outputs, None))?;
    Ok(true)
}

fn cmd_mc_compare(ctx: &Context, a: &McCompareArgs) -> Result<bool, CliError> {
    let problem = ctx.problem()?;
    let settings = stats_settings(ctx, &[], None, a.samples)?;
    let reference = reference_statistics(&problem, &settings, Some(&ctx.cache), ctx.force)?;
    let mc_settings = McCompareSettings { target: a.target, ..Default::default() };
    let cmp = mc_compare(&problem, &mc_settings, &ctx.run.fit, &reference, ctx.seed)?;
    let dir = ctx.dir("mc-compare")?;
    let mc_csv = dir.join("mc.csv");
    let s_csv = dir.join("surrogate.csv");
    let json = dir.join("mc-compare.json");
    write(&mc_csv, &csv_string(&cmp.mc)?)?;
    write(&s_csv, &csv_string(&cmp.surrogate)?)?;
    write_json(&json, &cmp)?;
    println!("Monte Carlo error-cost slope {:.3}", cmp.slope);
    match (&cmp.cheapest_mc, &cmp.surrogate_at_target) {
        (Some(m), _) => println!("cheapest Monte Carlo run at target: {} steps (N={}, n={})", m.cost, m.samples, m.steps),
        (None, _) => println!("no Monte Carlo run reached the target"),
    }
    if let Some(s) = &cmp.surrogate_at_target {
        println!("surrogate at target: {} steps (eps={:.2e})", s.cost, s.epsilon);
    }
    let key = ctx.run_key(&problem, "mc-compare", &(a.target, &settings));
    write_json(&dir.join("manifest.json"), &ctx.manifest(&problem, "mc-compare", key, &[mc_csv, s_csv, json], None))?;
    Ok(true)
}

#[derive(Serialize)]
struct PartialHeader<'a> {
    schema: &'a str,
    nx: usize,
    ny: usize,
    c2: f64,
    global_error_sq: f64,
    expansion_terms: usize,
    captured: f64,
    max_ratio: f64,
    violations: usize,
    field_bounds: Vec<BoundCheck>,
}

fn cmd_verify_partial(ctx: &Context, a: &VerifyPartialArgs, explicit: bool) -> Result<bool, CliError> {
    let problem = ctx.channel_problem(explicit)?;
    let dir = ctx.dir("verify-partial")?;
    let s = channel_surrogate(ctx, &problem, "verify-partial", &dir, a.surrogate.as_ref(), a.epsilon)?;
    let cfg = problem.config();
    let grid = FieldGrid::new(a.nx, a.ny, cfg.channel.width, cfg.channel.height)?;
    if !(a.capture > 0.0 && a.capture <= 1.0) {
        return Err(CliError::Invalid(format!("capture must lie in (0, 1], got {}", a.capture)));
    }
    let opts = PartialBoundOptions {
        coefficient_samples: a.coefficient_samples,
        capture: a.capture,
        max_terms: a.max_terms,
        ..Default::default()
    };
    let r = verify_partial_eval_bound(&s, &problem, &grid, &opts)?;
    let field_bounds = if a.global {
        verify_global_stat_bounds(&s, &problem, &GlobalBoundOptions::default())?
    } else {
        Vec::new()
    };
    let ratios = dir.join("ratios.csv");
    write(&ratios, &crate::channel::field_csv(&grid, &r.ratios)?)?;
    let mut outputs = vec![ratios];
    if !field_bounds.is_empty() {
        let p = dir.join("field-bounds.csv");
        write(&p, &checks_csv(&field_bounds)?)?;
        outputs.push(p);
    }
    let passed = r.violations == 0 && field_bounds.iter().all(|b| b.pass);
    println!(
        "C2 = {:.4e} over {} terms ({:.1}% of the error captured), max ratio {:.4}, {} violations",
        r.c2,
        r.expansion_terms,
        100.0 * r.captured,
        r.max_ratio,
        r.violations
    );
    for b in &field_bounds {
        println!("{:<18} error {:.3e}  bound {:.3e}  {}", b.statistic, b.abs_error, b.bound, pass_word(b.pass));
    }
    let json = dir.join("partial.json");
    write_json(
        &json,
        &PartialHeader {
            schema: FIELD_SCHEMA,
            nx: a.nx,
            ny: a.ny,
            c2: r.c2,
            global_error_sq: r.global_error_sq,
            expansion_terms: r.expansion_terms,
            captured: r.captured,
            max_ratio: r.max_ratio,
            violations: r.violations,
            field_bounds,
        },
    )?;
    outputs.push(json);
    let key = ctx.run_key(&problem, "verify-partial", &(a.nx, a.ny, a.coefficient_samples, a.capture, a.max_terms, a.global));
    write_json(&dir.join("partial-manifest.json"), &ctx.manifest(&problem, "verify-partial", key, &outputs, Some(passed)))?;
    Ok(passed)
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Invalid("--threads must be at least 1".into()));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut run = match &cli.config {
        Some(p) => RunConfig::from_toml(&read(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(m) = cli.model {
        run.problem.fom.model = m.into();
        run.problem.validate()?;
    }
    let ctx = Context {
        run,
        seed: cli.seed,
        force: cli.force,
        out_dir: cli.out_dir.clone(),
        cache: ReferenceCache::from_env_or(cli.out_dir.join("cache")),
        start: Instant::now(),
    };
    let explicit = cli.config.is_some();
    match &cli.command {
        Command::Fit(a) => cmd_fit(&ctx, a),
        Command::Stats(a) => cmd_stats(&ctx, a),
        Command::VerifyBounds(a) => cmd_verify_bounds(&ctx, a),
        Command::ChannelField(a) => cmd_channel_field(&ctx, a, explicit),
        Command::McCompare(a) => cmd_mc_compare(&ctx, a),
        Command::VerifyPartial(a) => cmd_verify_partial(&ctx, a, explicit),
    }
}

/// Structured error printed on standard error.
pub fn error_json(e: &dyn std::fmt::Display) -> String {
    serde_json::json!({ "schema": ERROR_SCHEMA, "error": e.to_string() }).to_string()
}

/// Runs the command line; returns the process exit code: 0 when every
/// requested check passes, 1 when a check fails, 2 on errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_global_flags_after_subcommand() {
        let cli = Cli::try_parse_from(["fiberuq", "fit", "--epsilon", "0.01", "--seed", "7", "--model", "iard"]).unwrap();
        assert_eq!(cli.seed, 7);
        assert_eq!(cli.model, Some(ModelArg::Iard));
        assert!(matches!(cli.command, Command::Fit(FitArgs { epsilon, mode: ModeArg::APriori }) if epsilon == 0.01));
    }

    #[test]
    fn run_config_tables() {
        let r = RunConfig::from_toml("[fit]\nn0 = 10\n[stats]\nsamples = 1000\n[fom]\nmodel = \"iard\"\n").unwrap();
        assert_eq!(r.fit.n0, 10);
        assert_eq!(r.stats.samples, 1000);
        assert_eq!(r.problem.fom.model, FomModel::Iard);
        assert!(RunConfig::from_toml("[fit]\nbogus = 1\n").is_err());
    }
}

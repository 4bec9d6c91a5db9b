//! Command-line front end: configuration loading, experiment orchestration and
//! CSV emission for the `spectrum`, `optimize` and `bench` subcommands.
//!
//! Configuration is a TOML file with one table per subcommand. Every key has a
//! default and unknown keys are rejected. `--set key=value` overrides a key of
//! the active subcommand's table (or any table with a `section.key` prefix);
//! the value is read as a TOML literal and falls back to a bare string.
//!
//! Floats in every CSV are written as `{:.16e}` (17 significant digits), so
//! parsing a cell recovers the exact `f64` that was printed.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;

use crate::acquisition::{AcquisitionKind, AcquisitionSpec};
use crate::benchmarks::{
    BenchmarkFunction, BenchmarkSpec, BlackBox, DomainBox, ExternalBlackBox, Setting, SyntheticBlackBox,
};
use crate::bo::{run_bo, summarize, BoConfig, HyperPolicy, Summary, Trajectory};
use crate::error::Error;
use crate::gp::{NoisePolicy, DEFAULT_NOISE_VAR};
use crate::kernels::{KernelKind, KernelSpec};
use crate::spectral::{spectrum_report, SpectrumReport, SpectrumSettings};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

/// Failure of a CLI command, split by exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad configuration or arguments (exit 2).
    Config(String),
    /// Black-box, numerical or I/O failure (exit 3).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

fn config_err(e: impl fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// configuration

/// Settings for `spectrum`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Kernel labels; `beta` sweeps `h_grid`, stationary kernels sweep `ell_grid`.
    pub kernels: Vec<String>,
    pub h_grid: Vec<f64>,
    pub ell_grid: Vec<f64>,
    pub d_grid: Vec<usize>,
    pub n_matrices: usize,
    pub n_points: usize,
    pub eigen_floor: f64,
    pub seed: u64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        let s = SpectrumSettings::default();
        SpectrumConfig {
            kernels: vec!["beta".into()],
            h_grid: vec![0.1, 0.25, 0.5, 0.75, 1.0, 1.5],
            ell_grid: vec![1.0],
            d_grid: vec![5, 10, 20, 50],
            n_matrices: s.n_matrices,
            n_points: s.n_points,
            eigen_floor: s.eigen_floor,
            seed: 0,
        }
    }
}

/// Surrogate and loop settings shared by `optimize` and `bench`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSettings {
    pub beta_t: f64,
    pub xi: f64,
    /// Initial design size; 0 picks the default (`3·d` for benchmarks, 5
    /// for external objectives).
    pub n_init: usize,
    pub n_iter: usize,
    pub noise_var: f64,
    pub learn_noise: bool,
    /// Refit hyperparameters every this many iterations; 0 keeps the
    /// default hyperparameters fixed.
    pub refit_every: usize,
    pub restarts: usize,
}

impl LoopSettings {
    fn bo_config(&self, kind: KernelKind, acq: AcquisitionKind, d: usize, seed: u64) -> Result<BoConfig, CliError> {
        let spec = AcquisitionSpec::new(acq, self.beta_t, self.xi).map_err(config_err)?;
        let mut cfg = BoConfig::new(kind, spec, self.n_iter, seed);
        if self.n_init > 0 {
            cfg.n_init = Some(self.n_init);
        }
        if !(self.noise_var.is_finite() && self.noise_var > 0.0) {
            return Err(CliError::Config(format!("noise_var must be positive, got {}", self.noise_var)));
        }
        cfg.noise = if self.learn_noise {
            NoisePolicy::learn_default()
        } else {
            NoisePolicy::Fixed(self.noise_var)
        };
        cfg.hyper = match self.refit_every {
            0 => HyperPolicy::Fixed(KernelSpec::default_for(kind, d)),
            every => HyperPolicy::Refit { every },
        };
        if self.restarts == 0 {
            return Err(CliError::Config("restarts must be >= 1".into()));
        }
        cfg.search.restarts = self.restarts;
        Ok(cfg)
    }
}

/// Settings for `optimize`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    /// Benchmark label, or `external` to run `command` as the objective.
    pub function: String,
    pub d: usize,
    /// Optimum-location setting 1, 2 or 3 (benchmarks only).
    pub setting: u8,
    pub margin: f64,
    pub kernels: Vec<String>,
    pub acquisitions: Vec<String>,
    pub beta_t: f64,
    pub xi: f64,
    pub n_init: usize,
    pub n_iter: usize,
    pub seeds: Vec<u64>,
    pub noise_var: f64,
    pub learn_noise: bool,
    pub refit_every: usize,
    pub restarts: usize,
    /// Program and arguments of an external objective.
    pub command: Vec<String>,
    /// Box of an external objective; empty means the unit cube.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            function: "levy".into(),
            d: 2,
            setting: 1,
            margin: BenchmarkSpec::DEFAULT_MARGIN,
            kernels: vec!["beta".into()],
            acquisitions: vec!["ucb".into()],
            beta_t: AcquisitionSpec::DEFAULT_BETA_T,
            xi: AcquisitionSpec::DEFAULT_XI,
            n_init: 0,
            n_iter: 50,
            seeds: vec![0],
            noise_var: DEFAULT_NOISE_VAR,
            learn_noise: false,
            refit_every: 1,
            restarts: 8,
            command: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
        }
    }
}

impl OptimizeConfig {
    pub fn loop_settings(&self) -> LoopSettings {
        LoopSettings {
            beta_t: self.beta_t,
            xi: self.xi,
            n_init: self.n_init,
            n_iter: self.n_iter,
            noise_var: self.noise_var,
            learn_noise: self.learn_noise,
            refit_every: self.refit_every,
            restarts: self.restarts,
        }
    }
}

/// Settings for `bench`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub functions: Vec<String>,
    pub d: usize,
    pub settings: Vec<u8>,
    pub margin: f64,
    pub kernels: Vec<String>,
    pub acquisition: String,
    pub beta_t: f64,
    pub xi: f64,
    pub n_init: usize,
    pub n_iter: usize,
    pub seeds: Vec<u64>,
    pub noise_var: f64,
    pub learn_noise: bool,
    pub refit_every: usize,
    pub restarts: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            functions: vec!["levy".into()],
            d: 8,
            settings: vec![1, 2, 3],
            margin: BenchmarkSpec::DEFAULT_MARGIN,
            kernels: vec!["beta".into(), "matern".into()],
            acquisition: "ucb".into(),
            beta_t: AcquisitionSpec::DEFAULT_BETA_T,
            xi: AcquisitionSpec::DEFAULT_XI,
            n_init: 0,
            n_iter: 150,
            seeds: vec![0, 1, 2],
            noise_var: DEFAULT_NOISE_VAR,
            learn_noise: false,
            refit_every: 1,
            restarts: 8,
        }
    }
}

impl BenchConfig {
    pub fn loop_settings(&self) -> LoopSettings {
        LoopSettings {
            beta_t: self.beta_t,
            xi: self.xi,
            n_init: self.n_init,
            n_iter: self.n_iter,
            noise_var: self.noise_var,
            learn_noise: self.learn_noise,
            refit_every: self.refit_every,
            restarts: self.restarts,
        }
    }
}

/// Full configuration; one table per subcommand.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spectrum: SpectrumConfig,
    pub optimize: OptimizeConfig,
    pub bench: BenchConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Spectrum,
    Optimize,
    Bench,
}

impl CommandKind {
    pub fn section(self) -> &'static str {
        match self {
            CommandKind::Spectrum => "spectrum",
            CommandKind::Optimize => "optimize",
            CommandKind::Bench => "bench",
        }
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Applies one `key=value` override to a parsed config table.
pub fn apply_override(table: &mut toml::Table, assignment: &str, command: CommandKind) -> Result<(), CliError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{assignment}' is not key=value")))?;
    let key = key.trim();
    let (section, field) = match key.split_once('.') {
        Some((s, f)) => (s.trim(), f.trim()),
        None => (command.section(), key),
    };
    if field.is_empty() {
        return Err(CliError::Config(format!("override '{assignment}' has an empty key")));
    }
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let sub = entry
        .as_table_mut()
        .ok_or_else(|| CliError::Config(format!("'{section}' is not a table")))?;
    sub.insert(field.to_string(), parse_override_value(value.trim()));
    Ok(())
}

/// Reads the optional config file, applies overrides in order and checks
/// every key.
pub fn load_config(path: Option<&Path>, overrides: &[String], command: CommandKind) -> Result<ExperimentConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o, command)?;
    }
    ExperimentConfig::deserialize(toml::Value::Table(table)).map_err(config_err)
}

// ---------------------------------------------------------------------------
// CSV helpers

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn strings(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// Writes a trajectory with columns
/// `iter, x_unit_0.., x_raw_0.., y, best, delta_boundary`.
pub fn write_trajectory(path: &Path, t: &Trajectory) -> Result<(), CliError> {
    let d = t.records.first().map_or(0, |r| r.unit.dim());
    let mut header = vec!["iter".to_string()];
    header.extend((0..d).map(|i| format!("x_unit_{i}")));
    header.extend((0..d).map(|i| format!("x_raw_{i}")));
    header.extend(strings(&["y", "best", "delta_boundary"]));
    let rows: Vec<Vec<String>> = t
        .records
        .iter()
        .map(|r| {
            let mut row = vec![r.iter.to_string()];
            row.extend(r.unit.coords().iter().map(|&v| fmt_f(v)));
            row.extend(r.raw.iter().map(|&v| fmt_f(v)));
            row.extend([fmt_f(r.y), fmt_f(r.best), fmt_f(r.delta_boundary)]);
            row
        })
        .collect();
    write_csv(path, &header, &rows)
}

fn trajectory_name(seed: u64) -> String {
    format!("trajectory_{seed}.csv")
}

// ---------------------------------------------------------------------------
// parsing helpers

fn parse_kernels(labels: &[String]) -> Result<Vec<KernelKind>, CliError> {
    if labels.is_empty() {
        return Err(CliError::Config("kernel list is empty".into()));
    }
    labels.iter().map(|l| KernelKind::parse(l).map_err(config_err)).collect()
}

fn parse_setting(i: u8) -> Result<Setting, CliError> {
    Setting::from_index(i).map_err(config_err)
}

fn worker_pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(CliError::Config("workers must be >= 1".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Runtime(e.to_string()))
}

fn runtime(e: Error) -> CliError {
    CliError::Runtime(e.to_string())
}

// ---------------------------------------------------------------------------
// spectrum

/// Kernel/parameter cells of a spectrum run, `d` varying slowest.
pub fn spectrum_cells(cfg: &SpectrumConfig) -> Result<Vec<(KernelSpec, usize, f64)>, CliError> {
    let kinds = parse_kernels(&cfg.kernels)?;
    if cfg.d_grid.is_empty() {
        return Err(CliError::Config("d_grid is empty".into()));
    }
    if cfg.d_grid.contains(&0) {
        return Err(CliError::Config("d_grid entries must be >= 1".into()));
    }
    let mut cells = Vec::new();
    for &d in &cfg.d_grid {
        for &kind in &kinds {
            let grid = if kind == KernelKind::Beta { &cfg.h_grid } else { &cfg.ell_grid };
            if grid.is_empty() {
                let name = if kind == KernelKind::Beta { "h_grid" } else { "ell_grid" };
                return Err(CliError::Config(format!("{name} is empty")));
            }
            for &p in grid {
                let spec = match kind {
                    KernelKind::Beta => KernelSpec::beta_shared(p, d),
                    KernelKind::Rbf => KernelSpec::rbf(p),
                    KernelKind::Matern(nu) => KernelSpec::matern(p, nu),
                }
                .map_err(config_err)?;
                cells.push((spec, d, p));
            }
        }
    }
    Ok(cells)
}

/// Runs every spectrum cell and writes `spectrum.csv` and
/// `spectrum_regression.csv` into `out`.
pub fn cmd_spectrum(cfg: &SpectrumConfig, out: &Path, workers: Option<usize>) -> Result<Vec<SpectrumReport>, CliError> {
    let settings = SpectrumSettings {
        n_matrices: cfg.n_matrices,
        n_points: cfg.n_points,
        eigen_floor: cfg.eigen_floor,
    };
    settings.validate().map_err(config_err)?;
    let cells = spectrum_cells(cfg)?;
    let pool = worker_pool(workers)?;
    log::info!("spectrum: {} cells, {} replicates each", cells.len(), cfg.n_matrices);
    let reports: Vec<SpectrumReport> = pool.install(|| {
        cells
            .par_iter()
            .map(|(spec, d, _)| {
                let r = spectrum_report(spec, *d, &settings, cfg.seed);
                if let Ok(r) = &r {
                    log::info!(
                        "{} d={} scale={}: slope {:.4} p {:.3e}",
                        spec.kind(),
                        d,
                        spec.scale_summary(),
                        r.regression.slope,
                        r.regression.p_value
                    );
                }
                r
            })
            .collect::<Result<Vec<_>, _>>()
    })
    .map_err(runtime)?;

    let mut spectrum_rows = Vec::new();
    let mut regression_rows = Vec::new();
    for ((_, d, p), r) in cells.iter().zip(&reports) {
        let kernel = r.kernel.kind().label().to_string();
        for (j, v) in r.mean_eigenvalues.iter().enumerate() {
            spectrum_rows.push(vec![kernel.clone(), d.to_string(), fmt_f(*p), (j + 1).to_string(), fmt_f(*v)]);
        }
        let g = &r.regression;
        regression_rows.push(vec![
            kernel,
            d.to_string(),
            fmt_f(*p),
            fmt_f(g.slope),
            fmt_f(g.intercept),
            fmt_f(g.p_value),
            fmt_f(g.log10_p),
            fmt_f(g.r_squared),
            g.n_retained.to_string(),
        ]);
    }
    write_csv(
        &out.join("spectrum.csv"),
        &strings(&["kernel", "d", "h_or_ell", "j", "mean_eigenvalue"]),
        &spectrum_rows,
    )?;
    write_csv(
        &out.join("spectrum_regression.csv"),
        &strings(&["kernel", "d", "h_or_ell", "slope", "intercept", "p_value", "log10_p", "r2", "n_retained"]),
        &regression_rows,
    )?;
    Ok(reports)
}

// ---------------------------------------------------------------------------
// optimize

/// Objective selected by an `optimize` config.
pub fn build_black_box(cfg: &OptimizeConfig) -> Result<(Box<dyn BlackBox>, String), CliError> {
    if cfg.d == 0 {
        return Err(CliError::Config("d must be >= 1".into()));
    }
    if cfg.function.eq_ignore_ascii_case("external") {
        if cfg.command.is_empty() {
            return Err(CliError::Config("function = \"external\" needs a command".into()));
        }
        let domain = if cfg.lower.is_empty() && cfg.upper.is_empty() {
            DomainBox::unit(cfg.d)
        } else {
            if cfg.lower.len() != cfg.d || cfg.upper.len() != cfg.d {
                return Err(CliError::Config(format!(
                    "lower/upper must both have d = {} entries",
                    cfg.d
                )));
            }
            DomainBox::new(cfg.lower.clone(), cfg.upper.clone()).map_err(config_err)?
        };
        let bb = ExternalBlackBox::new(&cfg.command, domain).map_err(config_err)?;
        return Ok((Box::new(bb), "external".into()));
    }
    if !cfg.command.is_empty() || !cfg.lower.is_empty() || !cfg.upper.is_empty() {
        return Err(CliError::Config(
            "command, lower and upper apply only to function = \"external\"".into(),
        ));
    }
    let f = BenchmarkFunction::parse(&cfg.function).map_err(config_err)?;
    let spec = BenchmarkSpec::new(f, cfg.d, parse_setting(cfg.setting)?, cfg.margin).map_err(config_err)?;
    let bb = SyntheticBlackBox::new(spec).map_err(config_err)?;
    Ok((Box::new(bb), cfg.setting.to_string()))
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub kernel: KernelKind,
    pub acquisition: AcquisitionKind,
    pub setting: String,
    pub summary: Summary,
}

/// Result of `optimize`: summaries of the combinations that completed and
/// the failures of those that did not.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome {
    pub rows: Vec<SummaryRow>,
    pub failures: Vec<String>,
}

/// Runs every (kernel, acquisition, seed) job, writing one trajectory per
/// job and `summary.csv`. A failing black box keeps its partial trajectory
/// and turns the command into a runtime error after all jobs finish.
pub fn cmd_optimize(cfg: &OptimizeConfig, out: &Path, workers: Option<usize>) -> Result<OptimizeOutcome, CliError> {
    let kinds = parse_kernels(&cfg.kernels)?;
    if cfg.acquisitions.is_empty() {
        return Err(CliError::Config("acquisition list is empty".into()));
    }
    let acqs: Vec<AcquisitionKind> = cfg
        .acquisitions
        .iter()
        .map(|a| AcquisitionKind::parse(a).map_err(config_err))
        .collect::<Result<_, _>>()?;
    if cfg.seeds.is_empty() {
        return Err(CliError::Config("seed list is empty".into()));
    }
    let (black_box, setting) = build_black_box(cfg)?;
    let d = black_box.domain().dim();
    let loop_settings = cfg.loop_settings();
    let combos: Vec<(KernelKind, AcquisitionKind)> =
        kinds.iter().flat_map(|&k| acqs.iter().map(move |&a| (k, a))).collect();
    let nested = combos.len() > 1;
    let mut jobs = Vec::new();
    for (c, &(k, a)) in combos.iter().enumerate() {
        for &seed in &cfg.seeds {
            jobs.push((c, loop_settings.bo_config(k, a, d, seed)?));
        }
    }
    let pool = worker_pool(workers)?;
    let results: Vec<Result<Trajectory, CliError>> = pool.install(|| {
        jobs.par_iter()
            .map(|(c, bo)| {
                let (k, a) = combos[*c];
                let dir = if nested { out.join(format!("{}_{}", k.label(), a.label())) } else { out.to_path_buf() };
                let path = dir.join(trajectory_name(bo.seed));
                match run_bo(black_box.as_ref(), bo) {
                    Ok(t) => {
                        write_trajectory(&path, &t)?;
                        log::info!("{k}/{a} seed {}: final best {:.6e}", bo.seed, t.final_best().unwrap_or(f64::NAN));
                        Ok(t)
                    }
                    Err(Error::BlackBox { message, partial }) => {
                        write_trajectory(&path, &partial)?;
                        let msg = format!("{k}/{a} seed {}: {message}", bo.seed);
                        log::error!("{msg} (partial trajectory kept)");
                        Err(CliError::Runtime(msg))
                    }
                    Err(e) => Err(runtime(e)),
                }
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (c, &(k, a)) in combos.iter().enumerate() {
        let mut done = Vec::new();
        let mut failed = false;
        for ((jc, _), r) in jobs.iter().zip(&results) {
            if *jc != c {
                continue;
            }
            match r {
                Ok(t) => done.push(t.clone()),
                Err(CliError::Runtime(m) | CliError::Config(m)) => {
                    failures.push(m.clone());
                    failed = true;
                }
            }
        }
        if failed {
            continue;
        }
        let summary = summarize(&done).map_err(runtime)?;
        rows.push(SummaryRow {
            kernel: k,
            acquisition: a,
            setting: setting.clone(),
            summary,
        });
    }
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.kernel.label().to_string(),
                r.acquisition.label().to_string(),
                r.setting.clone(),
                fmt_f(r.summary.mean_final_best),
                fmt_f(r.summary.stderr),
            ]
        })
        .collect();
    write_csv(
        &out.join("summary.csv"),
        &strings(&["kernel", "acq", "setting", "mean_final_best", "stderr"]),
        &csv_rows,
    )?;
    if let Some(first) = failures.first() {
        return Err(CliError::Runtime(format!("{} job(s) failed; first: {first}", failures.len())));
    }
    Ok(OptimizeOutcome { rows, failures })
}

// ---------------------------------------------------------------------------
// bench

/// One cell of `table2_style.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub function: BenchmarkFunction,
    pub setting: u8,
    pub kernel: KernelKind,
    pub result: Result<Summary, String>,
}

/// Runs the (function × setting × kernel × seed) grid and writes
/// `table2_style.csv`; trajectories go to
/// `<function>_setting<k>_<kernel>/trajectory_<seed>.csv`. A failing cell is
/// marked in the table and the rest of the grid still runs; the command then
/// reports a runtime error.
pub fn cmd_bench(cfg: &BenchConfig, out: &Path, workers: Option<usize>) -> Result<Vec<BenchCell>, CliError> {
    let kinds = parse_kernels(&cfg.kernels)?;
    if cfg.functions.is_empty() {
        return Err(CliError::Config("function list is empty".into()));
    }
    if cfg.settings.is_empty() {
        return Err(CliError::Config("setting list is empty".into()));
    }
    if cfg.seeds.is_empty() {
        return Err(CliError::Config("seed list is empty".into()));
    }
    if cfg.d == 0 {
        return Err(CliError::Config("d must be >= 1".into()));
    }
    let functions: Vec<BenchmarkFunction> = cfg
        .functions
        .iter()
        .map(|f| BenchmarkFunction::parse(f).map_err(config_err))
        .collect::<Result<_, _>>()?;
    for &f in &functions {
        f.check_dim(cfg.d).map_err(config_err)?;
    }
    for &s in &cfg.settings {
        parse_setting(s)?;
    }
    let acq = AcquisitionKind::parse(&cfg.acquisition).map_err(config_err)?;
    let loop_settings = cfg.loop_settings();
    // validates the loop settings once up front
    loop_settings.bo_config(kinds[0], acq, cfg.d, cfg.seeds[0])?;

    let mut cells = Vec::new();
    for &f in &functions {
        for &s in &cfg.settings {
            for &k in &kinds {
                cells.push((f, s, k));
            }
        }
    }
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| cfg.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let pool = worker_pool(workers)?;
    let results: Vec<Result<Trajectory, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, seed)| {
                let (f, s, k) = cells[c];
                let spec = BenchmarkSpec::new(f, cfg.d, Setting::from_index(s).map_err(|e| e.to_string())?, cfg.margin)
                    .map_err(|e| e.to_string())?;
                let bb = SyntheticBlackBox::new(spec).map_err(|e| e.to_string())?;
                let bo = loop_settings.bo_config(k, acq, cfg.d, seed).map_err(|e| e.to_string())?;
                let path = out
                    .join(format!("{}_setting{}_{}", f.label(), s, k.label()))
                    .join(trajectory_name(seed));
                let (t, err) = match run_bo(&bb, &bo) {
                    Ok(t) => (t, None),
                    Err(Error::BlackBox { message, partial }) => (*partial, Some(message)),
                    Err(e) => return Err(format!("seed {seed}: {e}")),
                };
                write_trajectory(&path, &t).map_err(|e| e.to_string())?;
                match err {
                    None => {
                        log::info!("{f} setting {s} {k} seed {seed}: final best {:.6e}", t.final_best().unwrap_or(f64::NAN));
                        Ok(t)
                    }
                    Some(m) => Err(format!("seed {seed}: {m}")),
                }
            })
            .collect()
    });

    let mut table = Vec::with_capacity(cells.len());
    for (c, &(f, s, k)) in cells.iter().enumerate() {
        let mut done = Vec::new();
        let mut error = None;
        for (&(jc, _), r) in jobs.iter().zip(&results) {
            if jc != c {
                continue;
            }
            match r {
                Ok(t) => done.push(t.clone()),
                Err(e) if error.is_none() => error = Some(e.clone()),
                Err(_) => {}
            }
        }
        let result = match error {
            Some(e) => Err(e),
            None => summarize(&done).map_err(|e| e.to_string()),
        };
        if let Err(e) = &result {
            log::error!("{f} setting {s} {k}: {e}");
        }
        table.push(BenchCell {
            function: f,
            setting: s,
            kernel: k,
            result,
        });
    }
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|cell| {
            let mut row = vec![
                cell.function.label().to_string(),
                cfg.d.to_string(),
                cell.setting.to_string(),
                cell.kernel.label().to_string(),
                acq.label().to_string(),
            ];
            match &cell.result {
                Ok(s) => row.extend([
                    s.n_runs.to_string(),
                    fmt_f(s.mean_final_best),
                    fmt_f(s.stderr),
                    "ok".to_string(),
                ]),
                Err(e) => row.extend([String::new(), String::new(), String::new(), format!("failed: {e}")]),
            }
            row
        })
        .collect();
    write_csv(
        &out.join("table2_style.csv"),
        &strings(&["function", "d", "setting", "kernel", "acq", "n_runs", "mean_final_best", "stderr", "status"]),
        &rows,
    )?;
    let n_failed = table.iter().filter(|c| c.result.is_err()).count();
    if n_failed > 0 {
        return Err(CliError::Runtime(format!("{n_failed} of {} cells failed", table.len())));
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// argument parsing

#[derive(Debug, Parser)]
#[command(name = "betabo", version, about = "Bayesian optimization with the Beta product kernel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Expected kernel-matrix spectra and log-linear decay fits.
    Spectrum(CommonArgs),
    /// Bayesian optimization of a benchmark or external objective.
    Optimize(CommonArgs),
    /// Benchmark grid over functions, settings, kernels and seeds.
    Bench(CommonArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set n_iter=20` or `--set optimize.seeds=[0,1]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Parses `args` (program name first), runs the subcommand and returns its
/// exit code. Errors are printed to stderr.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (kind, common) = match &cli.command {
        CliCommand::Spectrum(a) => (CommandKind::Spectrum, a),
        CliCommand::Optimize(a) => (CommandKind::Optimize, a),
        CliCommand::Bench(a) => (CommandKind::Bench, a),
    };
    match execute(kind, common) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("betabo: {e}");
            e.exit_code()
        }
    }
}

/// Loads the configuration and runs one subcommand.
pub fn execute(kind: CommandKind, args: &CommonArgs) -> Result<(), CliError> {
    let cfg = load_config(args.config.as_deref(), &args.sets, kind)?;
    match kind {
        CommandKind::Spectrum => cmd_spectrum(&cfg.spectrum, &args.out, args.workers).map(|_| ()),
        CommandKind::Optimize => cmd_optimize(&cfg.optimize, &args.out, args.workers).map(|_| ()),
        CommandKind::Bench => cmd_bench(&cfg.bench, &args.out, args.workers).map(|_| ()),
    }
}

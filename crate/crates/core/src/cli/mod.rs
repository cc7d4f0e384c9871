//! Command implementations behind the `bbosvr` binary.
//!
//! Exit codes: 0 success, 1 data error, 2 usage error.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bench::{
    bench_template, run_bench, BenchFunction, BenchReport, Discretized, DEFAULT_POINTS,
};
use crate::select::{BboTemplate, FeatureSelector, Retune, SelectionReport};
use crate::svr::{default_grid, grid_search, SvrConfig};
use crate::synth::{generate, SynthConfig};
use crate::traffic::{
    prepare, read_etc_file, read_rain_file, read_vd_file, PipelineConfig, PreparedData,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Data(_) => 1,
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "bbosvr",
    version,
    about = "BBO feature selection for nu-SVR travel-time prediction"
)]
pub struct Cli {
    /// Worker threads for model fitting (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic vd.csv, etc.csv, rain.csv and manifest.json.
    Generate {
        #[arg(long)]
        out: PathBuf,
        /// TOML file with generator settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the seed of the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Turn raw records into dataset.csv and provenance.json.
    Prepare {
        #[arg(long)]
        vd: PathBuf,
        #[arg(long)]
        etc: PathBuf,
        #[arg(long)]
        rain: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// TOML file with pipeline settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the feature-selection scenarios on a prepared dataset.
    Run {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Predictor counts, inclusive, e.g. `1..10` or `6`.
        #[arg(long, default_value = "1..10", value_parser = parse_range)]
        s_range: (usize, usize),
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// TOML file with optimizer and SVR settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the optimizer on a discretized test function.
    Bench {
        #[arg(long, default_value = "sphere", value_parser = parse_function)]
        function: BenchFunction,
        #[arg(long, default_value_t = 2)]
        dims: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
        #[arg(long, default_value_t = 50)]
        generations: usize,
        #[arg(long, default_value_t = 50)]
        habitats: usize,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_function(s: &str) -> Result<BenchFunction, String> {
    s.parse()
}

/// `a..b` (inclusive) or a single count.
pub fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let number = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("invalid scenario range {s:?}, expected e.g. 1..10"))
    };
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (number(a)?, number(b.trim_start_matches('='))?),
        None => {
            let n = number(s)?;
            (n, n)
        }
    };
    if lo == 0 || lo > hi {
        return Err(format!(
            "scenario range {s:?} must satisfy 1 <= start <= end"
        ));
    }
    Ok((lo, hi))
}

/// Settings of the `run` command. Unset SVR hyperparameters are chosen by
/// grid search on the training rows over all columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub habitat_count: usize,
    pub generations: usize,
    pub elitism: usize,
    /// Defaults to the predictor count of each scenario.
    pub max_species: Option<usize>,
    pub max_emigration: f64,
    pub max_immigration: f64,
    pub max_mutation: f64,
    pub train_fraction: f64,
    pub nu: Option<f64>,
    pub cost: Option<f64>,
    pub gamma: Option<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub folds: usize,
    /// Grid-search every subset instead of reusing the full-set choice.
    pub retune: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = BboTemplate::default();
        let svr = SvrConfig::default();
        Self {
            habitat_count: t.habitat_count,
            generations: t.generations,
            elitism: t.elitism,
            max_species: t.max_species,
            max_emigration: t.max_emigration,
            max_immigration: t.max_immigration,
            max_mutation: t.max_mutation,
            train_fraction: 2.0 / 3.0,
            nu: None,
            cost: None,
            gamma: None,
            tolerance: svr.tolerance,
            max_iterations: svr.max_iterations,
            folds: 3,
            retune: false,
        }
    }
}

impl RunConfig {
    pub fn template(&self) -> BboTemplate {
        BboTemplate {
            habitat_count: self.habitat_count,
            generations: self.generations,
            elitism: self.elitism,
            max_species: self.max_species,
            max_emigration: self.max_emigration,
            max_immigration: self.max_immigration,
            max_mutation: self.max_mutation,
        }
    }

    /// The fixed SVR configuration, if every hyperparameter is set.
    pub fn fixed_svr(&self) -> Option<SvrConfig> {
        Some(SvrConfig {
            nu: self.nu?,
            cost: self.cost?,
            gamma: self.gamma?,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
        })
    }

    /// Grid entries consistent with any hyperparameters the config pins.
    pub fn grid(&self) -> Vec<SvrConfig> {
        let mut grid = default_grid(self.tolerance, self.max_iterations);
        for c in &mut grid {
            c.nu = self.nu.unwrap_or(c.nu);
            c.cost = self.cost.unwrap_or(c.cost);
            c.gamma = self.gamma.unwrap_or(c.gamma);
        }
        grid.dedup();
        grid
    }
}

fn read_toml<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| data(format!("{}: {e}", dir.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

/// SHA-256 of the canonical JSON form of `value`.
pub fn digest<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("parameters serialize");
    hex::encode(Sha256::digest(json))
}

pub fn cmd_generate(out: &Path, config: Option<&Path>, seed: Option<u64>) -> Result<(), CliError> {
    let mut config: SynthConfig = read_toml(config)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let output = generate(&config).map_err(data)?;
    output.write_to_dir(out).map_err(data)?;
    log::info!(
        "wrote {} detector readings, {} transits, {} rain readings to {}",
        output.vd.len(),
        output.etc.len(),
        output.rain.len(),
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ProvenanceFile<'a> {
    version: &'a str,
    config: &'a PipelineConfig,
    #[serde(flatten)]
    provenance: &'a crate::traffic::Provenance,
    imputation_log: &'a crate::traffic::ImputationLog,
}

pub fn cmd_prepare(
    vd: &Path,
    etc: &Path,
    rain: &Path,
    out: &Path,
    config: Option<&Path>,
) -> Result<(), CliError> {
    let config: PipelineConfig = read_toml(config)?;
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let vd = read_vd_file(vd).map_err(data)?;
    let etc = read_etc_file(etc).map_err(data)?;
    let rain = read_rain_file(rain).map_err(data)?;
    let (dataset, provenance, log) = prepare(&vd, &etc, &rain, &config).map_err(data)?;
    create_dir(out)?;
    dataset
        .write_csv_file(&out.join("dataset.csv"))
        .map_err(data)?;
    let file = ProvenanceFile {
        version: VERSION,
        config: &config,
        provenance: &provenance,
        imputation_log: &log,
    };
    write_file(&out.join("provenance.json"), &to_json(&file))?;
    log::info!(
        "dataset: {} rows, {} predictor columns",
        provenance.rows,
        provenance.columns
    );
    Ok(())
}

/// Contents of `results.json`. Everything here is a function of the inputs
/// and the seed; wall-clock times go to `timings.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResults {
    pub version: String,
    pub seed: u64,
    pub params_digest: String,
    pub config: RunConfig,
    pub dataset_rows: usize,
    pub train_rows: usize,
    pub svr: SvrConfig,
    pub report: SelectionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub grid_search_ms: u128,
    pub baseline_and_scenarios_ms: u128,
    /// Per scenario, in `report.scenarios` order.
    pub scenario_ms: Vec<(usize, u128)>,
    pub model_fits: usize,
}

pub fn results_csv(report: &SelectionReport) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["num_predictors", "mape", "predictors"])
        .map_err(data)?;
    for s in &report.scenarios {
        w.write_record([
            s.siv_count.to_string(),
            format!("{:.2}", s.mape),
            s.names.join(";"),
        ])
        .map_err(data)?;
    }
    w.write_record([
        report.baseline_columns.to_string(),
        format!("{:.2}", report.baseline_mape),
        "all".to_string(),
    ])
    .map_err(data)?;
    String::from_utf8(w.into_inner().map_err(data)?).map_err(data)
}

pub fn cmd_run(
    dataset: &Path,
    out: &Path,
    range: (usize, usize),
    seed: u64,
    config: Option<&Path>,
) -> Result<RunResults, CliError> {
    let config: RunConfig = read_toml(config)?;
    let data_file = PreparedData::read_csv_file(dataset).map_err(data)?;
    if range.1 > data_file.names.len() {
        return Err(CliError::Usage(format!(
            "scenario range ends at {} but the dataset has {} predictor columns",
            range.1,
            data_file.names.len()
        )));
    }
    let template = config.template();
    template
        .params(range.0, data_file.names.len())
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let data_set = data_file.to_dataset(config.train_fraction).map_err(data)?;

    let started = Instant::now();
    let svr = match config.fixed_svr() {
        Some(svr) => svr,
        None => {
            let all = data_set.all_columns();
            let found = grid_search(
                data_set.train_features(&all).view(),
                data_set.train_target(),
                &config.grid(),
                config.folds,
            )
            .map_err(data)?;
            log::info!(
                "grid search chose C={} gamma={} nu={}",
                found.best.cost,
                found.best.gamma,
                found.best.nu
            );
            found.best
        }
    };
    svr.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let grid_search_ms = started.elapsed().as_millis();

    let mut selector = FeatureSelector::new(&data_set, svr);
    if config.retune {
        selector = selector.with_retune(Retune {
            grid: config.grid(),
            folds: config.folds,
        });
    }
    let started = Instant::now();
    let report = selector
        .run_all_scenarios(range.0..=range.1, &template, seed)
        .map_err(data)?;
    let timings = Timings {
        grid_search_ms,
        baseline_and_scenarios_ms: started.elapsed().as_millis(),
        scenario_ms: report
            .scenarios
            .iter()
            .map(|s| (s.siv_count, s.elapsed_ms))
            .collect(),
        model_fits: selector.fits(),
    };

    let results = RunResults {
        version: VERSION.into(),
        seed,
        params_digest: digest(&(&config, &svr, range)),
        config,
        dataset_rows: data_set.rows(),
        train_rows: data_set.split(),
        svr,
        report,
    };
    create_dir(out)?;
    write_file(&out.join("results.json"), &to_json(&results))?;
    write_file(&out.join("results.csv"), &results_csv(&results.report)?)?;
    write_file(&out.join("timings.json"), &to_json(&timings))?;
    Ok(results)
}

pub fn cmd_bench(
    function: BenchFunction,
    dims: usize,
    points: usize,
    habitats: usize,
    generations: usize,
    seed: u64,
) -> Result<BenchReport, CliError> {
    let grid =
        Discretized::new(function, dims, points).map_err(|e| CliError::Usage(e.to_string()))?;
    let template = BboTemplate {
        habitat_count: habitats,
        generations,
        ..bench_template()
    };
    template
        .params(dims, grid.universe_size())
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    run_bench(&grid, &template, seed).map_err(data)
}

fn init_threads(jobs: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        // A second call (tests running several commands in one process)
        // keeps the existing pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    init_threads(cli.jobs)?;
    match cli.command {
        Command::Generate { out, config, seed } => cmd_generate(&out, config.as_deref(), seed),
        Command::Prepare {
            vd,
            etc,
            rain,
            out,
            config,
        } => cmd_prepare(&vd, &etc, &rain, &out, config.as_deref()),
        Command::Run {
            dataset,
            out,
            s_range,
            seed,
            config,
        } => {
            let results = cmd_run(&dataset, &out, s_range, seed, config.as_deref())?;
            print!("{}", results_csv(&results.report)?);
            Ok(())
        }
        Command::Bench {
            function,
            dims,
            seed,
            points,
            generations,
            habitats,
            out,
        } => {
            let report = cmd_bench(function, dims, points, habitats, generations, seed)?;
            println!("generation,best");
            for (g, v) in report.history.iter().enumerate() {
                println!("{g},{v}");
            }
            println!(
                "# best point {:?}, value {}",
                report.best_point, report.best_value
            );
            if let Some(path) = out {
                write_file(&path, &to_json(&report))?;
            }
            Ok(())
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! Independent training runs, fidelity aggregation and result files.

pub mod csv;
mod fidelity;

pub use fidelity::{
    aggregate, average_fidelity, fidelity, monte_carlo_baseline, policy_fidelity, run_fidelity, FidelityTrace,
};

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{parse_maze, random_policy_fidelity, value_iteration, Maze, OracleRow, TransitionKernel};
use crate::rl::{train, Algorithm, PolicyTrace, TrainingConfig};
use crate::sampler::splitmix64;
use csv::SummaryRow;

/// Environment variable bounding the number of worker threads.
pub const WORKERS_ENV: &str = "BOLTZRL_WORKERS";
/// Runs per algorithm at desk scale.
pub const DESK_RUNS: usize = 40;
/// Runs per algorithm at full scale.
pub const FULL_RUNS: usize = 1440;
pub const DEFAULT_WINDOWS: [usize; 3] = [500, 250, 10];
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "av_summary.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedScheme {
    /// Run `l` uses `base_seed ^ splitmix64(l)`.
    PerRun,
    /// Every run uses `base_seed`.
    Shared,
}

pub fn run_seed(base_seed: u64, run: usize, scheme: SeedScheme) -> u64 {
    match scheme {
        SeedScheme::PerRun => base_seed ^ splitmix64(run as u64),
        SeedScheme::Shared => base_seed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Where the maze was read from, for the record.
    pub maze_path: Option<PathBuf>,
    pub maze: String,
    pub kernel: TransitionKernel,
    pub runs: usize,
    pub base_seed: u64,
    pub seeds: SeedScheme,
    /// `ℓ` values of the `av_ℓ` summary.
    pub windows: Vec<usize>,
    /// One configuration per algorithm, in output order.
    pub configs: Vec<TrainingConfig>,
    /// Also write every run's fidelity series.
    pub keep_runs: bool,
    pub out: PathBuf,
}

impl ExperimentSpec {
    /// Desk-scale experiment: 40 runs and shortened sampler schedules.
    pub fn desk(maze: &str, kernel: TransitionKernel, algorithms: &[Algorithm], out: impl Into<PathBuf>) -> Self {
        Self::with_configs(maze, kernel, algorithms.iter().map(|&a| TrainingConfig::desk(a)).collect(), DESK_RUNS, out)
    }

    /// Full scale: 1440 runs and full-length schedules.
    pub fn full(maze: &str, kernel: TransitionKernel, algorithms: &[Algorithm], out: impl Into<PathBuf>) -> Self {
        Self::with_configs(maze, kernel, algorithms.iter().map(|&a| TrainingConfig::full(a)).collect(), FULL_RUNS, out)
    }

    fn with_configs(maze: &str, kernel: TransitionKernel, configs: Vec<TrainingConfig>, runs: usize, out: impl Into<PathBuf>) -> Self {
        Self {
            maze_path: None,
            maze: maze.to_string(),
            kernel,
            runs,
            base_seed: 0,
            seeds: SeedScheme::PerRun,
            windows: DEFAULT_WINDOWS.to_vec(),
            configs,
            keep_runs: false,
            out: out.into(),
        }
    }

    /// Applies `f` to every configuration.
    pub fn map_configs(mut self, f: impl Fn(&mut TrainingConfig)) -> Self {
        self.configs.iter_mut().for_each(f);
        self
    }

    pub fn algorithms(&self) -> Vec<Algorithm> {
        self.configs.iter().map(|c| c.algorithm).collect()
    }

    /// Checks the spec and parses the maze.
    pub fn validate(&self) -> Result<Maze> {
        if self.runs == 0 {
            return Err(Error::Parameter("at least one run is required".into()));
        }
        if self.configs.is_empty() {
            return Err(Error::Parameter("no algorithms selected".into()));
        }
        let mut tags = self.algorithms();
        tags.sort();
        if tags.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Parameter("algorithm tags must be distinct".into()));
        }
        for c in &self.configs {
            c.validate()?;
            if let Some(&w) = self.windows.iter().find(|&&w| w > c.n_samples) {
                return Err(Error::Parameter(format!(
                    "window {w} exceeds the {} training samples of {}",
                    c.n_samples, c.algorithm
                )));
            }
        }
        parse_maze(&self.maze)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmResult {
    pub algorithm: Algorithm,
    pub csv: String,
    pub seeds: Vec<u64>,
    /// `(ℓ, av_ℓ)` pairs.
    pub averages: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub complete: bool,
    pub version: String,
    pub spec: ExperimentSpec,
    pub oracle: Vec<OracleRow>,
    pub baseline: f64,
    pub results: Vec<AlgorithmResult>,
    pub error: Option<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    fn save(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }
}

/// Thread count from [`WORKERS_ENV`], or every available core.
pub fn worker_count() -> Result<usize> {
    parse_workers(std::env::var(WORKERS_ENV).ok())
}

fn parse_workers(value: Option<String>) -> Result<usize> {
    match value {
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Parameter(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// File name of an algorithm's fidelity CSV.
pub fn csv_name(algorithm: Algorithm) -> String {
    format!("{}.csv", algorithm.tag())
}

/// Runs every algorithm of `spec` and writes the result files.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Manifest> {
    run_experiment_with(spec, train)
}

/// [`run_experiment`] with a custom training routine.
pub fn run_experiment_with<F>(spec: &ExperimentSpec, train_fn: F) -> Result<Manifest>
where
    F: Fn(&Maze, TransitionKernel, &TrainingConfig, u64) -> Result<PolicyTrace> + Sync,
{
    let maze = spec.validate()?;
    let oracle = value_iteration(&maze, &spec.kernel, 1e-12)?;
    fs::create_dir_all(&spec.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()
        .map_err(|e| Error::Parameter(e.to_string()))?;
    let mut manifest = Manifest {
        complete: false,
        version: env!("CARGO_PKG_VERSION").to_string(),
        spec: spec.clone(),
        oracle: oracle.table(&maze),
        baseline: random_policy_fidelity(&maze, &oracle),
        results: Vec::new(),
        error: None,
    };
    let mut summary = Vec::new();
    for config in &spec.configs {
        let seeds: Vec<u64> = (0..spec.runs).map(|l| run_seed(spec.base_seed, l, spec.seeds)).collect();
        let outcomes: Vec<Result<Vec<f64>>> = pool.install(|| {
            seeds
                .par_iter()
                .map(|&seed| {
                    catch_unwind(AssertUnwindSafe(|| train_fn(&maze, spec.kernel, config, seed)))
                        .map_err(|p| Error::Run(panic_message(&p)))?
                        .and_then(|t| run_fidelity(&t, &oracle))
                })
                .collect()
        });
        let runs = match outcomes.into_iter().enumerate().map(|(l, r)| r.map_err(|e| (l, e))).collect() {
            Ok(runs) => runs,
            Err((l, e)) => {
                let message = format!("{} run {l} (seed {}): {e}", config.algorithm, seeds[l]);
                manifest.error = Some(message.clone());
                manifest.save(&spec.out)?;
                return Err(Error::Run(message));
            }
        };
        let trace = aggregate(runs)?;
        let name = csv_name(config.algorithm);
        fs::write(spec.out.join(&name), csv::fidelity_csv(&trace))?;
        if spec.keep_runs {
            let runs = trace.runs.as_deref().unwrap_or_default();
            fs::write(spec.out.join(format!("{}_runs.csv", config.algorithm.tag())), csv::runs_csv(runs))?;
        }
        let averages = spec
            .windows
            .iter()
            .map(|&w| Ok((w, average_fidelity(&trace, w)?)))
            .collect::<Result<Vec<_>>>()?;
        summary.extend(averages.iter().map(|&(window, av_fid)| SummaryRow {
            algorithm: config.algorithm.tag().to_string(),
            window,
            av_fid,
        }));
        manifest.results.push(AlgorithmResult {
            algorithm: config.algorithm,
            csv: name,
            seeds,
            averages,
        });
    }
    summary.extend(spec.windows.iter().map(|&window| SummaryRow {
        algorithm: "random".into(),
        window,
        av_fid: manifest.baseline,
    }));
    fs::write(spec.out.join(SUMMARY_FILE), csv::summary_csv(&summary))?;
    manifest.complete = true;
    manifest.save(&spec.out)?;
    Ok(manifest)
}

fn panic_message(payload: &Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = payload.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_schemes() {
        assert_eq!(run_seed(7, 3, SeedScheme::Shared), 7);
        let seeds: Vec<u64> = (0..100).map(|l| run_seed(7, l, SeedScheme::PerRun)).collect();
        let mut distinct = seeds.clone();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), 100);
        // adding runs leaves earlier seeds alone
        assert_eq!(seeds[..10], (0..10).map(|l| run_seed(7, l, SeedScheme::PerRun)).collect::<Vec<_>>()[..]);
    }

    #[test]
    fn worker_counts() {
        assert_eq!(parse_workers(Some(" 3".into())).unwrap(), 3);
        assert!(parse_workers(Some("0".into())).is_err());
        assert!(parse_workers(Some("many".into())).is_err());
        assert!(parse_workers(None).unwrap() >= 1);
    }

    #[test]
    fn spec_validation() {
        let maze = "R....\n..W..\n..P..";
        let spec = ExperimentSpec::desk(maze, TransitionKernel::Clear, &[Algorithm::Rbm, Algorithm::DbmSa], "/tmp/x");
        assert_eq!(spec.runs, 40);
        spec.validate().unwrap();
        let dup = ExperimentSpec::desk(maze, TransitionKernel::Clear, &[Algorithm::Rbm, Algorithm::Rbm], "/tmp/x");
        assert!(dup.validate().is_err());
        let mut short = spec.clone().map_configs(|c| c.n_samples = 100);
        assert!(short.validate().is_err());
        short.windows = vec![100, 10];
        short.validate().unwrap();
        let mut none = spec;
        none.runs = 0;
        assert!(none.validate().is_err());
    }
}

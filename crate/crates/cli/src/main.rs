use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use boltzrl::harness::{self, monte_carlo_baseline, ExperimentSpec, Manifest};
use boltzrl::mdp::{parse_maze, random_policy_fidelity, value_iteration, Maze, TransitionKernel};
use boltzrl::rl::{Algorithm, RateRule, SampleStrategy};
use boltzrl::sampler::SamplerRng;
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;

#[derive(Parser)]
#[command(name = "boltzrl", version, about = "Free-energy reinforcement learning on maze MDPs")]
#[command(after_help = "Set BOLTZRL_WORKERS to bound the number of worker threads.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kernel {
    Clear,
    Windy,
}

impl From<Kernel> for TransitionKernel {
    fn from(k: Kernel) -> Self {
        match k {
            Kernel::Clear => TransitionKernel::Clear,
            Kernel::Windy => TransitionKernel::windy(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Sweep,
    SweepSas,
    Uniform,
}

impl From<Strategy> for SampleStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Sweep => SampleStrategy::Sweep,
            Strategy::SweepSas => SampleStrategy::SweepSas,
            Strategy::Uniform => SampleStrategy::Uniform,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Rate {
    Constant,
    Adagrad,
}

impl From<Rate> for RateRule {
    fn from(r: Rate) -> Self {
        match r {
            Rate::Constant => RateRule::Constant,
            Rate::Adagrad => RateRule::default(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Nx5,
}

#[derive(Subcommand)]
enum Command {
    /// Train every selected algorithm for a number of independent runs.
    Train {
        #[arg(long)]
        maze: PathBuf,
        #[arg(long, value_enum, default_value = "clear")]
        kernel: Kernel,
        /// Comma-separated list of rbm, dbm-sa, dbm-sqa, qbm.
        #[arg(long, value_delimiter = ',', required = true)]
        algo: Vec<Algorithm>,
        /// Defaults to 40 runs, or 1440 with --full.
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, value_enum, default_value = "sweep")]
        strategy: Strategy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Full-length sampler schedules and 1440 runs.
        #[arg(long)]
        full: bool,
        /// Total hidden units (split over two layers for layered machines).
        #[arg(long)]
        hidden: Option<usize>,
        /// Window lengths of the average-fidelity summary; longer windows
        /// than --samples are dropped.
        #[arg(long, value_delimiter = ',', default_values_t = harness::DEFAULT_WINDOWS)]
        windows: Vec<usize>,
        /// Step-size rule of the weight updates.
        #[arg(long, value_enum, default_value = "constant")]
        rate: Rate,
        /// Also write every run's fidelity series.
        #[arg(long)]
        keep_runs: bool,
    },
    /// Re-run the experiment recorded in a manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory; defaults to the one in the manifest.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal action sets from value iteration.
    Oracle {
        #[arg(long)]
        maze: PathBuf,
        #[arg(long, value_enum, default_value = "clear")]
        kernel: Kernel,
        /// Writes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fidelity of uniformly random policies.
    Baseline {
        #[arg(long)]
        maze: PathBuf,
        #[arg(long, value_enum, default_value = "clear")]
        kernel: Kernel,
        /// Also report a Monte Carlo estimate over this many policies.
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a maze of a built-in family.
    GenerateMaze {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_maze(path: &Path) -> Result<(String, Maze)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let maze = parse_maze(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok((text, maze))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_summary(manifest: &Manifest) {
    for r in &manifest.results {
        let avs: Vec<String> = r.averages.iter().map(|(w, av)| format!("av_{w}={av:.4}")).collect();
        println!("{:<8} {}", r.algorithm.tag(), avs.join(" "));
    }
    println!("{:<8} {:.4}", "random", manifest.baseline);
}

fn oracle_table(maze: &Maze, kernel: TransitionKernel) -> Result<String> {
    let oracle = value_iteration(maze, &kernel, 1e-12)?;
    let mut out = String::from("row,col,optimal_actions\n");
    for row in oracle.table(maze) {
        let names: Vec<&str> = row.actions.iter().map(|a| a.name()).collect();
        out.push_str(&format!("{},{},{}\n", row.row, row.col, names.join(" ")));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            maze,
            kernel,
            algo,
            runs,
            samples,
            strategy,
            seed,
            out,
            full,
            hidden,
            windows,
            rate,
            keep_runs,
        } => {
            let (text, _) = read_maze(&maze)?;
            let kernel = kernel.into();
            let mut spec = if full {
                ExperimentSpec::full(&text, kernel, &algo, &out)
            } else {
                ExperimentSpec::desk(&text, kernel, &algo, &out)
            };
            spec = spec.map_configs(|c| {
                c.n_samples = samples;
                c.strategy = strategy.into();
                c.rate = rate.into();
                if let Some(n) = hidden {
                    *c = c.clone().with_hidden_total(n);
                }
            });
            spec.maze_path = Some(maze);
            spec.runs = runs.unwrap_or(spec.runs);
            spec.base_seed = seed;
            spec.keep_runs = keep_runs;
            spec.windows = windows.into_iter().filter(|&w| w <= samples).collect();
            let manifest = harness::run_experiment(&spec)?;
            print_summary(&manifest);
        }
        Command::Rerun { manifest, out } => {
            let mut spec = Manifest::load(&manifest)?.spec;
            if let Some(out) = out {
                spec.out = out;
            }
            print_summary(&harness::run_experiment(&spec)?);
        }
        Command::Oracle { maze, kernel, out } => {
            let (_, maze) = read_maze(&maze)?;
            emit(&oracle_table(&maze, kernel.into())?, out.as_deref())?;
        }
        Command::Baseline {
            maze,
            kernel,
            draws,
            seed,
        } => {
            let (_, maze) = read_maze(&maze)?;
            let oracle = value_iteration(&maze, &kernel.into(), 1e-12)?;
            println!("closed_form {:.16e}", random_policy_fidelity(&maze, &oracle));
            if let Some(n) = draws {
                let (mean, se) = monte_carlo_baseline(&maze, &oracle, n, &mut SamplerRng::seed_from_u64(seed))?;
                println!("monte_carlo {mean:.16e} {se:.16e}");
            }
        }
        Command::GenerateMaze { family, n, out } => {
            let maze = match family {
                Family::Nx5 => Maze::nx5(n)?,
            };
            emit(&maze.to_text(), out.as_deref())?;
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

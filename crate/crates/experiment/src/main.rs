use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use multibeam_experiment::config::SweepParameter;
use multibeam_experiment::oracle_suite::{run_oracle_suite, Corruption};
use multibeam_experiment::output::VERSION;
use multibeam_experiment::runs::{run_directions, run_paths, run_pattern, run_sweep, RunOutput};
use multibeam_experiment::{ExperimentConfig, ExperimentError, Method};

const EXIT_USAGE: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_ORACLE: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "experiment",
    version = VERSION,
    about = "Monte Carlo study of multibeam transmit optimization",
    after_help = "Exit status: 0 success, 1 usage or configuration error, \
                  2 solver failure (outputs are still written), 3 oracle failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration; omitted keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Also write an SVG chart next to the CSV.
    #[arg(long, global = true)]
    svg: bool,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Beam patterns of each method on one channel realization.
    #[command(after_help = "Writes pattern.csv with columns angle_deg,method,gain_db.")]
    Pattern {
        /// Scanning direction in degrees.
        #[arg(long, allow_negative_numbers = true)]
        direction: Option<f64>,
        /// Comma-separated method names.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
    },
    /// Mean metrics while one constraint threshold varies.
    #[command(after_help = concat!(
        "Writes sweep.csv with columns parameter,value,",
        "method,trials,mean_normalized_rx_power,mean_waveform_mse,relaxed,infeasible,failed."
    ))]
    Sweep {
        /// Threshold to vary: cs, csp or cp.
        #[arg(long)]
        param: Option<SweepParameter>,
        /// Comma-separated values in [0, 1].
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[arg(long, allow_negative_numbers = true)]
        direction: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
    },
    /// Mean metrics at each scanning direction.
    #[command(after_help = concat!(
        "Writes directions.csv with columns direction_deg,",
        "method,trials,mean_normalized_rx_power,mean_waveform_mse,relaxed,infeasible,failed."
    ))]
    Directions {
        /// Comma-separated directions in degrees.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        directions: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
    },
    /// Mean metrics versus the number of channel paths.
    #[command(after_help = concat!(
        "Writes paths.csv with columns paths,",
        "method,trials,mean_normalized_rx_power,mean_waveform_mse,relaxed,infeasible,failed."
    ))]
    Paths {
        /// Comma-separated path counts.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<usize>>,
        #[arg(long, allow_negative_numbers = true)]
        direction: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
    },
    /// Print the effective configuration as TOML and exit.
    Config,
    /// Certify the solvers against brute-force oracles.
    #[command(after_help = "Writes oracle.csv with columns property,checks,failures,max_gap,tolerance,result,note.")]
    Oracle {
        /// Random instances per property.
        #[arg(long)]
        instances: Option<usize>,
        /// Test hook: offset added to every combiner phase.
        #[arg(long, hide = true, default_value_t = 0.0, allow_negative_numbers = true)]
        corrupt_phase: f64,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_toml(&fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    match &cli.command {
        Command::Pattern { direction, methods } => {
            if let Some(d) = direction {
                cfg.pattern.direction_deg = *d;
            }
            if let Some(m) = methods {
                cfg.pattern.methods = m.clone();
            }
        }
        Command::Sweep {
            param,
            values,
            direction,
            methods,
        } => {
            if let Some(p) = param {
                cfg.sweep.parameter = *p;
            }
            if let Some(v) = values {
                cfg.sweep.values = v.clone();
            }
            if let Some(d) = direction {
                cfg.sweep.direction_deg = *d;
            }
            if let Some(m) = methods {
                cfg.methods = m.clone();
            }
        }
        Command::Directions { directions, methods } => {
            if let Some(d) = directions {
                cfg.scan.directions_deg = d.clone();
            }
            if let Some(m) = methods {
                cfg.methods = m.clone();
            }
        }
        Command::Paths {
            values,
            direction,
            methods,
        } => {
            if let Some(v) = values {
                cfg.paths.values = v.clone();
            }
            if let Some(d) = direction {
                cfg.paths.direction_deg = *d;
            }
            if let Some(m) = methods {
                cfg.methods = m.clone();
            }
        }
        Command::Oracle { instances, .. } => {
            if let Some(n) = instances {
                cfg.oracle.instances = *n;
            }
        }
        Command::Config => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_run(out: &Path, name: &str, run: &RunOutput) -> Result<(), ExperimentError> {
    fs::create_dir_all(out)?;
    let csv = out.join(format!("{name}.csv"));
    fs::write(&csv, run.csv.render())?;
    println!("{}", csv.display());
    if let Some(svg) = &run.svg {
        let path = out.join(format!("{name}.svg"));
        fs::write(&path, svg)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn execute(cli: &Cli, cfg: &ExperimentConfig) -> Result<u8, ExperimentError> {
    let (name, run) = match &cli.command {
        Command::Config => {
            print!("{}", cfg.to_toml());
            return Ok(0);
        }
        Command::Pattern { .. } => ("pattern", run_pattern(cfg, cli.svg)?),
        Command::Sweep { .. } => ("sweep", run_sweep(cfg, cli.svg)?),
        Command::Directions { .. } => ("directions", run_directions(cfg, cli.svg)?),
        Command::Paths { .. } => ("paths", run_paths(cfg, cli.svg)?),
        Command::Oracle { corrupt_phase, .. } => {
            let report = run_oracle_suite(
                cfg,
                Corruption {
                    phase_offset: *corrupt_phase,
                },
            )?;
            let run = RunOutput {
                csv: report.to_csv(cfg),
                svg: None,
                hard_failures: 0,
            };
            write_run(&cli.out, "oracle", &run)?;
            for p in &report.properties {
                eprintln!(
                    "{} {:<26} checks {:>6}  failures {:>4}  max gap {:.3e} (tol {:.0e})",
                    if p.passed() { "PASS" } else { "FAIL" },
                    p.name,
                    p.checks,
                    p.failures,
                    p.max_gap,
                    p.tolerance
                );
            }
            return Ok(if report.passed() { 0 } else { EXIT_ORACLE });
        }
    };
    write_run(&cli.out, name, &run)?;
    if run.hard_failures > 0 {
        eprintln!("{} global solves failed; see the `failed` column", run.hard_failures);
        return Ok(EXIT_SOLVER);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n.max(1));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(EXIT_SOLVER);
        }
    };
    match pool.install(|| execute(&cli, &cfg)) {
        Ok(code) => ExitCode::from(code),
        Err(e @ (ExperimentError::Config(_) | ExperimentError::Parse(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use grwflash_cli::run::print_summary;
use grwflash_cli::{load_config, run_subcommand, CliError, Command, ExperimentConfig, Overrides};

/// Flash-sourced gravity in the GRW collapse model.
#[derive(Parser, Debug)]
#[command(name = "grwflash", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed of the random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of trajectories for ensemble and verify.
    #[arg(long = "n-traj", global = true)]
    n_traj: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, env = "GRWFLASH_OUT_DIR", default_value = "grwflash-out")]
    out_dir: PathBuf,

    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Pass threshold of verify in standard errors; relative quadrature
    /// tolerance for kernel, slope and scan.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// One stochastic trajectory: flash log and final state.
    Trajectory,
    /// Ensemble density matrix and comparison with the master equation.
    Ensemble,
    /// Ensemble against master equation; exit 1 when they disagree.
    Verify,
    /// Decoherence kernel for a list of point pairs.
    Kernel,
    /// Short-distance fit of the gravitational excess rate.
    Slope,
    /// Smeared Newtonian potential table.
    Potential,
    /// Decoherence rate components over a range of flash rates.
    Scan,
    /// Gravitational lengths of the SI presets.
    Presets,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Trajectory => Command::Trajectory,
            Cmd::Ensemble => Command::Ensemble,
            Cmd::Verify => Command::Verify,
            Cmd::Kernel => Command::Kernel,
            Cmd::Slope => Command::Slope,
            Cmd::Potential => Command::Potential,
            Cmd::Scan => Command::Scan,
            Cmd::Presets => Command::Presets,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let mut config = match &cli.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    let overrides = Overrides {
        seed: cli.seed,
        n_traj: cli.n_traj,
        tolerance: cli.tolerance,
    };
    overrides.apply(&mut config)?;
    let flags = std::env::args().skip(1).collect();
    let command = Command::from(cli.command);
    match run_subcommand(command, &config, &cli.out_dir, flags) {
        Ok(out) => {
            print_summary(&out, std::io::stdout().lock())?;
            Ok(())
        }
        Err(e) => Err(e),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("grwflash: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

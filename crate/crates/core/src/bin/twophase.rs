use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use twophase::experiment::{run_kind, write_outputs, RunKind, ScenarioConfig};
use twophase::Error;

#[derive(Parser)]
#[command(name = "twophase", version, about = "Two-phase estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSV, metadata and plots.
    Run {
        #[arg(value_enum)]
        experiment: Experiment,
        #[arg(long)]
        config: PathBuf,
        /// Overrides outputs.directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides run.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; results do not depend on this.
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Fig2,
    Fig3,
    Custom,
}

impl From<Experiment> for RunKind {
    fn from(e: Experiment) -> Self {
        match e {
            Experiment::Fig2 => RunKind::Fig2,
            Experiment::Fig3 => RunKind::Fig3,
            Experiment::Custom => RunKind::Custom,
        }
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    let Command::Run {
        experiment,
        config,
        out,
        seed,
        threads,
    } = cli.command;
    let mut cfg = ScenarioConfig::load(&config)?;
    if let Some(seed) = seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = out {
        cfg.outputs.directory = out;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;
    let kind = RunKind::from(experiment);
    let result = pool.install(|| run_kind(&cfg, kind))?;
    let written = write_outputs(&result, &cfg, &cfg.outputs.directory)?;

    let axis = result.axis.column();
    println!("{:>10} {:>12} {:>12} {:>12} {:>12} {:>9}", axis, "rmse_s", "crb_s", "rmse_d", "crb_d", "fail_rate");
    for row in &result.rows {
        println!(
            "{:>10} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>9.3}",
            row.x, row.stats.rmse_s, row.crb_s, row.stats.rmse_d, row.crb_d, row.fail_rate
        );
    }
    if let Some(f) = &result.fits {
        println!(
            "log-log slope: rmse_s {:.3} ± {:.3}, rmse_d {:.3} ± {:.3}",
            f.rmse_s.slope, f.rmse_s.slope_stderr, f.rmse_d.slope, f.rmse_d.slope_stderr
        );
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uc_harness::{
    cmd_check, cmd_compare, cmd_oracle, cmd_run, cmd_validate, resolve_out_dir, Algorithm,
    CompareArgs, RunArgs, Status,
};

/// Unit-commitment benchmark harness.
///
/// Exit codes: 0 when the reported schedule is feasible, 2 when it is not,
/// 1 on usage or data errors. The output directory defaults to $UC_OUT_DIR,
/// then ./out.
#[derive(Parser)]
#[command(name = "ucbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance with one optimizer.
    Run {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "gamom")]
        algo: Algorithm,
        /// JSON parameter file (sectioned or bare).
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Fitness-evaluation budget; lifts the generation cap.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several optimizers over seeds 1..=N at an equal budget.
    Compare {
        #[arg(long)]
        instance: PathBuf,
        /// Comma-separated list.
        #[arg(long, value_delimiter = ',', default_value = "gamom,ga,pso")]
        algos: Vec<Algorithm>,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = 50_000)]
        budget: u64,
        #[arg(long)]
        params: Option<PathBuf>,
        /// Also enumerate the instance exhaustively (at most 24 unit-hours).
        #[arg(long)]
        with_oracle: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate every commitment of a small instance.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dispatch and verify a schedule CSV.
    Check {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        /// Write cost.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report data problems in an instance file.
    Validate {
        #[arg(long)]
        instance: PathBuf,
    },
}

fn execute(cli: Cli) -> anyhow::Result<Status> {
    match cli.command {
        Command::Run {
            instance,
            algo,
            params,
            seed,
            budget,
            out,
        } => cmd_run(&RunArgs {
            instance,
            algo,
            params,
            seed,
            budget,
            out_dir: resolve_out_dir(out),
        }),
        Command::Compare {
            instance,
            algos,
            seeds,
            budget,
            params,
            with_oracle,
            out,
        } => {
            let out_dir = resolve_out_dir(out);
            let (status, cmp) = cmd_compare(&CompareArgs {
                instance,
                algos,
                seeds,
                budget,
                params,
                with_oracle,
                out_dir: out_dir.clone(),
            })?;
            println!(
                "{:<8} {:>4} {:>16} {:>16} {:>16} {:>9}",
                "algo", "runs", "best", "median", "worst", "feasible"
            );
            for row in &cmp.summary {
                println!(
                    "{:<8} {:>4} {:>16.2} {:>16.2} {:>16.2} {:>8.0}%",
                    row.algorithm,
                    row.runs,
                    row.best,
                    row.median,
                    row.worst,
                    row.feasible_rate * 100.0
                );
            }
            println!("results in {}", out_dir.display());
            Ok(status)
        }
        Command::Oracle { instance, out } => cmd_oracle(&instance, &resolve_out_dir(out)),
        Command::Check {
            instance,
            schedule,
            out,
        } => {
            let (status, result) = cmd_check(&instance, &schedule, out.as_deref())?;
            print!("{result}");
            Ok(status)
        }
        Command::Validate { instance } => {
            for line in cmd_validate(&instance)? {
                println!("{line}");
            }
            println!("{}: ok", instance.display());
            Ok(Status::Feasible)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vortalign::experiment::{cmd_diagnose, cmd_indices, cmd_simulate, RunConfig};
use vortalign::verify;

#[derive(Parser)]
#[command(name = "vortalign", version, about = "Vorticity alignment experiments on the periodic box")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver and write the ledger, checkpoints and summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Snapshot diagnostics over the checkpoints of a run directory.
    Diagnose {
        /// Run directory written by `simulate`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, default_value_t = 0.75)]
        beta: f64,
        /// Vorticity threshold Λ.
        #[arg(long)]
        lambda: f64,
    },
    /// Feasibility table of the exponent algebra.
    Indices {
        #[arg(long, value_delimiter = ',', default_values_t = [1.6, 5.0 / 3.0, 1.7, 2.0, 2.5, 3.0, 4.0, 10.0])]
        q: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75, 0.9])]
        delta: Vec<f64>,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Acceptance checks; prints one line per check and a JSON report.
    Verify {
        /// Run only these checks.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> vortalign::Result<bool> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            if let Some(s) = seed {
                cfg = cfg.with_seed(s);
            }
            let outcome = cmd_simulate(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
            Ok(outcome.summary.blow_up.is_none())
        }
        Command::Diagnose { out, q, beta, lambda } => {
            let rows = cmd_diagnose(&out, q, beta, lambda)?;
            println!("{} snapshots written to {}", rows.len(), out.join("diagnostics.csv").display());
            Ok(true)
        }
        Command::Indices { q, delta, out, json } => {
            let text = if json {
                serde_json::to_string_pretty(&vortalign::indices::feasibility_table(&q, &delta)?)? + "\n"
            } else {
                cmd_indices(&q, &delta)?
            };
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(true)
        }
        Command::Verify { only, out } => {
            let reports: Vec<_> = if only.is_empty() {
                (1..=10).filter_map(run_and_print).collect()
            } else {
                only.into_iter().filter_map(run_and_print).collect()
            };
            let report = verify::VerifyReport::from_reports(reports);
            let json = serde_json::to_string_pretty(&report)? + "\n";
            match out {
                Some(path) => std::fs::write(path, json)?,
                None => print!("{json}"),
            }
            Ok(report.all_passed)
        }
    }
}

fn run_and_print(id: u32) -> Option<verify::CriterionReport> {
    let r = verify::run_one(id);
    match &r {
        Some(r) => eprintln!("{}", r.line()),
        None => eprintln!("no check numbered {id}"),
    }
    r
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

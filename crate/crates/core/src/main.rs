use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kropina_lab::harness::{bundled, list_catalog, run_file, run_str, RunOptions, RunOutcome, BUNDLED};

#[derive(Parser)]
#[command(name = "kropina-lab", version, about = "Numerical checks for the Kropina change of a Finsler metric with an h-vector")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// List catalog metrics, h-vector generators, checks and bundled scenarios.
    ListCatalog,
    /// Run one of the bundled scenarios.
    Demo {
        #[arg(default_value = "theorem31")]
        name: String,
        #[command(flatten)]
        flags: RunFlags,
    },
}

#[derive(Args)]
struct RunFlags {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    tol_rel: Option<f64>,
    #[arg(long)]
    tol_abs: Option<f64>,
    /// Overrides every seed in the scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "KROPINA_LAB_JOBS")]
    jobs: Option<usize>,
}

impl RunFlags {
    fn options(&self) -> RunOptions {
        RunOptions { jobs: self.jobs, seed: self.seed, tol_rel: self.tol_rel, tol_abs: self.tol_abs }
    }
}

fn finish(outcome: RunOutcome, report: Option<&Path>) -> ExitCode {
    let r = &outcome.report;
    let json = r.to_json();
    match report {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &json) {
                eprintln!("error: cannot write report to {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{json}"),
    }
    let s = &r.summary;
    if let Some(e) = &r.error {
        eprintln!("error: {e}");
    } else {
        eprintln!(
            "{}: {} records, {} passed, {} failed over {} points ({} samples rejected) in {:.2}s",
            r.scenario.as_deref().unwrap_or("scenario"),
            s.records,
            s.passed,
            s.failed,
            s.points,
            s.rejected_samples,
            s.wall_time_s
        );
        for rec in r.records.iter().filter(|r| !r.pass) {
            eprintln!(
                "  FAIL {} metric {} point {}: {} = {:e} (threshold {:?}){}",
                rec.check,
                rec.metric,
                rec.point,
                rec.residual,
                rec.value,
                rec.threshold,
                rec.note.as_deref().map(|n| format!(" [{n}]")).unwrap_or_default()
            );
        }
    }
    ExitCode::from(outcome.status as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, flags } => finish(run_file(&scenario, &flags.options()), flags.report.as_deref()),
        Command::ListCatalog => {
            print!("{}", list_catalog());
            ExitCode::SUCCESS
        }
        Command::Demo { name, flags } => match bundled(&name) {
            Some(src) => finish(run_str(src, &flags.options()), flags.report.as_deref()),
            None => {
                let names: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).collect();
                eprintln!("error: no bundled scenario '{name}' (available: {})", names.join(", "));
                ExitCode::from(2)
            }
        },
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use metastable::harness::{self, export, Overrides, ReportFile};
use metastable::Error;

/// Detailed-balance and entropy-identity experiments.
#[derive(Debug, Parser)]
#[command(name = "metastable", version)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Replace the seed of every config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Multiply every pass/fail tolerance.
    #[arg(long, global = true)]
    tolerance_scale: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment file (TOML, or a JSON report to re-run).
    Run { file: PathBuf },
    /// Run a bundled suite: classical-identities, quantum-identities, bounds, replicator or all.
    Suite { name: String },
    /// Write CSV from a report: trajectory, histogram, population or bound-slack.
    Export { report: PathBuf, what: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                _ => 1,
            })
        }
    }
}

fn execute(cli: &Cli) -> metastable::Result<u8> {
    let overrides = Overrides { seed: cli.seed, tolerance_scale: cli.tolerance_scale };
    match &cli.command {
        Command::Run { file } => {
            let cfg = overrides.apply(harness::load_config(file)?)?;
            let report = harness::run_config(&cfg)?;
            let dir = harness::output_dir(cli.out.as_deref(), Some(&cfg));
            let path = dir.join(format!("{}.json", report.name));
            harness::write_json(&path, &report)?;
            for line in harness::summary_lines(&report) {
                println!("{line}");
            }
            println!("{:?} in {:.1}s; report: {}", report.verdict, report.wall_time_s, path.display());
            Ok(harness::exit_code(report.verdict) as u8)
        }
        Command::Suite { name } => {
            let report = harness::run_suite(name, &overrides)?;
            let dir = harness::output_dir(cli.out.as_deref(), None);
            let path = dir.join(format!("suite-{name}.json"));
            harness::write_json(&path, &report)?;
            for run in &report.runs {
                for line in harness::summary_lines(run) {
                    println!("{line}");
                }
            }
            println!("suite {name}: {:?} in {:.1}s; report: {}", report.verdict, report.wall_time_s, path.display());
            Ok(harness::exit_code(report.verdict) as u8)
        }
        Command::Export { report, what } => {
            let file = ReportFile::load(report).map_err(|e| Error::Config(format!("{}: {e}", report.display())))?;
            let dir = cli.out.clone().unwrap_or_else(|| report.parent().map(Path::to_path_buf).unwrap_or_default());
            for path in export::export(&file, what, &dir)? {
                println!("{}", path.display());
            }
            Ok(0)
        }
    }
}

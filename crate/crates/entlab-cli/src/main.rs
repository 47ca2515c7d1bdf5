use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use entlab_cli::manifest::Outputs;
use entlab_cli::{run, Command, RunManifest, EXIT_CHECK_FAILED, EXIT_USAGE, THREADS_ENV};

#[derive(Parser)]
#[command(name = "entlab", version, about = "Discretized entropy and Frostman measure laboratory")]
struct Cli {
    #[command(subcommand)]
    top: Top,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the CSV table (verify, covering) here.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Also write the manifest of this run.
    #[arg(long, global = true)]
    write_manifest: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Top {
    #[command(flatten)]
    Command(Command),
    /// Re-execute a manifest.
    Run { manifest: PathBuf },
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_USAGE as u8);
    }
    let manifest = match cli.top {
        Top::Command(command) => RunManifest::new(command, Outputs { json: cli.out, csv: cli.csv }),
        Top::Run { manifest } => match RunManifest::load(&manifest) {
            Ok(m) => m,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_USAGE as u8);
            }
        },
    };
    if let Some(path) = &cli.write_manifest {
        if let Err(e) = std::fs::write(path, manifest.to_json()) {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(EXIT_USAGE as u8);
        }
    }
    match run(&manifest) {
        Ok(outcome) => {
            for line in &outcome.log {
                eprintln!("{line}");
            }
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pulrec_cli::{execute, Command};

/// Positive-unlabeled document filtering experiments.
#[derive(Parser)]
#[command(name = "pulrec", version)]
struct Cli {
    /// Experiment config (`key = value` lines).
    #[arg(short, long, global = true, default_value = "pulrec.conf")]
    config: PathBuf,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the synthetic corpus described by the `synth.*` keys.
    Synth,
    /// Write the repeated-holdout fold manifests for every cohort.
    Split,
    /// Run one approach on one fold and write per-MP predictions and models.
    Run,
    /// Run every approach on every cohort and fold; write the report CSV.
    Sweep,
    /// Paired t-tests between two approaches (default: the config's `compare` pairs).
    Compare {
        #[arg(requires = "b")]
        a: Option<String>,
        b: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Synth => Command::Synth,
        Cmd::Split => Command::Split,
        Cmd::Run => Command::Run,
        Cmd::Sweep => Command::Sweep,
        Cmd::Compare { a, b } => Command::Compare(a.zip(b)),
    };
    match execute(&cli.config, &command) {
        Ok(outcome) => {
            for line in &outcome.log {
                eprintln!("{line}");
            }
            for path in &outcome.written {
                eprintln!("wrote {}", path.display());
            }
            if outcome.fallback {
                eprintln!("warning: some MPs fell back to all-unlabeled negatives");
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}

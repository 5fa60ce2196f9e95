use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use phasespace::config::parse_config;
use phasespace::oracles::{find, ORACLES};
use phasespace::runner::{prepare, run_with_manifest};
use phasespace::{RunConfig, RunError, VERSION};

/// Classical wave functions on phase space: runs, validation and oracles.
#[derive(Parser)]
#[command(name = "phasespace", version = VERSION)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config and write its artifacts.
    Run { config: PathBuf },
    /// Parse a config and build its initial state without evolving.
    Validate { config: PathBuf },
    /// Run a named reference oracle and print its table; `list` shows names.
    Oracle { name: String },
    /// Print the tool version.
    Version,
}

fn load(path: &Path) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(parse_config(&text, base)?)
}

fn execute(command: Command) -> Result<(), RunError> {
    match command {
        Command::Run { config } => {
            let cfg = load(&config)?;
            let summary = run_with_manifest(&cfg, VERSION)?;
            println!("{} samples written to {}", summary.samples, cfg.output.directory.display());
            for f in summary.files {
                println!("  {}", f.display());
            }
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            prepare(&cfg)?;
            print!("{}", cfg.resolved());
        }
        Command::Oracle { name } => {
            if name == "list" {
                for o in ORACLES {
                    println!("{:<24} {}", o.name, o.about);
                }
                return Ok(());
            }
            let oracle = find(&name).ok_or_else(|| {
                RunError::Config(phasespace::ConfigError { line: None, message: format!("unknown oracle `{name}` (try `oracle list`)") })
            })?;
            println!("# {}: {}", oracle.name, oracle.about);
            print!("{}", (oracle.run)()?.to_text());
        }
        Command::Version => println!("phasespace {VERSION}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

use std::process::ExitCode;

use clap::Parser;
use onebit_cli::{configure_workers, execute, resolve, write_outcome, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, overrides) = cli.command.split();
    let result = configure_workers()
        .and_then(|_| resolve(command, overrides))
        .and_then(|config| {
            let outcome = execute(&config)?;
            write_outcome(&config, &outcome)?;
            Ok(outcome)
        });
    match result {
        Ok(outcome) if outcome.failures.is_empty() => ExitCode::SUCCESS,
        Ok(outcome) => {
            for line in &outcome.failures {
                eprintln!("FAIL command={} {line}", command.name());
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

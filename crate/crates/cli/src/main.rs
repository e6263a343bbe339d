mod args;
mod commands;
mod config;
mod error;
mod output;

use clap::Parser;

use crate::args::Cli;
use crate::error::CliError;

fn real_main() -> Result<(), CliError> {
    let argv = config::splice(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version print and exit 0; everything else is a usage error
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(jobs) = cli.command.common().jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    commands::run(&cli.command)
}

fn main() {
    if let Err(e) = real_main() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}

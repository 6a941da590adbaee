mod commands;
mod config;
mod error;
mod output;

use clap::Parser;

use config::{resolve, Cli};
use error::CliError;

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli.command.name(), cli.command.flags())?;
    match cfg.command.as_str() {
        "solve" => commands::solve(&cfg),
        "invariants" => commands::invariants(&cfg),
        "legendre" => commands::legendre(&cfg),
        "transform" => commands::transform(&cfg),
        "verify" => commands::verify(&cfg),
        "perturb" => commands::perturb(&cfg),
        other => Err(CliError::Usage(format!("unknown command {other}"))),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

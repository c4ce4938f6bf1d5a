use std::process::ExitCode;

use clap::Parser;
use rsack::cli::{Cli, Command};
use rsack::commands;

fn run(cli: Cli) -> rsack::Result<()> {
    let written = match &cli.command {
        Command::Simulate(a) => commands::simulate(a)?,
        Command::Estimate(a) => commands::estimate(a)?,
        Command::Rectify(a) => commands::rectify(a)?,
        Command::Sweep(a) => commands::sweep(a)?,
        Command::Bench(a) => {
            print!("{}", commands::format_bench(&commands::bench(a)?));
            Vec::new()
        }
        Command::ConvertLsd(a) => commands::convert_lsd(a)?,
        Command::Manual(a) => commands::manual(a)?,
    };
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

mod commands;
mod config;

use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{CommandKind, RunArgs};

/// Riemannian online and min-max optimization experiments.
#[derive(Parser, Debug)]
#[command(name = "riemopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Robust Karcher-mean benchmark solved by RIODA with fixed inner steps.
    Karcher(RunArgs),
    /// Optimistic online learning on a drifting stream of distance losses.
    Online(RunArgs),
    /// RIODA on a test saddle with a known solution.
    Minmax(RunArgs),
    /// Randomized geometry invariant suite.
    Geomtest(RunArgs),
    /// Run the command named by `command` in the config file.
    Run(RunArgs),
    /// Print the resolved configuration in config-file form.
    EmitConfig {
        #[arg(value_enum)]
        command: CommandKind,
        #[command(flatten)]
        args: RunArgs,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let (args, command) = match &cli.command {
        Sub::Karcher(a) => (a, Some(CommandKind::Karcher)),
        Sub::Online(a) => (a, Some(CommandKind::Online)),
        Sub::Minmax(a) => (a, Some(CommandKind::Minmax)),
        Sub::Geomtest(a) => (a, Some(CommandKind::Geomtest)),
        Sub::Run(a) => (a, None),
        Sub::EmitConfig { command, args } => {
            print!("{}", args.resolve(Some(*command))?.emit());
            return Ok(());
        }
    };
    let cfg = args.resolve(command)?;
    println!("{}", commands::run(&cfg)?);
    Ok(())
}

mod args;
mod commands;
mod report;

use std::fs;
use std::process::ExitCode;

use chansim::Error;
use clap::Parser;

use args::{Cli, Command};
use commands::{SweepOpts, VerifyOpts};

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input { .. }
        | Error::Parameter(_)
        | Error::Dimension(_)
        | Error::InvalidState(_)
        | Error::NotTracePreserving { .. }
        | Error::InvalidProtocol(_) => 2,
        Error::Solver(_) | Error::Domain { .. } | Error::Evaluation(_) => 3,
        Error::Resource(_) => 4,
    }
}

fn run(cli: &Cli) -> chansim::Result<(report::Report, bool)> {
    let seed = cli.seed;
    match &cli.command {
        Command::Bounds { channel, eps, delta, n, solver } => {
            commands::bounds(channel, eps, delta, n, solver, seed).map(|r| (r, true))
        }
        Command::Capacity { channel, alpha, solver } => {
            commands::capacity(channel, alpha, solver, seed).map(|r| (r, true))
        }
        Command::Verify { channel, trials, hull, aep_copies, eps, solver } => {
            let o = VerifyOpts {
                trials: *trials,
                hull: *hull,
                aep_copies: *aep_copies,
                eps: *eps,
            };
            commands::verify(channel, &o, solver, seed)
        }
        Command::Sweep { channel, eps, delta, n, alpha, solver } => {
            let o = SweepOpts { eps, delta, n, alpha };
            commands::sweep_cmd(channel, &o, solver, seed).map(|r| (r, true))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn };
    env_logger::Builder::new().filter_level(level).init();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: cannot start {j} workers: {e}");
            return ExitCode::from(4);
        }
    }
    let (rep, ok) = match run(&cli) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let text = rep.render(&cli);
    match &cli.output {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

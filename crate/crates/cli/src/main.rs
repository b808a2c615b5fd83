use std::io::{self, Write};
use std::net::SocketAddr;
use std::process::ExitCode;

use clap::Parser;
use fixplan::commands::{build_store, run, Cli, Command};
use fixplan::{exit, server, CliError};

fn serve(args: &fixplan::commands::ServeArgs) -> Result<u8, CliError> {
    let store = build_store(args, &mut io::stderr())?;
    let addr: SocketAddr = args
        .bind
        .parse()
        .map_err(|e| CliError::validation(format!("bad bind address `{}`: {e}", args.bind)))?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(server::serve(store, addr))?;
    Ok(exit::OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Serve(args) => serve(args),
        _ => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            let r = run(cli, &mut out, &mut io::stderr());
            let _ = out.flush();
            r
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

mod args;
mod commands;
mod config;
mod error;

use args::Cli;
use clap::Parser;
use error::CliError;
use std::io::Write;
use std::process::ExitCode;

fn init_logging(quiet: bool) {
    let level = if quiet { log::LevelFilter::Error } else { log::LevelFilter::Info };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("ICTCI_LOG")
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot set thread count: {e}")))?;
    }
    let out = commands::run(&cli.command)?;
    let text = commands::render(&out, cli.format)?;
    match &cli.output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let raw: Vec<_> = std::env::args_os().collect();
    let quiet_flag = raw.iter().any(|a| a == "--quiet" || a == "-q");
    let args = match config::merge_config(raw) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            e.print().ok();
            return ExitCode::from(code as u8);
        }
    };
    init_logging(cli.quiet || quiet_flag);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{payload}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

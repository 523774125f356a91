mod args;
mod cache;
mod commands;
mod render;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::{Cli, Command};
use cache::FileCache;
use commands::Ctx;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] cosm_core::Error),
    /// The report is already on stdout.
    #[error("{0} oracle mismatches")]
    Mismatch(usize),
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let ctx = Ctx { cache: FileCache::from_env(cli.no_cache) };
    match &cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Simplicity(a) => commands::simplicity(&ctx, a),
        Command::Multiset(a) => commands::multiset(a),
        Command::Bundle(a) => commands::bundle(a),
        Command::Pattern(a) => commands::pattern(&ctx, a),
        Command::Hierarchy(a) => commands::hierarchy(&ctx, a),
        Command::Metrics(a) => commands::metrics(&ctx, a),
        Command::Coherence(a) => commands::coherence(&ctx, a),
        Command::OracleCheck(a) => {
            let out = commands::oracle_check(&ctx, a)?;
            print!("{}", out.report);
            if out.mismatches > 0 {
                return Err(CliError::Mismatch(out.mismatches));
            }
            Ok(String::new())
        }
        Command::Generate(a) => commands::generate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build();
    let result = match pool {
        Ok(pool) => pool.install(|| run(&cli)),
        Err(e) => Err(CliError::Usage(e.to_string())),
    };
    match result {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(err) => {
            let (code, path, exit) = match &err {
                CliError::Usage(_) => ("usage", String::new(), 2),
                CliError::Domain(e) => (e.code(), e.path().to_string(), 1),
                CliError::Mismatch(_) => ("oracle-mismatch", String::new(), 1),
            };
            eprintln!("{}", json!({"code": code, "message": err.to_string(), "path": path}));
            ExitCode::from(exit)
        }
    }
}

mod args;
mod commands;
mod config;
mod output;

use clap::Parser;

use args::{Cli, Command};
use output::{to_json, Failure, EXIT_OK, EXIT_PARAM};

fn init_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("GRAVFACT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Lib(gravfact::Error::Argument(format!("GRAVFACT_THREADS must be a positive integer, got '{v}'"))))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Io(format!("cannot start worker pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<serde_json::Value, Failure> {
    init_threads()?;
    match cli.command {
        Command::Factorize(a) => commands::factorize_cmd(&a),
        Command::Verify(a) => commands::verify_cmd(&a),
        Command::Ergosurface(a) => commands::ergosurface_cmd(&a),
        Command::Generate(a) => commands::generate_cmd(&a),
        Command::Catalog => commands::catalog_cmd(),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARAM } else { EXIT_OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(report) => print!("{}", to_json(&report)),
        Err(f) => {
            eprintln!("error: {}", f.message());
            std::process::exit(f.exit_code());
        }
    }
}

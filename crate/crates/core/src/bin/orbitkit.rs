use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use orbitkit::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut buffer = Vec::new();
    let result = run(&cli, &mut buffer);

    let written = match &cli.out {
        Some(path) => fs::write(path, &buffer),
        None => io::stdout().lock().write_all(&buffer),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(1);
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

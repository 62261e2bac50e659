use std::fs::File;
use std::io::{self, BufWriter};
use std::process::ExitCode;

use clap::Parser;
use keydist_cli::{execute, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.output {
        Some(path) => File::create(path)
            .map_err(|e| CliError::Io {
                path: path.display().to_string(),
                source: e,
            })
            .and_then(|f| execute(&cli, BufWriter::new(f))),
        None => execute(&cli, io::stdout().lock()),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

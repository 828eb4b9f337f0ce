use std::process::ExitCode;

use clap::Parser;
use polariton_cmt_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("polcmt {}: {e}", cli.command.name());
            e.into()
        }
    }
}

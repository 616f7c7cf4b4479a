use std::process::ExitCode;

use clap::Parser;

use deferral_cli::{configure_workers, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match configure_workers().and_then(|()| run(&cli, &mut stdout)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("deferral: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::io;
use std::process::ExitCode;

use clap::Parser;
use runjob_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = execute(cli, &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code as u8)
}

use std::io;
use std::process::ExitCode;

use ejm_teleport::tooling::cli;

fn main() -> ExitCode {
    let code = cli::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code as u8)
}

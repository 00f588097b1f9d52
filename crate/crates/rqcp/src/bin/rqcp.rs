//! Thin wrapper: parse argv, dispatch through [`rqcp::cli::run_command`],
//! propagate its exit code.

use std::io::{stderr, stdout};

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let code = rqcp::cli::run_command(&argv, &mut stdout(), &mut stderr());
    std::process::exit(code);
}

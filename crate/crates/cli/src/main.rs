//! `dcf` binary.

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = match dcf_cli::Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(dcf_cli::main_with(&args))
}

use std::process::ExitCode;

use clap::Parser;

use recursim_cli::{run, Args};

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&args) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("recursim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

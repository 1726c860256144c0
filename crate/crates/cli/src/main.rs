use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    match aqc_cli::Cli::try_parse() {
        Ok(cli) => aqc_cli::main_with(cli),
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            if usage {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}

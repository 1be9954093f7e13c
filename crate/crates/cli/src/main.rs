use std::process::ExitCode;

use clap::error::ErrorKind;

fn main() -> ExitCode {
    let inv = match plateau_cli::parse_args(std::env::args_os()) {
        Ok(inv) => inv,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match plateau_cli::run(&inv) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

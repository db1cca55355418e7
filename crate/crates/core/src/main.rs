use std::io::Write;
use std::process::ExitCode;

use qsigker_core::cli::{error_report, exit_code, run_from};

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run_from(std::env::args_os(), &mut lock) {
        Err(usage) => {
            let _ = usage.print();
            ExitCode::from(if usage.use_stderr() { 2 } else { 0 })
        }
        Ok(Err(e)) => {
            let _ = lock.flush();
            eprintln!("{}", error_report(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
        Ok(Ok(())) => {
            let _ = lock.flush();
            ExitCode::SUCCESS
        }
    }
}

use std::io::Write;
use std::process::ExitCode;

use adl_core::cli::run_from;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run_from(std::env::args_os()) {
        Ok(report) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(report.as_bytes()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("adl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    match toda_cli::run_args(std::env::args_os()) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(outcome.stdout.as_bytes());
            let _ = stdout.flush();
            if let Some(d) = outcome.diagnostic {
                eprintln!("{d}");
            }
            ExitCode::from(outcome.exit.code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit.code() as u8)
        }
    }
}

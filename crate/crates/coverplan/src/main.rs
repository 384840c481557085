use std::process::ExitCode;

use clap::Parser;
use coverplan::cli::{execute, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage errors are input errors; exit code 2 is kept for geometry the
    // planner does not support.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let env_out = std::env::var_os("COVERPLAN_OUT")
        .filter(|v| !v.is_empty())
        .map(Into::into);
    match execute(&cli, env_out) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

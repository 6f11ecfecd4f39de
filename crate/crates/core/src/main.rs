use std::process::ExitCode;

use cavity_core::cli::{resolve_args, run, RunArgs};
use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = RunArgs::parse();
    let result = resolve_args(&args).and_then(|spec| {
        let report = run(&spec)?;
        log::info!("wrote {} rows to {}", report.rows, spec.out.display());
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

mod cli;
mod commands;
mod report;

use std::process::ExitCode;

use crate::cli::parse_config;
use crate::report::{canonical_json, emit};

/// Caps the global rayon pool when ORTHOCUSP_THREADS is set.
fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("ORTHOCUSP_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n >= 1).ok_or_else(|| format!("ORTHOCUSP_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cfg = match parse_config(std::env::args_os()) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Err(m) = configure_threads() {
        eprintln!("error: {m}");
        return ExitCode::from(2);
    }
    let report = commands::run_command(&cfg);
    let text = canonical_json(&report.to_value());
    if let Err(e) = emit(&text, cfg.out.as_deref()) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(1);
    }
    if report.error.is_some() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

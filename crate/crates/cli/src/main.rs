//! `dirca` — batch experiment runner for the directional CA laboratory.
//!
//! Subcommands: `entropy`, `mixing`, `ergodic`, `binom`, `selftest`.
//! Exit codes: 0 success, 1 config error, 2 budget exceeded,
//! 3 invariant violation, 4 I/O failure.

mod config;
mod report;
mod run;

use std::process::ExitCode;
use std::time::Instant;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let started = Instant::now();

    let plan = match config::parse_plan(&args) {
        Ok(plan) => plan,
        Err(e) => {
            eprintln!("dirca: {e}");
            return ExitCode::from(1);
        }
    };

    let report = match run::run(&plan) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("dirca: {}", e.message());
            return ExitCode::from(e.exit_code() as u8);
        }
    };

    let rendered = report.render(plan.format);
    if let Err(e) = report::write_output(&plan.out, &rendered) {
        eprintln!("dirca: cannot write {:?}: {e}", plan.out);
        return ExitCode::from(4);
    }

    eprintln!(
        "dirca {}: {} records, {} ms",
        plan.subcommand.name(),
        report.records.len(),
        started.elapsed().as_millis()
    );
    ExitCode::SUCCESS
}

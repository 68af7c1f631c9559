use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vncat::report::{run, EmitBases, RunOptions};
use vncat::scenario::load;

/// Run a scenario file against the commutant, crossed-product and causal-net engines.
#[derive(Debug, Parser)]
#[command(name = "vncat", version)]
struct Cli {
    /// Scenario file (JSON).
    #[arg(long)]
    input: PathBuf,

    /// Report destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Nullspace tolerance, overriding the scenario's `tol`.
    #[arg(long)]
    tol: Option<f64>,

    /// How much of each hom-space to print: none, dims or full.
    #[arg(long, default_value_t = EmitBases::Dims)]
    emit_bases: EmitBases,

    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,

    /// Record wall time per command.
    #[arg(long)]
    timings: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    if let Some(t) = cli.tol {
        if !(t.is_finite() && t > 0.0) {
            eprintln!("error: --tol must be a positive number");
            return ExitCode::from(2);
        }
    }
    let src = match fs::read_to_string(&cli.input) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.input.display());
            return ExitCode::from(2);
        }
    };
    let loaded = match load(&src) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.input.display());
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions { tol: cli.tol, emit_bases: cli.emit_bases, timings: cli.timings };
    let report = match run(&loaded, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.input.display());
            return ExitCode::from(2);
        }
    };
    let text = report.to_json();
    let written = match &cli.output {
        Some(p) => fs::write(p, &text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: writing report: {e}");
        return ExitCode::from(2);
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        for r in report.results.iter().filter(|r| !r.passed) {
            for f in &r.failures {
                eprintln!("{} failed: {f}", r.command.name());
            }
        }
        ExitCode::from(1)
    }
}

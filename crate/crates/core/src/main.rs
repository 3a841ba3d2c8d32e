use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use graphsum::cli::{run, Args, RunManifest};

fn main() -> ExitCode {
    let manifest = RunManifest::from(Args::parse());
    let outcome = run(&manifest)
        .with_context(|| format!("summarizing {}", manifest.input_path.display()));
    match outcome {
        Ok(outcome) => {
            print!("{}", outcome.report_text);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

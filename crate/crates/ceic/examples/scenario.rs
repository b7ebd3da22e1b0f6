//! Runs a scenario file and writes its artifacts, like `ceic run`.
//!
//! cargo run --example scenario -- scenarios/triple_ceic.cfg out/example

use std::path::PathBuf;

use ceic::runner::{execute, write_artifacts, RunOptions};
use ceic::scenario::Scenario;

fn main() -> ceic::Result<()> {
    let mut args = std::env::args().skip(1);
    let file = PathBuf::from(args.next().unwrap_or_else(|| "scenarios/triple_ceic.cfg".into()));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/example".into()));

    let scn = Scenario::load(&file)?;
    let report = execute(&scn, "example", &RunOptions::default())?;
    write_artifacts(&report, &out)?;
    println!("{} -> {}", report.log.outcome.describe(), out.display());
    println!("{}", report.conditions.to_text());
    Ok(())
}

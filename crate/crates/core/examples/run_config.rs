//! Run any experiment file and print its report.
//!
//! `cargo run --release --example run_config -- crates/core/examples/configs/smoke.cfg`

use dpscm::harness::experiment::report_text;
use dpscm::harness::{run_experiment, write_outputs, ExperimentSpec};

fn main() -> dpscm::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/smoke.cfg").into());
    let spec = ExperimentSpec::parse(&std::fs::read_to_string(&path)?)?;
    let report = run_experiment(&spec)?;
    write_outputs(&spec, &report, &spec.output, false)?;
    print!("{}", report_text(&spec, &report));
    Ok(())
}

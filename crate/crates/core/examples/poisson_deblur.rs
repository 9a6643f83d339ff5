//! Poisson-noise deblurring: the weighted-norm DPS-CM variant against the
//! unconditional sampler on identical seeds.

use dpscm::harness::{run_experiment, ExperimentSpec};

const SPEC: &str = include_str!("configs/poisson_deblur.cfg");

fn main() -> dpscm::Result<()> {
    let report = run_experiment(&ExperimentSpec::parse(SPEC)?)?;
    for s in &report.summary {
        println!("{:<14} psnr {:.3} ± {:.3}  failures {}", s.label, s.psnr.0, s.psnr.1, s.failures);
    }
    Ok(())
}

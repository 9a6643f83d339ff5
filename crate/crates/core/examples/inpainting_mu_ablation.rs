//! Sweep the crafted-measurement weight mu on box inpainting.

use dpscm::harness::{run_experiment, ExperimentSpec};

const SPEC: &str = include_str!("configs/inpainting_mu.cfg");

fn main() -> dpscm::Result<()> {
    let report = run_experiment(&ExperimentSpec::parse(SPEC)?)?;
    println!("{:<8} {:>8} {:>8}", "label", "psnr", "ssim");
    for s in &report.summary {
        println!("{:<8} {:>8.3} {:>8.4}", s.label, s.psnr.0, s.ssim.0);
    }
    Ok(())
}

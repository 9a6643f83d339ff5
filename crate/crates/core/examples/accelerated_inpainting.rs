//! Random inpainting with and without stopping the crafted trajectory at
//! t = 0.4 T. Compares final quality and measurement-score evaluations.

use dpscm::harness::{run_experiment, ExperimentSpec};

const SPEC: &str = include_str!("configs/accelerated_inpainting.cfg");

fn main() -> dpscm::Result<()> {
    let report = run_experiment(&ExperimentSpec::parse(SPEC)?)?;
    let full = report.summary_for("full").expect("full run");
    let fast = report.summary_for("accelerated").expect("accelerated run");
    for s in [full, fast] {
        println!("{:<12} psnr {:.3}  ssim {:.4}  y-score evals {:.0}", s.label, s.psnr.0, s.ssim.0, s.y_score_evals);
    }
    println!("y-score evaluations saved: {:.1}%", 100.0 * (1.0 - fast.y_score_evals / full.y_score_evals));
    Ok(())
}

//! Frequency, epsilon-error and reconstruction trends for DPS, DPS_yt and
//! DPS-CM on 32x32 Gaussian deblurring with an empirical prior.
//!
//! Writes all curves under `out/deblur_trend`.

use dpscm::harness::{run_experiment, write_outputs, ExperimentSpec};

const SPEC: &str = include_str!("configs/deblur_trend.cfg");

fn main() -> dpscm::Result<()> {
    let spec = ExperimentSpec::parse(SPEC)?;
    let report = run_experiment(&spec)?;
    write_outputs(&spec, &report, &spec.output, true)?;
    let steps = spec.steps;
    let early = (steps * 6 / 10, steps);
    let late = (1, steps * 3 / 10);
    for label in ["dps", "dps_yt", "dps_cm"] {
        let c = report.curve(label).expect("method ran");
        let s = report.summary_for(label).expect("method ran");
        println!(
            "{label:<7} final mse {:.5}  freq ratio t>=0.9T {:.3} t<=0.1T {:.3}",
            s.mse.0,
            c.window_mean("freq_ratio", steps * 9 / 10, steps).unwrap_or(f64::NAN),
            c.window_mean("freq_ratio", 1, steps / 10).unwrap_or(f64::NAN)
        );
    }
    for num in ["dps_yt", "dps_cm"] {
        let r = report.ratio(num, "dps").expect("ratio computed");
        println!(
            "eps error {num}/dps: early {:.3}  late {:.3}",
            r.window_mean("eps_error", early.0, early.1).unwrap_or(f64::NAN),
            r.window_mean("eps_error", late.0, late.1).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

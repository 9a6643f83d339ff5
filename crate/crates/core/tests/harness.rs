//! End-to-end checks of the experiment runner on a tiny problem.

use std::fs;

use dpscm::harness::experiment::summary_csv;
use dpscm::harness::{compare_curves, run_experiment, write_outputs, ExperimentSpec};
use dpscm::Error;

fn tiny(methods: &str) -> String {
    format!(
        "[experiment]
name = tiny
side = 16
task = gaussian_blur
kernel_size = 5
blur_sigma = 1.0
noise_sigma = 0.05
prior = synthetic:12
test_images = synthetic:500..502
seeds = 0..2
steps = 60
beta_start = 0.001
beta_end = 0.2
diag_stride = 6
{methods}"
    )
}

#[test]
fn mu_zero_rows_match_dps() {
    let spec = ExperimentSpec::parse(&tiny(
        "[method.dps]\nzeta = 0.5\n[method.cm0]\nmethod = dps_cm\nzeta = 0.5\nomega = 3.0\nmu = 0.0\n",
    ))
    .unwrap();
    let report = run_experiment(&spec).unwrap();
    let (a, b) = (report.summary_for("dps").unwrap(), report.summary_for("cm0").unwrap());
    assert_eq!((a.psnr, a.ssim, a.mse), (b.psnr, b.ssim, b.mse));
    assert_eq!(a.runs, 4);
    assert!(b.y_score_evals > 0.0);
}

#[test]
fn zero_methods_is_a_config_error() {
    assert!(matches!(ExperimentSpec::parse(&tiny("")), Err(Error::InvalidConfig(_))));
}

#[test]
fn large_image_step_sizes_are_echoed_into_every_record() {
    let spec =
        ExperimentSpec::parse(&tiny("[method.cm]\nmethod = dps_cm\nzeta = 1.8\nomega = 13.0\nmu = 0.5\n")).unwrap();
    let report = run_experiment(&spec).unwrap();
    let records = report.records("cm");
    assert_eq!(records.len(), 4);
    for rec in records {
        assert_eq!(rec.config_value("zeta"), Some("1.8"));
        assert_eq!(rec.config_value("omega"), Some("13"));
        assert_eq!(rec.config_value("mu"), Some("0.5"));
        assert_eq!(rec.config_value("label"), Some("cm"));
        assert!(rec.craft_model.is_some());
    }
}

#[test]
fn summary_means_match_per_run_files() {
    let spec = ExperimentSpec::parse(&tiny("[method.dps]\nzeta = 0.5\n[method.dps_yt]\nzeta = 0.5\n")).unwrap();
    let report = run_experiment(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&spec, &report, dir.path(), false).unwrap();
    let mut psnr = Vec::new();
    for entry in fs::read_dir(dir.path().join("runs/dps")).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        let line = text.lines().find_map(|l| l.strip_prefix("# final_psnr=")).unwrap();
        psnr.push(line.parse::<f64>().unwrap());
    }
    assert_eq!(psnr.len(), 4);
    let mean = psnr.iter().sum::<f64>() / psnr.len() as f64;
    assert!((mean - report.summary_for("dps").unwrap().psnr.0).abs() < 1e-9);
    assert_eq!(fs::read_to_string(dir.path().join("summary.csv")).unwrap(), summary_csv(&report));
    for f in ["curves/dps.csv", "curves/dps_yt.csv", "ratios/dps_yt_over_dps.csv", "report.txt", "images/truth_img000.png"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn diagnose_mode_writes_curves_only() {
    let spec = ExperimentSpec::parse(&tiny("[method.dps]\nzeta = 0.5\n")).unwrap();
    let report = run_experiment(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&spec, &report, dir.path(), true).unwrap();
    assert!(dir.path().join("curves/dps.csv").exists());
    assert!(!dir.path().join("summary.csv").exists());
    assert!(!dir.path().join("runs").exists());
}

#[test]
fn curve_against_itself_is_one() {
    let spec = ExperimentSpec::parse(&tiny("[method.dps]\nzeta = 0.5\n")).unwrap();
    let report = run_experiment(&spec).unwrap();
    let c = report.curve("dps").unwrap();
    let r = compare_curves(c, c).unwrap();
    for col in ["residual", "eps_error", "freq_ratio"] {
        assert_eq!(r.window_mean(col, 1, 60), Some(1.0), "{col}");
    }
}

#[test]
fn divergent_runs_are_recorded_and_the_batch_continues() {
    let spec = ExperimentSpec::parse(&tiny("[method.wild]\nmethod = dps\nzeta = 1e200\n[method.dps]\nzeta = 0.5\n")).unwrap();
    let report = run_experiment(&spec).unwrap();
    let wild = report.summary_for("wild").unwrap();
    assert_eq!((wild.runs, wild.failures), (0, 4));
    assert_eq!(report.summary_for("dps").unwrap().runs, 4);
    assert_eq!(report.failures.len(), 4);
}

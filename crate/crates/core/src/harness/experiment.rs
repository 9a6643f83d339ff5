//! Batch execution of an [`ExperimentSpec`] and its on-disk outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::config::{ExperimentSpec, ImageSource, PriorSource};
use super::curves::{compare_curves, Curve, RatioCurve};
use super::dataset::{load_png_dir, save_png, synthetic_corpus};
use crate::craft::make_measurement_model;
use crate::diagnostics::{default_cutoff, DiagnosticsConfig, RunRecord};
use crate::error::{Error, Result};
use crate::operators::ForwardOperator;
use crate::samplers::{run, stream_rng, Problem, Stream};
use crate::schedule::NoiseSchedule;
use crate::score::{io, EmpiricalPrior, ScoreModel};
use crate::signal::{Shape, Signal};

/// Per-(image, seed) seed for the operator, measurement noise and samplers.
pub fn run_seed(seed: u64, image: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ image as u64
}

fn load_images(src: &ImageSource, side: usize, color: bool) -> Result<Vec<Signal>> {
    match src {
        ImageSource::Synthetic { seed, first, count } => {
            if color {
                return Err(Error::InvalidConfig("the synthetic corpus is grayscale; set color = false".into()));
            }
            Ok(synthetic_corpus(*seed, *first, *count, side))
        }
        ImageSource::PngDir(dir) => load_png_dir(dir, side, color),
    }
}

/// Prior, schedule and ground-truth images for a spec.
pub struct ExperimentData {
    pub schedule: NoiseSchedule,
    pub x_model: ScoreModel,
    pub tests: Vec<Signal>,
}

impl ExperimentData {
    pub fn load(spec: &ExperimentSpec) -> Result<Self> {
        let schedule =
            NoiseSchedule::linear_with(spec.steps, spec.beta_start, spec.beta_end, spec.sigma_mode, true)?;
        let tests = load_images(&spec.test_images, spec.side, spec.color)?;
        let x_model: ScoreModel = match &spec.prior {
            PriorSource::Images(src) => EmpiricalPrior::new(load_images(src, spec.side, spec.color)?)?.into(),
            PriorSource::EmpiricalFile(p) => io::read_empirical(fs::File::open(p)?)?.into(),
            PriorSource::GmmFile(p) => {
                let shape = tests[0].shape();
                io::parse_gmm_csv(&fs::read_to_string(p)?, shape)?.into()
            }
        };
        x_model.shape_check(tests[0].shape())?;
        Ok(Self { schedule, x_model, tests })
    }
}

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub label: String,
    pub outcome: std::result::Result<(Signal, RunRecord), String>,
}

/// Everything produced for one ground-truth image and seed.
#[derive(Debug, Clone)]
pub struct PairRuns {
    pub image: usize,
    pub seed: u64,
    pub measurement: Signal,
    pub runs: Vec<MethodRun>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub method: String,
    pub runs: usize,
    pub failures: usize,
    pub psnr: (f64, f64),
    pub ssim: (f64, f64),
    pub mse: (f64, f64),
    pub x_score_evals: f64,
    pub y_score_evals: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub name: String,
    pub images: usize,
    pub seeds: usize,
    pub pairs: Vec<PairRuns>,
    pub summary: Vec<SummaryRow>,
    pub curves: Vec<Curve>,
    pub ratios: Vec<RatioCurve>,
    pub failures: Vec<String>,
}

impl ExperimentReport {
    pub fn summary_for(&self, label: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.label == label)
    }

    pub fn curve(&self, label: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.label == label)
    }

    pub fn ratio(&self, numerator: &str, denominator: &str) -> Option<&RatioCurve> {
        self.ratios.iter().find(|r| r.numerator == numerator && r.denominator == denominator)
    }

    /// Successful records of one method, in (image, seed) order.
    pub fn records(&self, label: &str) -> Vec<&RunRecord> {
        self.pairs
            .iter()
            .flat_map(|p| p.runs.iter())
            .filter(|r| r.label == label)
            .filter_map(|r| r.outcome.as_ref().ok().map(|(_, rec)| rec))
            .collect()
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

fn run_pair(spec: &ExperimentSpec, data: &ExperimentData, image: usize, seed: u64) -> Result<PairRuns> {
    let truth = &data.tests[image];
    let rs = run_seed(seed, image);
    let mut meas_rng = stream_rng(rs, Stream::Measurement);
    let op = ForwardOperator::new(spec.operator.clone(), truth.shape(), &mut meas_rng)?;
    let y = op.degrade(&spec.noise, truth, &mut meas_rng)?;
    let crafted = spec.methods.iter().any(|m| m.config.method.is_crafted());
    let measurement = if crafted {
        Some(make_measurement_model(&data.x_model, &op, &spec.noise, spec.craft_mode, spec.covariance)?)
    } else {
        None
    };
    let cutoff = spec.spectral_cutoff.unwrap_or_else(|| default_cutoff(spec.side));
    let diag = DiagnosticsConfig { stride: spec.diag_stride, cutoff, truth: Some(truth.clone()), eps_error: spec.eps_error };
    let problem = Problem {
        schedule: &data.schedule,
        x_model: &data.x_model,
        y_model: measurement.as_ref().map(|m| &m.model),
        op: &op,
        y: &y,
    };
    let runs = spec
        .methods
        .iter()
        .map(|m| {
            let mut config = m.config.clone();
            config.seed = rs;
            let outcome = run(&config, &problem, &diag)
                .map(|out| {
                    let mut rec = out.record;
                    rec.config.insert(0, ("label".into(), m.label.clone()));
                    rec.config.extend([
                        ("image".into(), image.to_string()),
                        ("experiment_seed".into(), seed.to_string()),
                        ("noise".into(), spec.noise.describe()),
                        ("spectral_cutoff".into(), format!("{cutoff} cycles/image")),
                    ]);
                    if let (true, Some(mm)) = (m.config.method.is_crafted(), &measurement) {
                        rec.craft_model = Some(mm.describe());
                    }
                    (out.x0, rec)
                })
                .map_err(|e| e.to_string());
            MethodRun { label: m.label.clone(), outcome }
        })
        .collect();
    Ok(PairRuns { image, seed, measurement: y, runs })
}

/// Run every (image, seed, method) combination. Sampler failures are
/// recorded and the batch continues; setup errors abort.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let data = ExperimentData::load(spec)?;
    let jobs: Vec<(usize, u64)> =
        (0..data.tests.len()).flat_map(|i| spec.seeds.iter().map(move |s| (i, *s))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {} workers: {e}", spec.jobs)))?;
    let pairs: Vec<PairRuns> =
        pool.install(|| jobs.par_iter().map(|&(i, s)| run_pair(spec, &data, i, s)).collect::<Result<_>>())?;

    let mut failures = Vec::new();
    let mut summary = Vec::new();
    let mut curves = Vec::new();
    for m in &spec.methods {
        let mut metrics = (Vec::new(), Vec::new(), Vec::new());
        let mut evals = (0.0, 0.0);
        let mut ok = Vec::new();
        let mut failed = 0;
        for p in &pairs {
            for r in p.runs.iter().filter(|r| r.label == m.label) {
                match &r.outcome {
                    Ok((_, rec)) => {
                        if let Some(fm) = rec.final_metrics {
                            metrics.0.push(fm.psnr);
                            metrics.1.push(fm.ssim);
                            metrics.2.push(fm.mse);
                        }
                        evals.0 += rec.x_score_evals as f64;
                        evals.1 += rec.y_score_evals as f64;
                        ok.push(rec);
                    }
                    Err(e) => {
                        failed += 1;
                        failures.push(format!("{} image {} seed {}: {e}", m.label, p.image, p.seed));
                    }
                }
            }
        }
        let n = ok.len().max(1) as f64;
        summary.push(SummaryRow {
            label: m.label.clone(),
            method: m.config.method.name().into(),
            runs: ok.len(),
            failures: failed,
            psnr: mean_std(&metrics.0),
            ssim: mean_std(&metrics.1),
            mse: mean_std(&metrics.2),
            x_score_evals: evals.0 / n,
            y_score_evals: evals.1 / n,
        });
        if !ok.is_empty() && spec.diag_stride > 0 {
            curves.push(Curve::mean_of(&m.label, &ok)?);
        }
    }
    let mut ratios = Vec::new();
    for a in &curves {
        for b in &curves {
            if a.label != b.label {
                ratios.push(compare_curves(a, b)?);
            }
        }
    }
    Ok(ExperimentReport {
        name: spec.name.clone(),
        images: data.tests.len(),
        seeds: spec.seeds.len(),
        pairs,
        summary,
        curves,
        ratios,
        failures,
    })
}

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        v.to_string()
    }
}

pub fn summary_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(
        "label,method,runs,failures,psnr_mean,psnr_std,ssim_mean,ssim_std,mse_mean,mse_std,x_score_evals,y_score_evals\n",
    );
    for s in &report.summary {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            s.label,
            s.method,
            s.runs,
            s.failures,
            fmt(s.psnr.0),
            fmt(s.psnr.1),
            fmt(s.ssim.0),
            fmt(s.ssim.1),
            fmt(s.mse.0),
            fmt(s.mse.1),
            s.x_score_evals,
            s.y_score_evals
        );
    }
    out
}

/// Human-readable report. Only the first line carries a timestamp.
pub fn report_text(spec: &ExperimentSpec, report: &ExperimentReport) -> String {
    let stamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut out = format!("# generated at unix time {stamp}\n");
    let _ = writeln!(out, "experiment: {}", report.name);
    let _ = writeln!(out, "scale: {} images x {} seeds per method", report.images, report.seeds);
    let _ = writeln!(out, "operator: {} ({})", spec.operator, spec.operator.kind().label());
    let _ = writeln!(out, "noise: {}", spec.noise.describe());
    let _ = writeln!(out, "schedule: T={} beta {}..{} sigma={}", spec.steps, spec.beta_start, spec.beta_end, spec.sigma_mode.name());
    let cutoff = spec.spectral_cutoff.unwrap_or_else(|| default_cutoff(spec.side));
    let _ = writeln!(out, "spectral cutoff: {cutoff} cycles/image (32 cycles at side 256, scaled by side)");
    let _ = writeln!(out, "crafted model: mode={} covariance={}", spec.craft_mode.name(), spec.covariance.name());
    for m in &spec.methods {
        let echo: Vec<String> = m.config.echo().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "method {}: {}", m.label, echo.join(" "));
    }
    out.push('\n');
    let _ = writeln!(out, "{:<16} {:>5} {:>5} {:>16} {:>16} {:>18}", "label", "runs", "fail", "psnr", "ssim", "mse");
    for s in &report.summary {
        let _ = writeln!(
            out,
            "{:<16} {:>5} {:>5} {:>8.3}±{:<7.3} {:>8.4}±{:<7.4} {:>9.6}±{:<8.6}",
            s.label, s.runs, s.failures, s.psnr.0, s.psnr.1, s.ssim.0, s.ssim.1, s.mse.0, s.mse.1
        );
    }
    if !report.failures.is_empty() {
        let _ = writeln!(out, "\nFAILED RUNS ({}):", report.failures.len());
        for f in &report.failures {
            let _ = writeln!(out, "  {f}");
        }
    }
    out
}

/// Write `summary.csv`, `curves/`, `ratios/`, `runs/`, `images/` and
/// `report.txt` under `dir`. `curves_only` skips images and per-run files.
pub fn write_outputs(spec: &ExperimentSpec, report: &ExperimentReport, dir: &Path, curves_only: bool) -> Result<()> {
    fs::create_dir_all(dir.join("curves"))?;
    fs::create_dir_all(dir.join("ratios"))?;
    for c in &report.curves {
        fs::write(dir.join("curves").join(format!("{}.csv", c.label)), c.to_csv())?;
    }
    for r in &report.ratios {
        fs::write(dir.join("ratios").join(format!("{}_over_{}.csv", r.numerator, r.denominator)), r.to_csv())?;
    }
    fs::write(dir.join("report.txt"), report_text(spec, report))?;
    if curves_only {
        return Ok(());
    }
    fs::write(dir.join("summary.csv"), summary_csv(report))?;
    let data_images = spec.save_images;
    if data_images {
        fs::create_dir_all(dir.join("images"))?;
    }
    for p in &report.pairs {
        let tag = format!("img{:03}_seed{}", p.image, p.seed);
        if data_images && is_image(p.measurement.shape()) {
            save_png(&p.measurement, &dir.join("images").join(format!("measurement_{tag}.png")))?;
        }
        for r in &p.runs {
            let run_dir = dir.join("runs").join(&r.label);
            fs::create_dir_all(&run_dir)?;
            match &r.outcome {
                Ok((x0, rec)) => {
                    fs::write(run_dir.join(format!("{tag}.csv")), rec.to_csv())?;
                    if data_images && is_image(x0.shape()) {
                        save_png(x0, &dir.join("images").join(format!("{}_{tag}.png", r.label)))?;
                    }
                }
                Err(e) => fs::write(run_dir.join(format!("{tag}.failed")), format!("{e}\n"))?,
            }
        }
    }
    if data_images {
        let data = load_images(&spec.test_images, spec.side, spec.color)?;
        for (i, img) in data.iter().enumerate() {
            if is_image(img.shape()) {
                save_png(img, &dir.join("images").join(format!("truth_img{i:03}.png")))?;
            }
        }
    }
    Ok(())
}

fn is_image(s: Shape) -> bool {
    s.h > 1 && s.w > 1 && (s.c == 1 || s.c == 3)
}

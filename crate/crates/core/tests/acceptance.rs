//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Tolerances are fixed constants below.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dpscm::craft::{make_measurement_model, CovarianceMode, CraftMode};
use dpscm::diagnostics::{fft2, freq_ratio, DiagnosticsConfig};
use dpscm::harness::{run_experiment, ExperimentReport, ExperimentSpec, ImageSource, PriorSource};
use dpscm::operators::{ForwardOperator, NoiseModel, OperatorKind, OperatorSpec};
use dpscm::oracle::{adjoint_mismatch, brute_force_dft, central_gradient, fd_agrees, fd_roundoff_floor, relative_error};
use dpscm::samplers::{guidance_gradient, run, weighted_norm, GuidanceNorm, Method, Problem, SamplerConfig};
use dpscm::schedule::NoiseSchedule;
use dpscm::score::{EmpiricalPrior, GmmPrior, ScoreModel};
use dpscm::{Shape, Signal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONJUGATE_RMSE: f64 = 0.05;
const CONJUGATE_RUNS: u64 = 100;
const CONJUGATE_BUDGET: Duration = Duration::from_secs(120);
const FD_DELTA: f64 = 1e-5;
const FD_REL: f64 = 1e-4;
const FD_CASES: usize = 100;
const ADJOINT_REL: f64 = 1e-10;
const DFT_ABS: f64 = 1e-10;
const PARSEVAL_REL: f64 = 1e-8;
const WHITE_NOISE_DRAWS: usize = 10_000;
const WHITE_NOISE_BAND: f64 = 0.02;
const TREND_BUDGET: Duration = Duration::from_secs(20 * 60);
const ACCEL_REL: f64 = 0.05;
const ACCEL_EVAL_SAVING: f64 = 0.35;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    format!("error: {e}")
}

fn conjugate_gaussian() -> Outcome {
    let start = Instant::now();
    let schedule = NoiseSchedule::default();
    let shape = Shape::vector(16);
    let model: ScoreModel = GmmPrior::standard_normal(shape).into();
    let op = ForwardOperator::identity(shape);
    let sigma: f64 = 0.05;
    let noise = NoiseModel::gaussian(sigma).map_err(err)?;
    let mut r = rng(5);
    let truth = Signal::randn(shape, &mut r);
    let y = op.degrade(&noise, &truth, &mut r).map_err(err)?;
    let craft = make_measurement_model(&model, &op, &noise, CraftMode::Auto, CovarianceMode::Isotropic).map_err(err)?;
    let p = Problem { schedule: &schedule, x_model: &model, y_model: Some(&craft.model), op: &op, y: &y };
    let target = y.scaled(1.0 / (1.0 + sigma * sigma));
    let mut parts = Vec::new();
    let mut ok = true;
    for method in [Method::Dps, Method::DpsCm, Method::DpsYt] {
        let mut mean = Signal::zeros(shape);
        for s in 0..CONJUGATE_RUNS {
            let config = SamplerConfig::new(method).zeta(0.05).omega(0.05).mu(0.5).seed(s);
            mean.axpy(1.0 / CONJUGATE_RUNS as f64, &run(&config, &p, &DiagnosticsConfig::off()).map_err(err)?.x0);
        }
        let rmse = (mean.sub(&target).norm_sq() / shape.len() as f64).sqrt();
        ok &= rmse < CONJUGATE_RMSE;
        parts.push(format!("{} rmse {rmse:.4}", method.name()));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < CONJUGATE_BUDGET;
    ensure(ok, format!("{}; {:.1}s", parts.join(", "), elapsed.as_secs_f64()))
}

fn equivalences() -> Outcome {
    let shape = Shape::new(8, 8, 1);
    let mut r = rng(6);
    let prior = EmpiricalPrior::new((0..8).map(|_| Signal::randn(shape, &mut r).map(|v| 0.5 + 0.2 * v)).collect()).map_err(err)?;
    let truth = prior.sample(&mut r);
    let x_model: ScoreModel = prior.into();
    let op = ForwardOperator::new(OperatorSpec::default_for(OperatorKind::GaussianBlur, 8), shape, &mut r).map_err(err)?;
    let noise = NoiseModel::gaussian(0.05).map_err(err)?;
    let y = op.degrade(&noise, &truth, &mut r).map_err(err)?;
    let schedule = NoiseSchedule::default();
    let craft = make_measurement_model(&x_model, &op, &noise, CraftMode::Shared, CovarianceMode::Isotropic).map_err(err)?;
    let p = Problem { schedule: &schedule, x_model: &x_model, y_model: Some(&craft.model), op: &op, y: &y };
    let off = DiagnosticsConfig::off();
    let mut mismatches = Vec::new();
    for seed in 0..3 {
        let dps = run(&SamplerConfig::new(Method::Dps).zeta(1.0).seed(seed), &p, &off).map_err(err)?;
        let cm = run(&SamplerConfig::new(Method::DpsCm).zeta(1.0).omega(5.0).mu(0.0).seed(seed), &p, &off).map_err(err)?;
        if dps.x0 != cm.x0 {
            mismatches.push(format!("dps_cm(mu=0) seed {seed}"));
        }
        let sq = run(&SamplerConfig::new(Method::Dps).zeta(0.1).norm(GuidanceNorm::Squared).seed(seed), &p, &off).map_err(err)?;
        let lgd = run(&SamplerConfig::new(Method::LgdMc).zeta(0.1).mc(1, 0.0).seed(seed), &p, &off).map_err(err)?;
        if sq.x0 != lgd.x0 {
            mismatches.push(format!("lgd_mc(n=1) seed {seed}"));
        }
    }
    let mut shared_same = craft.model.ptr_eq(&x_model);
    for t in [1, 500, 1000] {
        let v = Signal::randn(shape, &mut r);
        let a = x_model.evaluate(&schedule, &v, t).map_err(err)?;
        let b = craft.model.evaluate(&schedule, &v, t).map_err(err)?;
        shared_same &= a.score() == b.score() && a.x0hat() == b.x0hat();
    }
    if !shared_same {
        mismatches.push("shared crafted model".into());
    }
    ensure(mismatches.is_empty(), if mismatches.is_empty() { "all bitwise equal".into() } else { mismatches.join(", ") })
}

/// Relative error when the gradient is above the difference-quotient
/// rounding floor, `None` when both sides sit at rounding level.
struct FdCheck {
    resolved: Option<f64>,
    ok: bool,
}

fn fd_check(analytic: &Signal, fd: &Signal, floor: f64) -> FdCheck {
    let ok = fd_agrees(analytic, fd, FD_REL, floor);
    let resolved = (analytic.norm().max(fd.norm()) > 100.0 * floor).then(|| relative_error(analytic, fd));
    FdCheck { resolved, ok }
}

fn fd_case(model: &ScoreModel, op: &ForwardOperator, schedule: &NoiseSchedule, t: usize, r: &mut ChaCha8Rng) -> Result<[FdCheck; 2], String> {
    let shape = op.in_shape();
    let x = schedule
        .forward_sample(&Signal::randn(shape, r).map(|v| 0.5 + 0.2 * v), t, &Signal::randn(shape, r))
        .map_err(err)?;
    let v = Signal::randn(shape, r);
    let analytic = model.x0hat_vjp(schedule, &x, t, &v).map_err(err)?;
    let fd = central_gradient(&x, FD_DELTA, |p| model.tweedie_x0hat(schedule, p, t).unwrap().dot(&v));
    let a = schedule.alpha_bar(t).sqrt();
    let scale = x.as_slice().iter().zip(v.as_slice()).map(|(p, q)| (p * q).abs()).sum::<f64>() / a;
    let vjp = fd_check(&analytic, &fd, fd_roundoff_floor(scale, shape.len(), FD_DELTA));

    let target = op.apply(&Signal::randn(shape, r).map(|v| 0.5 + 0.2 * v)).map_err(err)?;
    let post = model.evaluate(schedule, &x, t).map_err(err)?;
    let g = guidance_gradient(&post, op, &target, GuidanceNorm::Unsquared, None).map_err(err)?;
    let loss = |p: &Signal| weighted_norm(&target.sub(&op.apply(&model.tweedie_x0hat(schedule, p, t).unwrap()).unwrap()), None);
    let gfd = central_gradient(&x, FD_DELTA, loss);
    let res = target.norm() + op.apply(post.x0hat()).map_err(err)?.norm();
    Ok([vjp, fd_check(&g, &gfd, fd_roundoff_floor(res, shape.len(), FD_DELTA))])
}

fn differentiation() -> Outcome {
    let schedule = NoiseSchedule::default();
    let side = 8;
    let shape = Shape::new(side, side, 1);
    let mut r = rng(99);
    let mut models: Vec<(&str, ScoreModel)> = Vec::new();
    let means: Vec<Signal> = (0..3).map(|_| Signal::randn(shape, &mut r).map(|v| 0.5 + 0.2 * v)).collect();
    models.push(("gmm", GmmPrior::new(vec![0.2, 0.5, 0.3], means, vec![0.02, 0.05, 0.01]).map_err(err)?.into()));
    let points = (0..6).map(|_| Signal::randn(shape, &mut r).map(|v| 0.5 + 0.2 * v)).collect();
    models.push(("empirical", EmpiricalPrior::new(points).map_err(err)?.into()));
    let ops: Vec<ForwardOperator> = OperatorKind::ALL
        .into_iter()
        .map(|k| ForwardOperator::new(OperatorSpec::default_for(k, side), shape, &mut rng(k as u64)))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let mut worst = [0.0f64; 2];
    let mut at_floor = [0usize; 2];
    let mut failures = Vec::new();
    for case in 0..FD_CASES {
        let (name, model) = &models[case % models.len()];
        let op = &ops[(case / models.len()) % ops.len()];
        let t = r.random_range(1..=1000);
        let checks = fd_case(model, op, &schedule, t, &mut r)?;
        for (i, c) in checks.iter().enumerate() {
            match c.resolved {
                Some(e) => worst[i] = worst[i].max(e),
                None => at_floor[i] += 1,
            }
        }
        if !checks.iter().all(|c| c.ok) {
            failures.push(format!("{name}/{}/t={t}", op.kind().name()));
        }
    }
    ensure(
        failures.is_empty(),
        format!(
            "{FD_CASES} cases, dim 64; max rel error vjp {:.2e} guidance {:.2e}; at rounding floor vjp {} guidance {}; failing [{}]",
            worst[0],
            worst[1],
            at_floor[0],
            at_floor[1],
            failures.join(" ")
        ),
    )
}

fn operators() -> Outcome {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    for shape in [Shape::new(32, 32, 1), Shape::new(16, 16, 3)] {
        for kind in OperatorKind::ALL.into_iter().filter(|k| k.is_linear()) {
            let op = ForwardOperator::new(OperatorSpec::default_for(kind, shape.h), shape, &mut r).map_err(err)?;
            for _ in 0..20 {
                let x = Signal::randn(shape, &mut r);
                let u = Signal::randn(op.out_shape(), &mut r);
                worst = worst.max(adjoint_mismatch(&op.apply(&x).map_err(err)?, &u, &x, &op.adjoint(&u).map_err(err)?));
            }
            if let Some(m) = op.mask() {
                let x = Signal::randn(shape, &mut r);
                let once = op.apply(&x).map_err(err)?;
                if op.apply(&once).map_err(err)? != once || m.as_slice().iter().any(|v| *v != 0.0 && *v != 1.0) {
                    problems.push(format!("{} not idempotent", kind.name()));
                }
            }
            if let Some(k) = op.kernel() {
                if (k.sum() - 1.0).abs() > 1e-12 {
                    problems.push(format!("{} kernel sums to {}", kind.name(), k.sum()));
                }
                let c = Signal::filled(shape, 0.37);
                let out = op.apply(&c).map_err(err)?;
                if out.as_slice().iter().any(|v| (v - 0.37).abs() > 1e-12) {
                    problems.push(format!("{} changes a constant image", kind.name()));
                }
            }
        }
    }
    if worst >= ADJOINT_REL {
        problems.push(format!("adjoint mismatch {worst:.2e}"));
    }
    ensure(problems.is_empty(), format!("max adjoint mismatch {worst:.2e}; {}", if problems.is_empty() { "masks and kernels exact".into() } else { problems.join(", ") }))
}

fn spectral() -> Outcome {
    let mut r = rng(4);
    let x = Signal::randn(Shape::new(8, 8, 1), &mut r);
    let fast = fft2(x.as_slice(), 8).map_err(err)?;
    let slow = brute_force_dft(x.as_slice(), 8);
    let dft_err = fast.iter().zip(&slow).map(|(a, b)| (a.re - b.re).abs().max((a.im - b.im).abs())).fold(0.0, f64::max);
    let energy = fast.iter().map(|c| c.norm_sqr()).sum::<f64>() / 64.0;
    let parseval = (energy - x.norm_sq()).abs() / x.norm_sq();
    let shape = Shape::new(32, 32, 1);
    let cutoff = dpscm::diagnostics::default_cutoff(32);
    let white = (0..WHITE_NOISE_DRAWS).map(|_| freq_ratio(&Signal::randn(shape, &mut r), cutoff).unwrap()).sum::<f64>() / WHITE_NOISE_DRAWS as f64;
    let constant = freq_ratio(&Signal::filled(shape, 0.61), cutoff).map_err(err)?;
    ensure(
        dft_err < DFT_ABS && parseval < PARSEVAL_REL && (white - 1.0).abs() <= WHITE_NOISE_BAND && constant == 0.0,
        format!("dft {dft_err:.2e}, parseval {parseval:.2e}, white noise {white:.4}, constant {constant}"),
    )
}

fn load_spec(name: &str) -> Result<ExperimentSpec, String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name);
    ExperimentSpec::parse(&std::fs::read_to_string(&path).map_err(err)?).map_err(err)
}

fn scale_ok(spec: &ExperimentSpec) -> bool {
    let images = match &spec.test_images {
        ImageSource::Synthetic { count, .. } => *count,
        ImageSource::PngDir(_) => 0,
    };
    let prior = match &spec.prior {
        PriorSource::Images(ImageSource::Synthetic { count, .. }) => *count,
        _ => 0,
    };
    images >= 10 && spec.seeds.len() >= 5 && prior >= 64 && spec.side == 32
}

fn run_spec(name: &str) -> Result<(ExperimentSpec, ExperimentReport), String> {
    let spec = load_spec(name)?;
    if !scale_ok(&spec) {
        return Err(format!("{name} is below 10 images x 5 seeds with a 64-image prior at 32x32"));
    }
    let report = run_experiment(&spec).map_err(err)?;
    Ok((spec, report))
}

fn window(report: &ExperimentReport, label: &str, col: &str, lo: usize, hi: usize) -> f64 {
    report.curve(label).and_then(|c| c.window_mean(col, lo, hi)).unwrap_or(f64::NAN)
}

fn trend() -> Outcome {
    let start = Instant::now();
    let (spec, report) = run_spec("deblur_trend.cfg")?;
    let t_max = spec.steps;
    let mut notes = Vec::new();
    let mut ok = spec.operator == (OperatorSpec::GaussianBlur { size: 9, sigma: 1.0 }) && spec.noise == NoiseModel::gaussian(0.05).map_err(err)?;
    for label in ["dps", "dps_yt", "dps_cm"] {
        let near_end = window(&report, label, "freq_ratio", 1, t_max / 10);
        let near_start = window(&report, label, "freq_ratio", t_max * 9 / 10, t_max);
        ok &= near_end > near_start;
        notes.push(format!("(a) {label} freq {near_start:.3}->{near_end:.3}"));
    }
    let ratio = report.ratio("dps_yt", "dps").ok_or("missing dps_yt/dps ratio")?;
    let early = ratio.window_mean("eps_error", t_max * 6 / 10, t_max).unwrap_or(f64::NAN);
    let late = ratio.window_mean("eps_error", 1, t_max * 3 / 10).unwrap_or(f64::NAN);
    ok &= early < 1.0 && late > 1.0;
    notes.push(format!("(b) eps dps_yt/dps early {early:.3} late {late:.3}"));
    let cm = report.summary_for("dps_cm").ok_or("missing dps_cm")?.mse.0;
    let dps = report.summary_for("dps").ok_or("missing dps")?.mse.0;
    ok &= cm <= dps;
    notes.push(format!("(c) mse dps_cm {cm:.5} dps {dps:.5}"));
    ok &= report.failures.is_empty();
    let elapsed = start.elapsed();
    ok &= elapsed < TREND_BUDGET;
    notes.push(format!("{:.0}s", elapsed.as_secs_f64()));
    ensure(ok, notes.join("; "))
}

fn mu_ablation() -> Outcome {
    let (spec, report) = run_spec("inpainting_mu.cfg")?;
    let psnr: BTreeMap<String, f64> = report.summary.iter().map(|s| (s.label.clone(), s.psnr.0)).collect();
    let mus: Vec<f64> = spec.methods.iter().map(|m| m.config.mu).collect();
    let (p0, p05, p1) = (psnr["mu0"], psnr["mu05"], psnr["mu1"]);
    let ok = matches!(spec.operator, OperatorSpec::BoxMask { .. }) && mus == [0.0, 0.5, 1.0] && p05 >= p0 && p1 >= p0 && report.failures.is_empty();
    ensure(ok, format!("psnr mu=0 {p0:.3}, mu=0.5 {p05:.3}, mu=1 {p1:.3}"))
}

fn poisson() -> Outcome {
    let (spec, report) = run_spec("poisson_deblur.cfg")?;
    let guided = report.summary_for("dps_cm_poisson").ok_or("missing dps_cm_poisson")?;
    let uncond = report.summary_for("unconditional").ok_or("missing unconditional")?;
    let ok = matches!(spec.noise, NoiseModel::Poisson { lambda, .. } if lambda == 1.0)
        && guided.failures == 0
        && guided.runs == uncond.runs
        && guided.psnr.0 > uncond.psnr.0;
    ensure(ok, format!("psnr dps_cm_poisson {:.3} vs unconditional {:.3}, aborts {}", guided.psnr.0, uncond.psnr.0, guided.failures))
}

fn accelerated() -> Outcome {
    let (spec, report) = run_spec("accelerated_inpainting.cfg")?;
    let full = report.summary_for("full").ok_or("missing full")?;
    let fast = report.summary_for("accelerated").ok_or("missing accelerated")?;
    let cutoff = spec.methods.iter().find(|m| m.label == "accelerated").and_then(|m| m.config.accel_cutoff);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let (dp, ds, dm) = (rel(fast.psnr.0, full.psnr.0), rel(fast.ssim.0, full.ssim.0), rel(fast.mse.0, full.mse.0));
    let saving = 1.0 - fast.y_score_evals / full.y_score_evals;
    let ok = cutoff == Some(spec.steps * 4 / 10)
        && matches!(spec.operator, OperatorSpec::RandomMask { .. })
        && dp <= ACCEL_REL
        && ds <= ACCEL_REL
        && dm <= ACCEL_REL
        && saving >= ACCEL_EVAL_SAVING;
    ensure(ok, format!("relative change psnr {dp:.4} ssim {ds:.4} mse {dm:.4}; y-score evaluations saved {:.1}%", 100.0 * saving))
}

fn files_under(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let mut bytes = std::fs::read(&p).unwrap_or_default();
                if p.file_name().is_some_and(|n| n == "report.txt") {
                    let body = bytes.iter().position(|b| *b == b'\n').map_or(0, |i| i + 1);
                    bytes.drain(..body);
                }
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), bytes);
            }
        }
    }
    out
}

fn reproducibility() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_dpscm");
    let selftest = || Command::new(bin).arg("selftest").output().map_err(err);
    let (a, b) = (selftest()?, selftest()?);
    let selftest_ok = a.status.success() && a.stdout == b.stdout;
    let tmp = tempfile::tempdir().map_err(err)?;
    let spec = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs/smoke.cfg");
    let mut dirs = Vec::new();
    for (i, jobs) in ["1", "1", "4"].iter().enumerate() {
        let out = tmp.path().join(format!("run{i}"));
        let status = Command::new(bin)
            .args(["run", spec.to_str().unwrap(), "--jobs", jobs, "--output", out.to_str().unwrap()])
            .output()
            .map_err(err)?
            .status;
        if !status.success() {
            return Err(format!("dpscm run exited with {status}"));
        }
        dirs.push(files_under(&out));
    }
    let files = dirs[0].len();
    let rerun_ok = files > 0 && dirs[0] == dirs[1];
    let parallel_ok = dirs[0] == dirs[2];
    ensure(
        selftest_ok && rerun_ok && parallel_ok,
        format!("selftest identical {selftest_ok}; rerun identical over {files} files {rerun_ok}; 1 vs 4 jobs identical {parallel_ok}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("conjugate gaussian oracle", conjugate_gaussian),
        ("exact equivalences", equivalences),
        ("differentiation", differentiation),
        ("operators", operators),
        ("spectral", spectral),
        ("deblur trends", trend),
        ("mu ablation", mu_ablation),
        ("poisson path", poisson),
        ("accelerated variant", accelerated),
        ("reproducibility", reproducibility),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {n:>2} {tag} {name}: {detail}");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

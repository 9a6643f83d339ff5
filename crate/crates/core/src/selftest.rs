//! Fast deterministic oracle checks used by `dpscm selftest`.
//!
//! Every check is seeded and prints no timings, so two invocations produce
//! byte-identical reports.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::craft::{make_measurement_model, CovarianceMode, CraftMode};
use crate::diagnostics::{eps_prediction_error, fft2, freq_ratio, DiagnosticsConfig};
use crate::error::Result;
use crate::operators::{ForwardOperator, NoiseModel, OperatorKind, OperatorSpec};
use crate::oracle::{adjoint_mismatch, brute_force_dft, central_gradient, fd_agrees, fd_roundoff_floor, relative_error};
use crate::samplers::{guidance_gradient, run, GuidanceNorm, Method, Problem, SamplerConfig};
use crate::schedule::NoiseSchedule;
use crate::score::{EmpiricalPrior, GmmPrior, ScoreModel};
use crate::signal::{Shape, Signal};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!("{} {:<28} {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        out.push_str(&format!("{} checks, {} failed\n", self.checks.len(), failed));
        out
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
    }
}

fn schedule_check() -> Result<(bool, String)> {
    let s = NoiseSchedule::default();
    let monotone = (1..s.steps()).all(|t| s.alpha_bar(t + 1) < s.alpha_bar(t));
    let ab = s.alpha_bar(s.steps());
    Ok((monotone && ab > 0.0 && ab < 1e-4, format!("alpha_bar(T)={ab:.3e}")))
}

fn adjoint_check() -> Result<(bool, String)> {
    let mut r = rng(1);
    let shape = Shape::new(16, 16, 1);
    let mut worst = 0.0f64;
    for kind in OperatorKind::ALL.into_iter().filter(|k| k.is_linear()) {
        let op = ForwardOperator::new(OperatorSpec::default_for(kind, 16), shape, &mut r)?;
        for _ in 0..10 {
            let x = Signal::randn(shape, &mut r);
            let u = Signal::randn(op.out_shape(), &mut r);
            worst = worst.max(adjoint_mismatch(&op.apply(&x)?, &u, &x, &op.adjoint(&u)?));
        }
    }
    Ok((worst < 1e-10, format!("max relative mismatch {worst:.2e}")))
}

fn vjp_check() -> Result<(bool, String)> {
    let s = NoiseSchedule::default();
    let shape = Shape::vector(12);
    let mut r = rng(2);
    let models: Vec<ScoreModel> = vec![
        GmmPrior::uniform((0..3).map(|_| Signal::randn(shape, &mut r)).collect(), 0.3)?.into(),
        EmpiricalPrior::new((0..5).map(|_| Signal::randn(shape, &mut r)).collect())?.into(),
    ];
    let mut worst = 0.0f64;
    let mut ok = true;
    for m in &models {
        for t in [50, 400, 900] {
            let x = Signal::randn(shape, &mut r);
            let v = Signal::randn(shape, &mut r);
            let analytic = m.x0hat_vjp(&s, &x, t, &v)?;
            let fd = central_gradient(&x, 1e-5, |p| m.tweedie_x0hat(&s, p, t).unwrap().dot(&v));
            let scale = x.as_slice().iter().zip(v.as_slice()).map(|(a, b)| (a * b).abs()).sum::<f64>()
                / s.alpha_bar(t).sqrt();
            ok &= fd_agrees(&analytic, &fd, 1e-4, fd_roundoff_floor(scale, shape.len(), 1e-5));
            worst = worst.max(relative_error(&analytic, &fd));
        }
    }
    Ok((ok, format!("max relative error {worst:.2e}")))
}

fn guidance_check() -> Result<(bool, String)> {
    let s = NoiseSchedule::default();
    let shape = Shape::new(8, 8, 1);
    let mut r = rng(3);
    let prior: ScoreModel =
        GmmPrior::uniform((0..3).map(|_| Signal::randn(shape, &mut r).map(|v| 0.5 + 0.2 * v)).collect(), 0.05)?.into();
    let mut worst = 0.0f64;
    for kind in OperatorKind::ALL {
        let op = ForwardOperator::new(OperatorSpec::default_for(kind, 8), shape, &mut r)?;
        let target = Signal::randn(op.out_shape(), &mut r).map(|v| 0.5 + 0.1 * v);
        let t = 600;
        let x = s.forward_sample(&Signal::filled(shape, 0.5), t, &Signal::randn(shape, &mut r))?;
        let post = prior.evaluate(&s, &x, t)?;
        let g = guidance_gradient(&post, &op, &target, GuidanceNorm::Unsquared, None)?;
        let fd = central_gradient(&x, 1e-5, |p| {
            target.sub(&op.apply(&prior.tweedie_x0hat(&s, p, t).unwrap()).unwrap()).norm()
        });
        worst = worst.max(relative_error(&g, &fd));
    }
    Ok((worst < 1e-4, format!("max relative error {worst:.2e}")))
}

fn fft_check() -> Result<(bool, String)> {
    let mut r = rng(4);
    let x = Signal::randn(Shape::new(8, 8, 1), &mut r);
    let fast = fft2(x.as_slice(), 8)?;
    let slow = brute_force_dft(x.as_slice(), 8);
    let err = fast.iter().zip(&slow).map(|(a, b)| (a.re - b.re).abs().max((a.im - b.im).abs())).fold(0.0, f64::max);
    let energy: f64 = fast.iter().map(|c| c.norm_sqr()).sum::<f64>() / 64.0;
    let parseval = (energy - x.norm_sq()).abs() / x.norm_sq();
    Ok((err < 1e-10 && parseval < 1e-8, format!("dft error {err:.2e}, parseval {parseval:.2e}")))
}

fn spectral_check() -> Result<(bool, String)> {
    let constant = freq_ratio(&Signal::filled(Shape::new(32, 32, 1), 0.7), 4)?;
    let mut r = rng(5);
    let draws = 2000;
    let mut mean = 0.0;
    for _ in 0..draws {
        mean += freq_ratio(&Signal::randn(Shape::new(32, 32, 1), &mut r), 4)? / draws as f64;
    }
    Ok((constant == 0.0 && (mean - 1.0).abs() < 0.02, format!("constant {constant}, white noise {mean:.4}")))
}

fn equivalence_check() -> Result<(bool, String)> {
    let shape = Shape::new(8, 8, 1);
    let mut r = rng(6);
    let prior = EmpiricalPrior::new((0..6).map(|_| Signal::randn(shape, &mut r).map(|v| 0.5 + 0.2 * v)).collect())?;
    let truth = prior.sample(&mut r);
    let x_model: ScoreModel = prior.into();
    let op = ForwardOperator::new(OperatorSpec::default_for(OperatorKind::GaussianBlur, 8), shape, &mut r)?;
    let noise = NoiseModel::gaussian(0.05)?;
    let y = op.degrade(&noise, &truth, &mut r)?;
    let schedule = NoiseSchedule::linear(200, 1e-3, 0.05)?;
    let craft = make_measurement_model(&x_model, &op, &noise, CraftMode::Shared, CovarianceMode::Isotropic)?;
    let shared = craft.model.ptr_eq(&x_model);
    let p = Problem { schedule: &schedule, x_model: &x_model, y_model: Some(&craft.model), op: &op, y: &y };
    let off = DiagnosticsConfig::off();
    let dps = run(&SamplerConfig::new(Method::Dps).zeta(0.5).seed(9), &p, &off)?;
    let cm = run(&SamplerConfig::new(Method::DpsCm).zeta(0.5).omega(2.0).mu(0.0).seed(9), &p, &off)?;
    let sq = run(&SamplerConfig::new(Method::Dps).zeta(0.05).norm(GuidanceNorm::Squared).seed(9), &p, &off)?;
    let lgd = run(&SamplerConfig::new(Method::LgdMc).zeta(0.05).mc(1, 0.0).seed(9), &p, &off)?;
    let a = dps.x0 == cm.x0;
    let b = sq.x0 == lgd.x0;
    Ok((a && b && shared, format!("dps_cm(mu=0)==dps {a}, lgd_mc(n=1)==dps(squared) {b}, shared model {shared}")))
}

fn eps_check() -> Result<(bool, String)> {
    let s = NoiseSchedule::default();
    let shape = Shape::vector(6);
    let mut r = rng(7);
    let m: ScoreModel = EmpiricalPrior::new(vec![Signal::randn(shape, &mut r)])?.into();
    let mut worst = 0.0f64;
    for t in [1, 300, 999] {
        let x = Signal::randn(shape, &mut r);
        worst = worst.max(eps_prediction_error(&m, &s, &x, t, &mut r)?);
    }
    Ok((worst < 1e-20, format!("max error {worst:.1e}")))
}

fn conjugate_check() -> Result<(bool, String)> {
    let schedule = NoiseSchedule::default();
    let shape = Shape::vector(16);
    let model: ScoreModel = GmmPrior::standard_normal(shape).into();
    let op = ForwardOperator::identity(shape);
    let sigma: f64 = 0.05;
    let noise = NoiseModel::gaussian(sigma)?;
    let mut r = rng(8);
    let truth = Signal::randn(shape, &mut r);
    let y = op.degrade(&noise, &truth, &mut r)?;
    let craft = make_measurement_model(&model, &op, &noise, CraftMode::Auto, CovarianceMode::Isotropic)?;
    let p = Problem { schedule: &schedule, x_model: &model, y_model: Some(&craft.model), op: &op, y: &y };
    let runs = 40;
    let mut mean = Signal::zeros(shape);
    for s in 0..runs {
        let config = SamplerConfig::new(Method::Dps).zeta(0.05).seed(s);
        mean.axpy(1.0 / runs as f64, &run(&config, &p, &DiagnosticsConfig::off())?.x0);
    }
    let rmse = (mean.sub(&y.scaled(1.0 / (1.0 + sigma * sigma))).norm_sq() / 16.0).sqrt();
    Ok((rmse < 0.05, format!("dps rmse {rmse:.4} over {runs} runs")))
}

/// Run every check. Failures are reported, never panicked on.
pub fn run_selftest() -> Report {
    let checks = vec![
        check("schedule", schedule_check),
        check("operator adjoints", adjoint_check),
        check("tweedie vjp", vjp_check),
        check("guidance gradient", guidance_check),
        check("fft vs dft", fft_check),
        check("frequency ratio", spectral_check),
        check("exact equivalences", equivalence_check),
        check("eps error single point", eps_check),
        check("conjugate posterior mean", conjugate_check),
    ];
    Report { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes_and_is_deterministic() {
        let a = run_selftest();
        assert!(a.passed(), "{}", a.render());
        assert_eq!(a.render(), run_selftest().render());
    }
}

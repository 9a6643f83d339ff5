//! Reverse-time samplers: unconditional ancestral sampling, DPS, DPS on a
//! noised measurement trajectory, LGD-MC, and crafted-measurement guidance.

mod config;
mod guidance;

pub use config::{
    stream_rng, GuidanceNorm, Method, SamplerConfig, StepSize, Stream, DEFAULT_MC_RADIUS, DEFAULT_POISSON_FLOOR,
};
pub use guidance::{guidance_gradient, poisson_weights, residual_cotangent, weighted_norm};

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{self, DiagnosticsConfig, FinalMetrics, RunRecord, StepRow};
use crate::error::{Error, Result};
use crate::operators::ForwardOperator;
use crate::schedule::{reverse_mean, NoiseSchedule};
use crate::score::{Posterior, ScoreModel};
use crate::signal::Signal;

use guidance::pull_back;

/// Everything a sampler needs besides its settings.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub schedule: &'a NoiseSchedule,
    pub x_model: &'a ScoreModel,
    /// Score model for the crafted measurement; required by crafted methods.
    pub y_model: Option<&'a ScoreModel>,
    pub op: &'a ForwardOperator,
    pub y: &'a Signal,
}

#[derive(Debug, Clone)]
pub struct SampleOutput {
    pub x0: Signal,
    /// Final state of the crafted trajectory, when one was run.
    pub y_craft: Option<Signal>,
    pub record: RunRecord,
}

/// One reverse step of the crafted trajectory. Returns the new state and the
/// Tweedie mean `y0hat` of the state it was given. The guidance gradient is
/// taken at the pre-step state and applied after the ancestral move.
pub fn craft_step(
    y_model: &ScoreModel,
    schedule: &NoiseSchedule,
    y_t: &Signal,
    y: &Signal,
    t: usize,
    omega: f64,
    norm: GuidanceNorm,
    weights: Option<&Signal>,
    rng: &mut impl Rng,
) -> Result<(Signal, Signal)> {
    schedule.check_t(t)?;
    let post = y_model.evaluate(schedule, y_t, t)?;
    let z = Signal::randn(y_t.shape(), rng);
    let mut next = reverse_mean(schedule.beta(t), y_t, post.score());
    next.axpy(schedule.sigma(t), &z);
    let gap = post.x0hat().sub(y);
    let grad = post.x0hat_vjp(&residual_cotangent(norm, &gap, weights))?;
    next.axpy(-omega, &grad);
    let (_, y0hat) = post.into_parts();
    Ok((next, y0hat))
}

/// Gradient of `mu ||y0hat - A(x0hat)|| + (1 - mu) ||y - A(x0hat)||` with
/// respect to `x_t`, holding `y0hat` constant. `y0hat = None` (or `mu = 0`)
/// gives the plain measurement term; `mu = 1` drops it.
pub fn crafted_gradient(
    post: &Posterior<'_>,
    op: &ForwardOperator,
    y: &Signal,
    y0hat: Option<&Signal>,
    mu: f64,
    norm: GuidanceNorm,
    weights: Option<&Signal>,
) -> Result<Signal> {
    let ax = op.apply(post.x0hat())?;
    crafted_gradient_at(post, op, &ax, y, y0hat, mu, norm, weights)
}

#[allow(clippy::too_many_arguments)]
fn crafted_gradient_at(
    post: &Posterior<'_>,
    op: &ForwardOperator,
    ax: &Signal,
    y: &Signal,
    y0hat: Option<&Signal>,
    mu: f64,
    norm: GuidanceNorm,
    weights: Option<&Signal>,
) -> Result<Signal> {
    let x0hat = post.x0hat();
    let plain = || residual_cotangent(norm, &y.sub(ax), weights);
    let cot = match y0hat {
        Some(y0) if mu > 0.0 => {
            let c_craft = residual_cotangent(norm, &y0.sub(ax), weights);
            if mu == 1.0 {
                c_craft
            } else {
                Signal::lincomb(mu, &c_craft, 1.0 - mu, &plain())
            }
        }
        _ => plain(),
    };
    pull_back(post, op, x0hat, &cot)
}

/// `sqrt(abar) y + sqrt(1 - abar) u` with fresh `u ~ N(0, I)`.
pub fn noised_target(y: &Signal, alpha_bar: f64, rng: &mut impl Rng) -> Signal {
    let u = Signal::randn(y.shape(), rng);
    Signal::lincomb(alpha_bar.sqrt(), y, (1.0 - alpha_bar).sqrt(), &u)
}

struct Step {
    grad: Option<Signal>,
    residual: f64,
}

fn check_finite(s: &Signal, t: usize, quantity: &'static str) -> Result<()> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { t, quantity })
    }
}

fn spectral_ok(s: &Signal) -> bool {
    let sh = s.shape();
    sh.h == sh.w && sh.h >= 2 && sh.h.is_power_of_two()
}

/// Draws `x_0` given `problem.y`. All randomness derives from `config.seed`.
pub fn run(config: &SamplerConfig, problem: &Problem<'_>, diag: &DiagnosticsConfig) -> Result<SampleOutput> {
    let started = Instant::now();
    let Problem { schedule, x_model, y_model, op, y } = *problem;
    let steps = schedule.steps();
    config.validate(steps)?;
    x_model.shape_check(op.in_shape())?;
    y.ensure_shape(op.out_shape())?;
    let crafted = config.method.is_crafted();
    let y_model = match (crafted, y_model) {
        (true, Some(m)) => {
            m.shape_check(op.out_shape())?;
            Some(m)
        }
        (true, None) => {
            return Err(Error::InvalidConfig(format!("{} needs a measurement score model", config.method.name())))
        }
        (false, _) => None,
    };
    if let Some(truth) = &diag.truth {
        truth.ensure_shape(op.in_shape())?;
    }

    let mut x_rng = stream_rng(config.seed, Stream::X);
    let mut y_rng = stream_rng(config.seed, Stream::Y);
    let mut mc_rng = stream_rng(config.seed, Stream::MonteCarlo);
    let mut diag_rng = stream_rng(config.seed, Stream::Diagnostics);

    let weights = (config.method == Method::DpsCmPoisson).then(|| poisson_weights(y, config.poisson_floor));
    let weights = weights.as_ref();
    let norm = config.guidance_norm;

    let mut x = Signal::randn(op.in_shape(), &mut x_rng);
    let mut y_craft = y_model.map(|_| Signal::randn(op.out_shape(), &mut y_rng));
    let mut x_evals = 0usize;
    let mut y_evals = 0usize;
    let mut rows = Vec::new();

    for t in (1..steps).rev() {
        let zeta = config.zeta.at(t);
        let active = crafted && config.accel_cutoff.is_none_or(|c| t >= c);

        let mut y0hat = None;
        if active {
            let (ym, yt) = (y_model.expect("checked above"), y_craft.as_ref().expect("initialised with model"));
            let (next, y0) = craft_step(ym, schedule, yt, y, t, config.omega.at(t), norm, weights, &mut y_rng)?;
            y_evals += 1;
            check_finite(&next, t, "crafted measurement")?;
            y_craft = Some(next);
            y0hat = Some(y0);
        }

        let post = x_model.evaluate(schedule, &x, t)?;
        x_evals += 1;
        let z = Signal::randn(x.shape(), &mut x_rng);
        let mut next = reverse_mean(schedule.beta(t), &x, post.score());
        next.axpy(schedule.sigma(t), &z);

        let mu = if active { config.mu } else { 0.0 };
        let step = guide(config, &post, op, y, y0hat.as_ref(), mu, weights, schedule, t, &mut mc_rng)?;
        if let Some(g) = &step.grad {
            check_finite(g, t, "guidance gradient")?;
            next.axpy(-zeta, g);
        }
        check_finite(&next, t, "x")?;

        if diag.records(t) {
            rows.push(record_row(diag, &post, op, y, y0hat.as_ref(), &step, zeta, x_model, schedule, t, &mut diag_rng)?);
        }
        x = next;
    }

    let final_metrics = match &diag.truth {
        Some(truth) => Some(FinalMetrics {
            psnr: diagnostics::psnr(&x, truth, 1.0)?,
            ssim: diagnostics::ssim(&x, truth, 1.0)?,
            mse: diagnostics::mse(&x, truth)?,
        }),
        None => None,
    };
    let mut echo = config.echo();
    echo.push(("steps".into(), steps.to_string()));
    echo.push(("sigma_mode".into(), schedule.sigma_mode().name().into()));
    echo.push(("operator".into(), op.spec().to_string()));
    echo.push(("prior".into(), x_model.describe()));
    let record = RunRecord {
        method: config.method.name().into(),
        config: echo,
        rows,
        final_metrics,
        x_score_evals: x_evals,
        y_score_evals: y_evals,
        craft_model: y_model.map(|m| m.describe()),
        wall_clock: started.elapsed(),
    };
    Ok(SampleOutput { x0: x, y_craft, record })
}

#[allow(clippy::too_many_arguments)]
fn guide(
    config: &SamplerConfig,
    post: &Posterior<'_>,
    op: &ForwardOperator,
    y: &Signal,
    y0hat: Option<&Signal>,
    mu: f64,
    weights: Option<&Signal>,
    schedule: &NoiseSchedule,
    t: usize,
    mc_rng: &mut ChaCha8Rng,
) -> Result<Step> {
    let x0hat = post.x0hat();
    let ax = op.apply(x0hat)?;
    let r = y.sub(&ax);
    let residual = weighted_norm(&r, None);
    let norm = config.guidance_norm;
    let grad = match config.method {
        Method::Unconditional => None,
        Method::Dps => Some(pull_back(post, op, x0hat, &residual_cotangent(norm, &r, None))?),
        Method::DpsCm | Method::DpsCmPoisson => {
            let y0 = y0hat.filter(|_| mu > 0.0);
            Some(crafted_gradient_at(post, op, &ax, y, y0, mu, norm, weights)?)
        }
        Method::DpsYt => {
            let ab = schedule.alpha_bar(t);
            let n = config.mc_samples;
            let cot = if n == 1 {
                residual_cotangent(norm, &noised_target(y, ab, mc_rng).sub(&ax), None)
            } else {
                // L = log mean_i ||y_t^(i) - A x0hat||^2
                let residuals: Vec<Signal> = (0..n)
                    .map(|_| noised_target(y, ab, mc_rng).sub(&ax))
                    .collect();
                let total: f64 = residuals.iter().map(Signal::norm_sq).sum();
                let mut acc = Signal::zeros(y.shape());
                if total > 0.0 {
                    for ri in &residuals {
                        acc.axpy(2.0 / total, ri);
                    }
                }
                acc
            };
            Some(pull_back(post, op, x0hat, &cot)?)
        }
        Method::LgdMc => Some(lgd_gradient(config, post, op, y, &r, mc_rng)?),
    };
    Ok(Step { grad, residual })
}

/// `L = -log mean_i exp(-||y - A(x0hat + r_t z_i)||^2)`; the gradient is the
/// softmax-weighted sum of the per-draw squared-norm gradients.
fn lgd_gradient(
    config: &SamplerConfig,
    post: &Posterior<'_>,
    op: &ForwardOperator,
    y: &Signal,
    r0: &Signal,
    mc_rng: &mut ChaCha8Rng,
) -> Result<Signal> {
    let x0hat = post.x0hat();
    let mut draws = Vec::with_capacity(config.mc_samples);
    for _ in 0..config.mc_samples {
        let z = Signal::randn(x0hat.shape(), mc_rng);
        let xi = if config.mc_radius == 0.0 {
            x0hat.clone()
        } else {
            Signal::lincomb(1.0, x0hat, config.mc_radius, &z)
        };
        let ri = if config.mc_radius == 0.0 { r0.clone() } else { y.sub(&op.apply(&xi)?) };
        draws.push((xi, ri));
    }
    let losses: Vec<f64> = draws.iter().map(|(_, r)| r.norm_sq()).collect();
    let best = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let unnorm: Vec<f64> = losses.iter().map(|l| (best - l).exp()).collect();
    let z: f64 = unnorm.iter().sum();
    let mut acc: Option<Signal> = None;
    for ((xi, ri), u) in draws.iter().zip(&unnorm) {
        let w = u / z;
        if w == 0.0 {
            continue;
        }
        let back = op.vjp(xi, &residual_cotangent(GuidanceNorm::Squared, ri, None))?;
        match acc.as_mut() {
            None => acc = Some(if w == 1.0 { back } else { back.scaled(w) }),
            Some(a) => a.axpy(w, &back),
        }
    }
    let back = acc.expect("softmax weights cannot all vanish");
    Ok(post.x0hat_vjp(&back)?.scaled(-1.0))
}

#[allow(clippy::too_many_arguments)]
fn record_row(
    diag: &DiagnosticsConfig,
    post: &Posterior<'_>,
    op: &ForwardOperator,
    y: &Signal,
    y0hat: Option<&Signal>,
    step: &Step,
    zeta: f64,
    x_model: &ScoreModel,
    schedule: &NoiseSchedule,
    t: usize,
    rng: &mut ChaCha8Rng,
) -> Result<StepRow> {
    let x0hat = post.x0hat();
    let mut row = StepRow { t, residual: step.residual, ..Default::default() };
    if let Some(y0) = y0hat {
        row.craft_residual = Some(y0.sub(&op.apply(x0hat)?).norm());
        row.craft_gap = Some(y0.sub(y).norm());
    }
    if let Some(truth) = &diag.truth {
        row.recon_mse = Some(diagnostics::recon_error(truth, x0hat)?);
    }
    if diag.eps_error {
        let eps = Signal::randn(x0hat.shape(), rng);
        row.eps_error = Some(diagnostics::eps_error_with(x_model, schedule, x0hat, t, &eps)?);
    }
    if spectral_ok(post.score()) {
        let full = match &step.grad {
            Some(g) => Signal::lincomb(1.0, post.score(), -zeta, g),
            None => post.score().clone(),
        };
        row.freq_ratio = Some(diagnostics::freq_ratio(&full, diag.cutoff)?);
        if let Some(g) = &step.grad {
            row.freq_ratio_guidance = Some(diagnostics::freq_ratio(g, diag.cutoff)?);
        }
    }
    Ok(row)
}

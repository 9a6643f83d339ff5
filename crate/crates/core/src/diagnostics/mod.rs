//! Per-step diagnostics (spectral ratio of the update direction,
//! epsilon-prediction error, reconstruction error) and final image metrics.

mod metrics;
mod record;
mod spectral;

pub use metrics::{mse, psnr, recon_error, ssim, SSIM_SIGMA, SSIM_WINDOW};
pub use record::{FinalMetrics, RunRecord, StepRow, ROW_HEADER};
pub use spectral::{default_cutoff, fft2, fft2_signal, freq_ratio, SpectralSplit};

use rand::Rng;

use crate::error::Result;
use crate::schedule::NoiseSchedule;
use crate::score::ScoreModel;
use crate::signal::Signal;

/// `||eps_theta(x'_t, t) - eps||^2` with `x'_t` a fresh forward sample around
/// the Tweedie mean of `x_t` and `eps_theta = -sqrt(1 - abar_t) * score`.
pub fn eps_prediction_error<R: Rng + ?Sized>(
    model: &ScoreModel,
    schedule: &NoiseSchedule,
    x_t: &Signal,
    t: usize,
    rng: &mut R,
) -> Result<f64> {
    let x0hat = model.tweedie_x0hat(schedule, x_t, t)?;
    let eps = Signal::randn(x_t.shape(), rng);
    eps_error_with(model, schedule, &x0hat, t, &eps)
}

/// As [`eps_prediction_error`] with the Tweedie mean and noise supplied.
pub fn eps_error_with(model: &ScoreModel, schedule: &NoiseSchedule, x0hat: &Signal, t: usize, eps: &Signal) -> Result<f64> {
    let renoised = schedule.forward_sample(x0hat, t, eps)?;
    let score = model.score(schedule, &renoised, t)?;
    let k = -(1.0 - schedule.alpha_bar(t)).sqrt();
    Ok(score.as_slice().iter().zip(eps.as_slice()).map(|(s, e)| (k * s - e).powi(2)).sum())
}

/// What the sampler should log at each recorded step.
#[derive(Debug, Clone)]
pub struct DiagnosticsConfig {
    /// Record every `stride`-th step (always including `t = 1`); 0 disables rows.
    pub stride: usize,
    pub cutoff: usize,
    pub truth: Option<Signal>,
    pub eps_error: bool,
}

impl DiagnosticsConfig {
    pub fn off() -> Self {
        Self { stride: 0, cutoff: 1, truth: None, eps_error: false }
    }

    pub fn every(stride: usize, side: usize) -> Self {
        Self { stride, cutoff: default_cutoff(side), truth: None, eps_error: true }
    }

    pub fn with_truth(mut self, truth: Signal) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn records(&self, t: usize) -> bool {
        self.stride > 0 && (t == 1 || t.is_multiple_of(self.stride))
    }
}

#[cfg(test)]
mod tests;

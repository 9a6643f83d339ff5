//! Discrete variance-preserving noise schedule and the elementary DDPM
//! forward/reverse kinematics shared by every sampler.
//!
//! Timesteps run `1..=T`; `t = 0` denotes clean data. Internally every
//! table has `T + 1` entries with index 0 holding the clean-data values
//! (`beta = 0`, `alpha_bar = 1`, `sigma = 0`).

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::signal::Signal;

pub const DEFAULT_STEPS: usize = 1000;
pub const DEFAULT_BETA_START: f64 = 1e-4;
pub const DEFAULT_BETA_END: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaMode {
    /// `sigma_t = sqrt(beta_t)`.
    #[default]
    Simple,
    /// `sigma_t = sqrt((1 - abar_{t-1}) / (1 - abar_t) * beta_t)`.
    Posterior,
}

impl SigmaMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "simple" => Some(Self::Simple),
            "posterior" => Some(Self::Posterior),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Simple => "simple",
            Self::Posterior => "posterior",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    steps: usize,
    beta: Vec<f64>,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
    sigma: Vec<f64>,
    sigma_mode: SigmaMode,
    deterministic_last_step: bool,
}

impl NoiseSchedule {
    /// Linear `beta` ladder from `beta_start` to `beta_end` inclusive, simple
    /// sigma, noise-free final step.
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        Self::linear_with(steps, beta_start, beta_end, SigmaMode::Simple, true)
    }

    pub fn linear_with(
        steps: usize,
        beta_start: f64,
        beta_end: f64,
        sigma_mode: SigmaMode,
        deterministic_last_step: bool,
    ) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidSchedule(format!("need at least 2 steps, got {steps}")));
        }
        if !(beta_start > 0.0 && beta_start < beta_end && beta_end < 1.0) {
            return Err(Error::InvalidSchedule(format!(
                "require 0 < beta_start < beta_end < 1, got ({beta_start}, {beta_end})"
            )));
        }
        let span = (steps - 1) as f64;
        let mut beta = Vec::with_capacity(steps + 1);
        beta.push(0.0);
        for i in 0..steps {
            beta.push(beta_start + (beta_end - beta_start) * i as f64 / span);
        }
        Self::from_betas(beta, sigma_mode, deterministic_last_step)
    }

    fn from_betas(beta: Vec<f64>, sigma_mode: SigmaMode, deterministic_last_step: bool) -> Result<Self> {
        let steps = beta.len() - 1;
        let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bar = Vec::with_capacity(steps + 1);
        alpha_bar.push(1.0);
        for t in 1..=steps {
            let prev = alpha_bar[t - 1];
            alpha_bar.push(prev * alpha[t]);
        }
        let mut sigma = vec![0.0; steps + 1];
        for t in 1..=steps {
            sigma[t] = match sigma_mode {
                SigmaMode::Simple => beta[t].sqrt(),
                SigmaMode::Posterior => {
                    ((1.0 - alpha_bar[t - 1]) / (1.0 - alpha_bar[t]) * beta[t]).sqrt()
                }
            };
        }
        if deterministic_last_step {
            sigma[1] = 0.0;
        }
        if alpha_bar[steps] <= 0.0 {
            return Err(Error::InvalidSchedule("alpha_bar underflowed to zero".into()));
        }
        Ok(Self { steps, beta, alpha, alpha_bar, sigma, sigma_mode, deterministic_last_step })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn sigma_mode(&self) -> SigmaMode {
        self.sigma_mode
    }

    pub fn deterministic_last_step(&self) -> bool {
        self.deterministic_last_step
    }

    pub fn check_t(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps {
            return Err(Error::TimestepOutOfRange { t, max: self.steps });
        }
        Ok(())
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.beta[t]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bar[t]
    }

    pub fn sigma(&self, t: usize) -> f64 {
        self.sigma[t]
    }

    /// `sqrt(abar_t) * x0 + sqrt(1 - abar_t) * z`
    pub fn forward_sample(&self, x0: &Signal, t: usize, z: &Signal) -> Result<Signal> {
        self.check_t(t)?;
        x0.ensure_same(z)?;
        let ab = self.alpha_bar[t];
        Ok(Signal::lincomb(ab.sqrt(), x0, (1.0 - ab).sqrt(), z))
    }

    /// Mean of the ancestral step, `(x_t + beta_t * score) / sqrt(1 - beta_t)`.
    /// The caller adds `sigma_t * z`.
    pub fn reverse_step_mean(&self, x_t: &Signal, score: &Signal, t: usize) -> Result<Signal> {
        self.check_t(t)?;
        x_t.ensure_same(score)?;
        Ok(reverse_mean(self.beta[t], x_t, score))
    }

    /// CSV with columns `t,beta,alpha_bar,sigma`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,beta,alpha_bar,sigma\n");
        for t in 1..=self.steps {
            let _ = writeln!(out, "{},{},{},{}", t, self.beta[t], self.alpha_bar[t], self.sigma[t]);
        }
        out
    }
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self::linear(DEFAULT_STEPS, DEFAULT_BETA_START, DEFAULT_BETA_END).expect("default schedule is valid")
    }
}

pub(crate) fn reverse_mean(beta: f64, x_t: &Signal, score: &Signal) -> Signal {
    let k = 1.0 / (1.0 - beta).sqrt();
    x_t.zip_map(score, |x, s| k * (x + beta * s))
}

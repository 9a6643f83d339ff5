//! Exact-score priors: the time-`t` diffusion marginal of each prior family is
//! a Gaussian mixture, so the score, the Tweedie mean and its Jacobian are all
//! available in closed form.

mod empirical;
mod fullcov;
mod gmm;
pub mod io;

pub use empirical::EmpiricalPrior;
pub use fullcov::{FullCovMixture, FULL_COV_MAX_DIM};
pub use gmm::GmmPrior;

use std::sync::Arc;

use crate::craft::PushforwardPrior;
use crate::error::{Error, Result};
use crate::schedule::NoiseSchedule;
use crate::signal::{Shape, Signal};

/// Components whose log-responsibility trails the maximum by more than this
/// are treated as exactly zero.
pub(crate) const LOG_RESPONSIBILITY_FLOOR: f64 = -700.0;

#[derive(Debug, Clone)]
pub enum ScoreModel {
    Gmm(Arc<GmmPrior>),
    Empirical(Arc<EmpiricalPrior>),
    FullCov(Arc<FullCovMixture>),
    Pushforward(Arc<PushforwardPrior>),
}

impl From<GmmPrior> for ScoreModel {
    fn from(p: GmmPrior) -> Self {
        Self::Gmm(Arc::new(p))
    }
}

impl From<EmpiricalPrior> for ScoreModel {
    fn from(p: EmpiricalPrior) -> Self {
        Self::Empirical(Arc::new(p))
    }
}

impl From<FullCovMixture> for ScoreModel {
    fn from(p: FullCovMixture) -> Self {
        Self::FullCov(Arc::new(p))
    }
}

impl From<PushforwardPrior> for ScoreModel {
    fn from(p: PushforwardPrior) -> Self {
        Self::Pushforward(Arc::new(p))
    }
}

impl ScoreModel {
    pub fn shape(&self) -> Shape {
        match self {
            Self::Gmm(p) => p.shape(),
            Self::Empirical(p) => p.shape(),
            Self::FullCov(p) => p.shape(),
            Self::Pushforward(p) => p.model().shape(),
        }
    }

    pub fn shape_check(&self, expected: Shape) -> Result<()> {
        let actual = self.shape();
        if actual == expected {
            Ok(())
        } else {
            Err(Error::ShapeMismatch { expected, actual })
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Gmm(p) => format!("gmm(k={})", p.len()),
            Self::Empirical(p) => format!("empirical(n={})", p.len()),
            Self::FullCov(p) => format!("fullcov-gmm(k={})", p.len()),
            Self::Pushforward(p) => p.describe(),
        }
    }

    /// Same underlying prior object (shared-model mode check).
    pub fn ptr_eq(&self, other: &ScoreModel) -> bool {
        match (self, other) {
            (Self::Gmm(a), Self::Gmm(b)) => Arc::ptr_eq(a, b),
            (Self::Empirical(a), Self::Empirical(b)) => Arc::ptr_eq(a, b),
            (Self::FullCov(a), Self::FullCov(b)) => Arc::ptr_eq(a, b),
            (Self::Pushforward(a), Self::Pushforward(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }

    /// Evaluate everything the samplers need at `(x, t)` in one pass over the
    /// components.
    pub fn evaluate<'m>(&'m self, schedule: &NoiseSchedule, x: &Signal, t: usize) -> Result<Posterior<'m>> {
        schedule.check_t(t)?;
        x.ensure_shape(self.shape())?;
        let ab = schedule.alpha_bar(t);
        let geom = Geometry { a: ab.sqrt(), s: 1.0 - ab };
        let (score, jac) = match self {
            Self::Gmm(p) => p.evaluate(geom, x),
            Self::Empirical(p) => p.evaluate(geom, x),
            Self::FullCov(p) => p.evaluate(geom, x),
            Self::Pushforward(p) => return p.model().evaluate(schedule, x, t),
        };
        let x0hat = tweedie_from_score(geom, x, &score);
        Ok(Posterior { geom, score, x0hat, jac })
    }

    /// `grad_x log p_t(x)` of the exact time-`t` marginal.
    pub fn score(&self, schedule: &NoiseSchedule, x: &Signal, t: usize) -> Result<Signal> {
        Ok(self.evaluate(schedule, x, t)?.score)
    }

    /// Tweedie estimate of `E[x0 | x_t]`.
    pub fn tweedie_x0hat(&self, schedule: &NoiseSchedule, x_t: &Signal, t: usize) -> Result<Signal> {
        Ok(self.evaluate(schedule, x_t, t)?.x0hat)
    }

    /// `v^T d x0hat / d x_t`.
    pub fn x0hat_vjp(&self, schedule: &NoiseSchedule, x_t: &Signal, t: usize, v: &Signal) -> Result<Signal> {
        self.evaluate(schedule, x_t, t)?.x0hat_vjp(v)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Geometry {
    /// `sqrt(abar_t)`
    pub a: f64,
    /// `1 - abar_t`
    pub s: f64,
}

pub(crate) fn tweedie_from_score(g: Geometry, x: &Signal, score: &Signal) -> Signal {
    let inv = 1.0 / g.a;
    x.zip_map(score, |xi, si| (xi + g.s * si) * inv)
}

/// Softmax of log-weights with the underflow floor applied.
pub(crate) fn responsibilities(logw: &[f64]) -> Vec<f64> {
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logw
        .iter()
        .map(|&l| if l - max < LOG_RESPONSIBILITY_FLOOR { 0.0 } else { (l - max).exp() })
        .collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}

#[derive(Debug, Clone)]
pub(crate) enum Jacobian<'m> {
    /// `J = (a / s) * Cov_w(points)`
    Empirical { prior: &'m EmpiricalPrior, weights: Vec<f64>, mean: Vec<f64> },
    /// `J = (1/a) [I + s H]` with `H = -sum_k w_k / var_k I + Cov_w(g)`
    Gmm { weights: Vec<f64>, inv_var_sum: f64, grads: Vec<Vec<f64>>, mean_grad: Vec<f64> },
    /// As `Gmm` with full precision matrices.
    FullCov { weights: Vec<f64>, precisions: Vec<nalgebra::DMatrix<f64>>, grads: Vec<Vec<f64>>, mean_grad: Vec<f64> },
}

/// Score, Tweedie mean and Jacobian of the Tweedie mean at one `(x, t)`.
#[derive(Debug, Clone)]
pub struct Posterior<'m> {
    geom: Geometry,
    score: Signal,
    x0hat: Signal,
    jac: Jacobian<'m>,
}

impl Posterior<'_> {
    pub fn score(&self) -> &Signal {
        &self.score
    }

    pub fn x0hat(&self) -> &Signal {
        &self.x0hat
    }

    pub fn into_parts(self) -> (Signal, Signal) {
        (self.score, self.x0hat)
    }

    pub fn x0hat_vjp(&self, v: &Signal) -> Result<Signal> {
        v.ensure_shape(self.score.shape())?;
        let Geometry { a, s } = self.geom;
        let vs = v.as_slice();
        let out = match &self.jac {
            Jacobian::Empirical { prior, weights, mean } => {
                let mut acc = vec![0.0; vs.len()];
                let mut centered = vec![0.0; vs.len()];
                for (i, &w) in weights.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let p = prior.point(i);
                    let mut proj = 0.0;
                    for ((c, &pi), &mi) in centered.iter_mut().zip(p).zip(mean) {
                        *c = pi - mi;
                    }
                    for (c, &vi) in centered.iter().zip(vs) {
                        proj += c * vi;
                    }
                    let k = w * proj;
                    for (o, c) in acc.iter_mut().zip(&centered) {
                        *o += k * c;
                    }
                }
                let scale = a / s;
                acc.iter_mut().for_each(|o| *o *= scale);
                acc
            }
            Jacobian::Gmm { weights, inv_var_sum, grads, mean_grad } => {
                let mut hv: Vec<f64> = vs.iter().map(|vi| -inv_var_sum * vi).collect();
                add_weighted_cov(&mut hv, weights, grads, mean_grad, vs);
                vs.iter().zip(&hv).map(|(vi, h)| (vi + s * h) / a).collect()
            }
            Jacobian::FullCov { weights, precisions, grads, mean_grad } => {
                let vv = nalgebra::DVector::from_column_slice(vs);
                let mut hv = vec![0.0; vs.len()];
                for (w, p) in weights.iter().zip(precisions) {
                    if *w == 0.0 {
                        continue;
                    }
                    let pv = p * &vv;
                    for (h, q) in hv.iter_mut().zip(pv.iter()) {
                        *h -= w * q;
                    }
                }
                add_weighted_cov(&mut hv, weights, grads, mean_grad, vs);
                vs.iter().zip(&hv).map(|(vi, h)| (vi + s * h) / a).collect()
            }
        };
        Signal::from_vec(v.shape(), out)
    }
}

/// `acc += sum_k w_k (g_k - gbar) ((g_k - gbar) . v)`
fn add_weighted_cov(acc: &mut [f64], weights: &[f64], grads: &[Vec<f64>], mean: &[f64], v: &[f64]) {
    for (w, g) in weights.iter().zip(grads) {
        if *w == 0.0 {
            continue;
        }
        let proj: f64 = g.iter().zip(mean).zip(v).map(|((gi, mi), vi)| (gi - mi) * vi).sum();
        let k = w * proj;
        for ((o, gi), mi) in acc.iter_mut().zip(g).zip(mean) {
            *o += k * (gi - mi);
        }
    }
}

//! Measurement-consistency losses and their gradients through the Tweedie mean.

use crate::error::Result;
use crate::operators::ForwardOperator;
use crate::score::Posterior;
use crate::signal::Signal;

use super::config::GuidanceNorm;

/// Diagonal weighting `1 / max(y_i, floor)` for Poisson-aware norms.
pub fn poisson_weights(y: &Signal, floor: f64) -> Signal {
    y.map(|v| 1.0 / v.max(floor))
}

/// `||r||` (or `||r||_W` with diagonal weights `W`).
pub fn weighted_norm(r: &Signal, weights: Option<&Signal>) -> f64 {
    match weights {
        None => r.norm(),
        Some(w) => r.as_slice().iter().zip(w.as_slice()).map(|(r, w)| w * r * r).sum::<f64>().sqrt(),
    }
}

/// `dL/dr` for `L = ||r||_W` or `||r||_W^2`. The unsquared gradient is 0 at `r = 0`.
pub fn residual_cotangent(norm: GuidanceNorm, r: &Signal, weights: Option<&Signal>) -> Signal {
    let wr = match weights {
        None => r.clone(),
        Some(w) => r.zip_map(w, |r, w| r * w),
    };
    match norm {
        GuidanceNorm::Squared => wr.scaled(2.0),
        GuidanceNorm::Unsquared => {
            let n = weighted_norm(r, weights);
            if n > 0.0 {
                wr.scaled(1.0 / n)
            } else {
                Signal::zeros(r.shape())
            }
        }
    }
}

/// Pulls a cotangent on `r = target - A(x0hat)` back to `x_t`.
pub(crate) fn pull_back(post: &Posterior<'_>, op: &ForwardOperator, x0hat: &Signal, cot: &Signal) -> Result<Signal> {
    let back = op.vjp(x0hat, cot)?;
    Ok(post.x0hat_vjp(&back)?.scaled(-1.0))
}

/// `grad_{x_t} L(target - A(x0hat(x_t)))` for a posterior already evaluated at `x_t`.
pub fn guidance_gradient(
    post: &Posterior<'_>,
    op: &ForwardOperator,
    target: &Signal,
    norm: GuidanceNorm,
    weights: Option<&Signal>,
) -> Result<Signal> {
    let x0hat = post.x0hat();
    let r = target.sub(&op.apply(x0hat)?);
    pull_back(post, op, x0hat, &residual_cotangent(norm, &r, weights))
}

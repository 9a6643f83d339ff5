use rand::Rng;
use rand_distr::StandardNormal;

use super::{responsibilities, Geometry, Jacobian};
use crate::error::{Error, Result};
use crate::signal::{Shape, Signal};

/// Mixture of isotropic Gaussians `sum_k w_k N(mu_k, v_k I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmPrior {
    shape: Shape,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    means: Vec<Signal>,
    variances: Vec<f64>,
}

impl GmmPrior {
    pub fn new(weights: Vec<f64>, means: Vec<Signal>, variances: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidPrior("mixture needs at least one component".into()));
        }
        if weights.len() != means.len() || weights.len() != variances.len() {
            return Err(Error::InvalidPrior(format!(
                "component arrays disagree: {} weights, {} means, {} variances",
                weights.len(),
                means.len(),
                variances.len()
            )));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidPrior("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPrior(format!("weights sum to {total}, expected 1")));
        }
        if variances.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidPrior("variances must be strictly positive".into()));
        }
        let shape = means[0].shape();
        if let Some(m) = means.iter().find(|m| m.shape() != shape) {
            return Err(Error::InvalidPrior(format!("mean shape {} differs from {}", m.shape(), shape)));
        }
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Self { shape, weights, log_weights, means, variances })
    }

    /// Single standard normal component, `N(0, I)`.
    pub fn standard_normal(shape: Shape) -> Self {
        Self::new(vec![1.0], vec![Signal::zeros(shape)], vec![1.0]).expect("valid")
    }

    /// Equal-weight components sharing one variance.
    pub fn uniform(means: Vec<Signal>, variance: f64) -> Result<Self> {
        let k = means.len();
        if k == 0 {
            return Err(Error::InvalidPrior("mixture needs at least one component".into()));
        }
        let w = vec![1.0 / k as f64; k];
        // renormalize so the sum is 1 within rounding for any k
        let total: f64 = w.iter().sum();
        let w = w.into_iter().map(|v| v / total).collect();
        Self::new(w, means, vec![variance; k])
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Signal] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Signal {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = self.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                k = i;
                break;
            }
        }
        let sd = self.variances[k].sqrt();
        self.means[k].map(|m| m + sd * rng.sample::<f64, _>(StandardNormal))
    }

    pub(crate) fn evaluate(&self, g: Geometry, x: &Signal) -> (Signal, Jacobian<'static>) {
        let xs = x.as_slice();
        let dim = xs.len() as f64;
        let mut logw = Vec::with_capacity(self.len());
        let mut grads = Vec::with_capacity(self.len());
        let mut vars = Vec::with_capacity(self.len());
        for k in 0..self.len() {
            let var = g.a * g.a * self.variances[k] + g.s;
            let mu = self.means[k].as_slice();
            let grad: Vec<f64> = xs.iter().zip(mu).map(|(xi, m)| (g.a * m - xi) / var).collect();
            let d2: f64 = xs.iter().zip(mu).map(|(xi, m)| (xi - g.a * m).powi(2)).sum();
            logw.push(self.log_weights[k] - 0.5 * dim * var.ln() - 0.5 * d2 / var);
            grads.push(grad);
            vars.push(var);
        }
        let weights = responsibilities(&logw);
        let mut mean_grad = vec![0.0; xs.len()];
        let mut inv_var_sum = 0.0;
        for ((w, grad), var) in weights.iter().zip(&grads).zip(&vars) {
            if *w == 0.0 {
                continue;
            }
            inv_var_sum += w / var;
            for (m, gi) in mean_grad.iter_mut().zip(grad) {
                *m += w * gi;
            }
        }
        let score = Signal::from_vec(x.shape(), mean_grad.clone()).expect("shape");
        (score, Jacobian::Gmm { weights, inv_var_sum, grads, mean_grad })
    }
}

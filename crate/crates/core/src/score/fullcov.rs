use nalgebra::{DMatrix, DVector};

use super::{responsibilities, Geometry, Jacobian};
use crate::error::{Error, Result};
use crate::signal::{Shape, Signal};

/// Largest dimension for which full covariances are accepted.
pub const FULL_COV_MAX_DIM: usize = 64;

/// Gaussian mixture with full component covariances, for small dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct FullCovMixture {
    shape: Shape,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    means: Vec<Signal>,
    covariances: Vec<DMatrix<f64>>,
}

impl FullCovMixture {
    pub fn new(weights: Vec<f64>, means: Vec<Signal>, covariances: Vec<DMatrix<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() || weights.len() != covariances.len() {
            return Err(Error::InvalidPrior("mismatched or empty component arrays".into()));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w > 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPrior(format!("weights must be positive and sum to 1 (sum {total})")));
        }
        let shape = means[0].shape();
        let dim = shape.len();
        if dim > FULL_COV_MAX_DIM {
            return Err(Error::Unsupported(format!(
                "full-covariance mixture limited to dim <= {FULL_COV_MAX_DIM}, got {dim}"
            )));
        }
        for (m, c) in means.iter().zip(&covariances) {
            if m.shape() != shape || c.nrows() != dim || c.ncols() != dim {
                return Err(Error::InvalidPrior("component mean/covariance dimensions disagree".into()));
            }
        }
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Self { shape, weights, log_weights, means, covariances })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Signal] {
        &self.means
    }

    pub fn covariances(&self) -> &[DMatrix<f64>] {
        &self.covariances
    }

    pub(crate) fn evaluate(&self, g: Geometry, x: &Signal) -> (Signal, Jacobian<'static>) {
        let dim = self.shape.len();
        let xv = DVector::from_column_slice(x.as_slice());
        let mut logw = Vec::with_capacity(self.len());
        let mut grads = Vec::with_capacity(self.len());
        let mut precisions = Vec::with_capacity(self.len());
        for k in 0..self.len() {
            let mut c = &self.covariances[k] * (g.a * g.a);
            for i in 0..dim {
                c[(i, i)] += g.s;
            }
            let chol = c.cholesky().expect("a^2 Sigma + s I is positive definite for s > 0");
            let logdet: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let prec = chol.inverse();
            let mu = DVector::from_column_slice(self.means[k].as_slice());
            let diff = &mu * g.a - &xv;
            let grad = &prec * &diff;
            logw.push(self.log_weights[k] - 0.5 * logdet - 0.5 * diff.dot(&grad));
            grads.push(grad.as_slice().to_vec());
            precisions.push(prec);
        }
        let weights = responsibilities(&logw);
        let mut mean_grad = vec![0.0; dim];
        for (w, grad) in weights.iter().zip(&grads) {
            if *w == 0.0 {
                continue;
            }
            for (m, gi) in mean_grad.iter_mut().zip(grad) {
                *m += w * gi;
            }
        }
        let score = Signal::from_vec(x.shape(), mean_grad.clone()).expect("shape");
        (score, Jacobian::FullCov { weights, precisions, grads, mean_grad })
    }
}

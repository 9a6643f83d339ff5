//! Measurement-space score models for the crafted trajectory.
//!
//! When the operator keeps the signal shape the crafted trajectory reuses the
//! image-space model unchanged. When a linear operator changes the shape, the
//! prior is pushed through it exactly: mixture means become `A mu_k` (or
//! `A d_i`) and the measurement noise variance joins the component variance.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::{ForwardOperator, NoiseModel, OperatorKind};
use crate::score::{EmpiricalPrior, FullCovMixture, GmmPrior, ScoreModel};
use crate::score::FULL_COV_MAX_DIM;
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CraftMode {
    Shared,
    Pushforward,
    /// Shared when the operator preserves shape, pushforward otherwise.
    #[default]
    Auto,
}

impl CraftMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "shared" => Some(Self::Shared),
            "pushforward" => Some(Self::Pushforward),
            "auto" => Some(Self::Auto),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Shared => "shared",
            Self::Pushforward => "pushforward",
            Self::Auto => "auto",
        }
    }
}

/// How the generally non-isotropic pushed covariance `A (v I) A^T` is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceMode {
    /// Trace-average isotropic variance `v ||A||_F^2 / m`.
    #[default]
    Isotropic,
    /// Full covariance; measurement dimension must be at most 64.
    Exact,
}

impl CovarianceMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "isotropic" => Some(Self::Isotropic),
            "exact" => Some(Self::Exact),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Isotropic => "isotropic",
            Self::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PushforwardPrior {
    base: String,
    op: OperatorKind,
    meas_noise_var: f64,
    covariance: CovarianceMode,
    model: ScoreModel,
}

impl PushforwardPrior {
    pub fn build(base: &ScoreModel, op: &ForwardOperator, meas_noise_var: f64, covariance: CovarianceMode) -> Result<Self> {
        if !op.is_linear() {
            return Err(Error::Unsupported(format!(
                "pushforward prior needs a linear operator; {} changes the measurement modality",
                op.kind().label()
            )));
        }
        if !(meas_noise_var >= 0.0) {
            return Err(Error::InvalidPrior(format!("measurement noise variance must be >= 0, got {meas_noise_var}")));
        }
        let push = |m: &Signal| op.apply(m);
        let model: ScoreModel = match base {
            ScoreModel::Empirical(p) => {
                let pts = p.points().map(|d| push(&d)).collect::<Result<Vec<_>>>()?;
                if meas_noise_var == 0.0 {
                    EmpiricalPrior::new(pts)?.into()
                } else {
                    GmmPrior::uniform(pts, meas_noise_var)?.into()
                }
            }
            ScoreModel::Gmm(p) => {
                let means = p.means().iter().map(push).collect::<Result<Vec<_>>>()?;
                match covariance {
                    CovarianceMode::Isotropic => {
                        let gain = frobenius_sq(op)? / op.out_shape().len() as f64;
                        let vars = p.variances().iter().map(|v| v * gain + meas_noise_var).collect();
                        GmmPrior::new(p.weights().to_vec(), means, vars)?.into()
                    }
                    CovarianceMode::Exact => {
                        let a = dense_for_exact(op)?;
                        let aat = &a * a.transpose();
                        let covs = p.variances().iter().map(|v| with_noise(&aat * *v, meas_noise_var)).collect();
                        FullCovMixture::new(p.weights().to_vec(), means, covs)?.into()
                    }
                }
            }
            ScoreModel::FullCov(p) => {
                let a = dense_for_exact(op)?;
                let means = p.means().iter().map(push).collect::<Result<Vec<_>>>()?;
                let covs = p.covariances().iter().map(|c| with_noise(&a * c * a.transpose(), meas_noise_var)).collect();
                FullCovMixture::new(p.weights().to_vec(), means, covs)?.into()
            }
            ScoreModel::Pushforward(_) => {
                return Err(Error::Unsupported("pushforward of a pushforward prior".into()));
            }
        };
        Ok(Self { base: base.describe(), op: op.kind(), meas_noise_var, covariance, model })
    }

    pub fn model(&self) -> &ScoreModel {
        &self.model
    }

    pub fn covariance(&self) -> CovarianceMode {
        self.covariance
    }

    pub fn meas_noise_var(&self) -> f64 {
        self.meas_noise_var
    }

    pub fn describe(&self) -> String {
        format!(
            "pushforward({} through {}, noise_var={}, cov={})",
            self.base,
            self.op.label(),
            self.meas_noise_var,
            self.covariance.name()
        )
    }
}

fn with_noise(mut c: DMatrix<f64>, var: f64) -> DMatrix<f64> {
    for i in 0..c.nrows() {
        c[(i, i)] += var;
    }
    c
}

fn dense_for_exact(op: &ForwardOperator) -> Result<DMatrix<f64>> {
    if op.out_shape().len() > FULL_COV_MAX_DIM {
        return Err(Error::Unsupported(format!(
            "exact pushforward covariance limited to measurement dim <= {}, got {}",
            FULL_COV_MAX_DIM,
            op.out_shape().len()
        )));
    }
    op.dense_matrix()
}

/// `||A||_F^2` by probing the operator with input basis vectors.
fn frobenius_sq(op: &ForwardOperator) -> Result<f64> {
    let mut e = Signal::zeros(op.in_shape());
    let mut total = 0.0;
    for j in 0..e.len() {
        e[j] = 1.0;
        total += op.apply(&e)?.norm_sq();
        e[j] = 0.0;
    }
    Ok(total)
}

/// Which measurement-space model the crafted trajectory ended up with.
#[derive(Debug, Clone)]
pub struct MeasurementModel {
    pub model: ScoreModel,
    pub mode: CraftMode,
}

impl MeasurementModel {
    pub fn describe(&self) -> String {
        match self.mode {
            CraftMode::Shared => format!("shared({})", self.model.describe()),
            _ => self.model.describe(),
        }
    }
}

pub fn make_measurement_model(
    x_model: &ScoreModel,
    op: &ForwardOperator,
    noise: &NoiseModel,
    mode: CraftMode,
    covariance: CovarianceMode,
) -> Result<MeasurementModel> {
    let resolved = match mode {
        CraftMode::Auto if op.is_shape_preserving() => CraftMode::Shared,
        CraftMode::Auto => CraftMode::Pushforward,
        m => m,
    };
    match resolved {
        CraftMode::Shared => {
            if !op.is_shape_preserving() {
                return Err(Error::Unsupported(format!(
                    "shared crafted model needs a shape-preserving operator; {} maps {} to {}",
                    op.kind().label(),
                    op.in_shape(),
                    op.out_shape()
                )));
            }
            Ok(MeasurementModel { model: x_model.clone(), mode: CraftMode::Shared })
        }
        _ => {
            let p = PushforwardPrior::build(x_model, op, noise.variance_hint(), covariance)?;
            Ok(MeasurementModel { model: p.into(), mode: CraftMode::Pushforward })
        }
    }
}

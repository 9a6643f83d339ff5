use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::signal::Signal;

pub const DEFAULT_POISSON_SCALE: f64 = 255.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    Gaussian { sigma: f64 },
    /// `y = Poisson(lambda * scale * max(Ax, 0)) / (lambda * scale)`.
    Poisson { lambda: f64, scale: f64 },
}

impl NoiseModel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gaussian noise sigma must be >= 0, got {sigma}")));
        }
        Ok(Self::Gaussian { sigma })
    }

    pub fn poisson(lambda: f64, scale: f64) -> Result<Self> {
        if !(lambda > 0.0 && scale > 0.0) {
            return Err(Error::InvalidConfig(format!("poisson lambda and scale must be > 0, got {lambda}, {scale}")));
        }
        Ok(Self::Poisson { lambda, scale })
    }

    pub fn is_poisson(&self) -> bool {
        matches!(self, Self::Poisson { .. })
    }

    /// Variance of the additive noise the crafted-trajectory prior absorbs.
    /// For Poisson this is the variance at unit intensity, `1 / (lambda * scale)`.
    pub fn variance_hint(&self) -> f64 {
        match *self {
            Self::Gaussian { sigma } => sigma * sigma,
            Self::Poisson { lambda, scale } => 1.0 / (lambda * scale),
        }
    }

    pub fn corrupt<R: Rng + ?Sized>(&self, clean: &Signal, rng: &mut R) -> Signal {
        match *self {
            Self::Gaussian { sigma } => {
                if sigma == 0.0 {
                    return clean.clone();
                }
                clean.map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal))
            }
            Self::Poisson { lambda, scale } => {
                let gain = lambda * scale;
                clean.map(|v| {
                    let rate = gain * v.max(0.0);
                    if rate <= 0.0 {
                        0.0
                    } else {
                        Poisson::new(rate).expect("positive rate").sample(rng) / gain
                    }
                })
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Gaussian { sigma } => format!("gaussian(sigma={sigma})"),
            Self::Poisson { lambda, scale } => format!("poisson(lambda={lambda},scale={scale})"),
        }
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Unconditional,
    Dps,
    DpsYt,
    LgdMc,
    DpsCm,
    DpsCmPoisson,
}

impl Method {
    pub const ALL: [Method; 6] = [Self::Unconditional, Self::Dps, Self::DpsYt, Self::LgdMc, Self::DpsCm, Self::DpsCmPoisson];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Unconditional => "unconditional",
            Self::Dps => "dps",
            Self::DpsYt => "dps_yt",
            Self::LgdMc => "lgd_mc",
            Self::DpsCm => "dps_cm",
            Self::DpsCmPoisson => "dps_cm_poisson",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Runs a crafted-measurement trajectory alongside `x`.
    pub fn is_crafted(&self) -> bool {
        matches!(self, Self::DpsCm | Self::DpsCmPoisson)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GuidanceNorm {
    /// `||r||`, as in the executable algorithm.
    #[default]
    Unsquared,
    /// `||r||^2`
    Squared,
}

impl GuidanceNorm {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "unsquared" => Some(Self::Unsquared),
            "squared" => Some(Self::Squared),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Unsquared => "unsquared",
            Self::Squared => "squared",
        }
    }
}

/// Step size as a function of `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum StepSize {
    Constant(f64),
    /// Indexed by `t`; entry 0 is unused.
    PerStep(Vec<f64>),
}

impl StepSize {
    pub fn at(&self, t: usize) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::PerStep(v) => v[t],
        }
    }

    fn validate(&self, name: &str, steps: usize) -> Result<()> {
        let ok = match self {
            Self::Constant(v) => *v >= 0.0 && v.is_finite(),
            Self::PerStep(v) => v.len() == steps + 1 && v.iter().all(|x| *x >= 0.0 && x.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("{name} must be finite and >= 0 for every t in 1..={steps}")))
        }
    }

    fn describe(&self) -> String {
        match self {
            Self::Constant(v) => v.to_string(),
            Self::PerStep(_) => "per-step".into(),
        }
    }
}

pub const DEFAULT_POISSON_FLOOR: f64 = 1e-3;
pub const DEFAULT_MC_RADIUS: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub method: Method,
    /// Guidance step for `x` (the DPS step `rho` when `method = Dps`).
    pub zeta: StepSize,
    /// Guidance step for the crafted trajectory.
    pub omega: StepSize,
    /// Weight of the crafted term in the `x` guidance.
    pub mu: f64,
    /// Monte-Carlo draws for LGD-MC and multi-sample DPS_yt.
    pub mc_samples: usize,
    /// LGD-MC proposal standard deviation `r_t` around the Tweedie mean.
    pub mc_radius: f64,
    /// Below this `t` the crafted term is switched off and its trajectory stops.
    pub accel_cutoff: Option<usize>,
    /// Floor in the Poisson weighting `1 / max(y_i, floor)`.
    pub poisson_floor: f64,
    pub guidance_norm: GuidanceNorm,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            zeta: StepSize::Constant(1.0),
            omega: StepSize::Constant(1.0),
            mu: 0.5,
            mc_samples: 1,
            mc_radius: DEFAULT_MC_RADIUS,
            accel_cutoff: None,
            poisson_floor: DEFAULT_POISSON_FLOOR,
            guidance_norm: GuidanceNorm::Unsquared,
            seed: 0,
        }
    }

    pub fn zeta(mut self, v: f64) -> Self {
        self.zeta = StepSize::Constant(v);
        self
    }

    pub fn omega(mut self, v: f64) -> Self {
        self.omega = StepSize::Constant(v);
        self
    }

    pub fn mu(mut self, v: f64) -> Self {
        self.mu = v;
        self
    }

    pub fn seed(mut self, s: u64) -> Self {
        self.seed = s;
        self
    }

    pub fn mc(mut self, samples: usize, radius: f64) -> Self {
        self.mc_samples = samples;
        self.mc_radius = radius;
        self
    }

    pub fn norm(mut self, n: GuidanceNorm) -> Self {
        self.guidance_norm = n;
        self
    }

    pub fn cutoff(mut self, c: Option<usize>) -> Self {
        self.accel_cutoff = c;
        self
    }

    pub fn validate(&self, steps: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::InvalidConfig(format!("mu must lie in [0, 1], got {}", self.mu)));
        }
        self.zeta.validate("zeta", steps)?;
        self.omega.validate("omega", steps)?;
        if self.mc_samples == 0 {
            return Err(Error::InvalidConfig("mc_samples must be >= 1".into()));
        }
        if !(self.mc_radius >= 0.0 && self.mc_radius.is_finite()) {
            return Err(Error::InvalidConfig(format!("mc_radius must be >= 0, got {}", self.mc_radius)));
        }
        if let Some(c) = self.accel_cutoff {
            if c > steps {
                return Err(Error::InvalidConfig(format!("accel_cutoff {c} exceeds {steps} steps")));
            }
        }
        if !(self.poisson_floor > 0.0) {
            return Err(Error::InvalidConfig(format!("poisson_floor must be > 0, got {}", self.poisson_floor)));
        }
        Ok(())
    }

    /// Every setting as ordered `key=value` pairs for run records.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("method", self.method.name().to_string()),
            ("zeta", self.zeta.describe()),
            ("omega", self.omega.describe()),
            ("mu", self.mu.to_string()),
            ("mc_samples", self.mc_samples.to_string()),
            ("mc_radius", self.mc_radius.to_string()),
            ("accel_cutoff", self.accel_cutoff.map_or("none".into(), |c| c.to_string())),
            ("guidance_norm", self.guidance_norm.name().to_string()),
            ("seed", self.seed.to_string()),
        ];
        if self.method == Method::DpsCmPoisson {
            v.push(("poisson_weight", format!("1/max(y,{})", self.poisson_floor)));
        }
        v.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

/// Independent random streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    X = 1,
    Y = 2,
    MonteCarlo = 3,
    Diagnostics = 4,
    Measurement = 5,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

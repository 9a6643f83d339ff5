//! Forward measurement operators with exact adjoints, and the noise models
//! that turn clean measurements into observations.
//!
//! Convolutions use circular (periodic) boundaries.

mod kernel;
mod noise;

pub use kernel::{cubic_weight, AxisResampler, Kernel, CATMULL_ROM_A};
pub use noise::{NoiseModel, DEFAULT_POISSON_SCALE};

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::signal::{Shape, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Identity,
    GaussianBlur,
    MotionBlur,
    Downsample4x,
    RandomMask,
    BoxMask,
    NonlinearBlur,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 7] = [
        Self::Identity,
        Self::GaussianBlur,
        Self::MotionBlur,
        Self::Downsample4x,
        Self::RandomMask,
        Self::BoxMask,
        Self::NonlinearBlur,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::GaussianBlur => "gaussian_blur",
            Self::MotionBlur => "motion_blur",
            Self::Downsample4x => "downsample4x",
            Self::RandomMask => "random_mask",
            Self::BoxMask => "box_mask",
            Self::NonlinearBlur => "nonlinear_blur",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self, Self::NonlinearBlur)
    }

    /// Labels used in run outputs; the nonlinear kind is an analytic
    /// stand-in, not a learned blur model.
    pub fn label(&self) -> &'static str {
        match self {
            Self::NonlinearBlur => "nonlinear-surrogate",
            k => k.name(),
        }
    }
}

/// Operator kind plus parameters, as written in experiment configs.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    Identity,
    GaussianBlur { size: usize, sigma: f64 },
    MotionBlur { size: usize, length: f64, angle: f64 },
    Downsample4x,
    RandomMask { fraction: f64 },
    /// Centered square box of side `size` (pixels are zeroed inside).
    BoxMask { size: usize },
    NonlinearBlur { gamma: f64, size: usize, sigma: f64 },
}

fn odd_at_least_one(x: f64) -> usize {
    let r = x.round().max(1.0) as usize;
    if r.is_multiple_of(2) { r + 1 } else { r }
}

impl OperatorSpec {
    pub fn kind(&self) -> OperatorKind {
        match self {
            Self::Identity => OperatorKind::Identity,
            Self::GaussianBlur { .. } => OperatorKind::GaussianBlur,
            Self::MotionBlur { .. } => OperatorKind::MotionBlur,
            Self::Downsample4x => OperatorKind::Downsample4x,
            Self::RandomMask { .. } => OperatorKind::RandomMask,
            Self::BoxMask { .. } => OperatorKind::BoxMask,
            Self::NonlinearBlur { .. } => OperatorKind::NonlinearBlur,
        }
    }

    /// Defaults for an `side x side` image, scaled from the 256-pixel
    /// reference setting (9x9 / sigma 1.0 blur, 16-pixel box at side 32).
    pub fn default_for(kind: OperatorKind, side: usize) -> Self {
        let s = side as f64 / 32.0;
        match kind {
            OperatorKind::Identity => Self::Identity,
            OperatorKind::GaussianBlur => Self::GaussianBlur { size: odd_at_least_one(9.0 * s), sigma: s },
            OperatorKind::MotionBlur => {
                let size = odd_at_least_one(9.0 * s);
                Self::MotionBlur { size, length: size as f64, angle: std::f64::consts::FRAC_PI_4 }
            }
            OperatorKind::Downsample4x => Self::Downsample4x,
            OperatorKind::RandomMask => Self::RandomMask { fraction: 0.7 },
            OperatorKind::BoxMask => Self::BoxMask { size: side / 2 },
            OperatorKind::NonlinearBlur => Self::NonlinearBlur { gamma: 2.2, size: odd_at_least_one(5.0 * s), sigma: s },
        }
    }

    /// Flat `key=value` pairs, `kind` first.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut v = vec![("kind".to_string(), self.kind().name().to_string())];
        let mut push = |k: &str, val: String| v.push((k.to_string(), val));
        match self {
            Self::Identity | Self::Downsample4x => {}
            Self::GaussianBlur { size, sigma } => {
                push("kernel_size", size.to_string());
                push("blur_sigma", sigma.to_string());
            }
            Self::MotionBlur { size, length, angle } => {
                push("kernel_size", size.to_string());
                push("motion_length", length.to_string());
                push("motion_angle", angle.to_string());
            }
            Self::RandomMask { fraction } => push("mask_fraction", fraction.to_string()),
            Self::BoxMask { size } => push("box_size", size.to_string()),
            Self::NonlinearBlur { gamma, size, sigma } => {
                push("gamma", gamma.to_string());
                push("kernel_size", size.to_string());
                push("blur_sigma", sigma.to_string());
            }
        }
        v
    }

    /// Parse from config keys; missing parameters take [`Self::default_for`].
    pub fn from_pairs(pairs: &BTreeMap<String, String>, side: usize) -> Result<Self> {
        let kind_name = pairs.get("kind").ok_or_else(|| Error::InvalidOperator("missing operator kind".into()))?;
        let kind = OperatorKind::parse(kind_name)
            .ok_or_else(|| Error::InvalidOperator(format!("unknown operator kind {kind_name:?}")))?;
        fn get<T: std::str::FromStr>(p: &BTreeMap<String, String>, k: &str, d: T) -> Result<T> {
            match p.get(k) {
                None => Ok(d),
                Some(v) => v.parse().map_err(|_| Error::InvalidOperator(format!("cannot parse {k}={v}"))),
            }
        }
        Ok(match Self::default_for(kind, side) {
            Self::GaussianBlur { size, sigma } => Self::GaussianBlur {
                size: get(pairs, "kernel_size", size)?,
                sigma: get(pairs, "blur_sigma", sigma)?,
            },
            Self::MotionBlur { size, length, angle } => {
                let size = get(pairs, "kernel_size", size)?;
                Self::MotionBlur {
                    size,
                    length: get(pairs, "motion_length", length.min(size as f64))?,
                    angle: get(pairs, "motion_angle", angle)?,
                }
            }
            Self::RandomMask { fraction } => Self::RandomMask { fraction: get(pairs, "mask_fraction", fraction)? },
            Self::BoxMask { size } => Self::BoxMask { size: get(pairs, "box_size", size)? },
            Self::NonlinearBlur { gamma, size, sigma } => Self::NonlinearBlur {
                gamma: get(pairs, "gamma", gamma)?,
                size: get(pairs, "kernel_size", size)?,
                sigma: get(pairs, "blur_sigma", sigma)?,
            },
            other => other,
        })
    }
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs = self.to_pairs();
        let body: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&body.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Imp {
    Identity,
    Conv(Kernel),
    Decimate { rows: AxisResampler, cols: AxisResampler },
    Mask(Vec<f64>),
    Nonlinear { gamma: f64, kernel: Kernel },
}

/// A measurement map `A` with exact vector-Jacobian products.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOperator {
    spec: OperatorSpec,
    in_shape: Shape,
    out_shape: Shape,
    imp: Imp,
}

impl ForwardOperator {
    pub fn identity(shape: Shape) -> Self {
        Self { spec: OperatorSpec::Identity, in_shape: shape, out_shape: shape, imp: Imp::Identity }
    }

    /// Build an operator for inputs of `in_shape`. Only the random mask
    /// draws from `rng`.
    pub fn new<R: Rng + ?Sized>(spec: OperatorSpec, in_shape: Shape, rng: &mut R) -> Result<Self> {
        let Shape { h, w, c } = in_shape;
        if in_shape.is_empty() {
            return Err(Error::InvalidOperator("empty input shape".into()));
        }
        let (imp, out_shape) = match &spec {
            OperatorSpec::Identity => (Imp::Identity, in_shape),
            OperatorSpec::GaussianBlur { size, sigma } => (Imp::Conv(Kernel::gaussian(*size, *sigma)?), in_shape),
            OperatorSpec::MotionBlur { size, length, angle } => (Imp::Conv(Kernel::motion(*size, *length, *angle)?), in_shape),
            OperatorSpec::Downsample4x => {
                if h % 4 != 0 || w % 4 != 0 {
                    return Err(Error::InvalidOperator(format!("downsample4x needs sides divisible by 4, got {h}x{w}")));
                }
                let imp = Imp::Decimate { rows: AxisResampler::decimate(h, 4), cols: AxisResampler::decimate(w, 4) };
                (imp, Shape::new(h / 4, w / 4, c))
            }
            OperatorSpec::RandomMask { fraction } => {
                if !(0.0..1.0).contains(fraction) {
                    return Err(Error::InvalidOperator(format!("mask fraction must lie in [0, 1), got {fraction}")));
                }
                let plane = h * w;
                let masked = (fraction * plane as f64).round() as usize;
                let mut mask = vec![1.0; plane];
                for i in sample(rng, plane, masked) {
                    mask[i] = 0.0;
                }
                (Imp::Mask(mask), in_shape)
            }
            OperatorSpec::BoxMask { size } => {
                if *size == 0 || *size > h || *size > w {
                    return Err(Error::InvalidOperator(format!("box of side {size} does not fit in {h}x{w}")));
                }
                let (top, left) = ((h - size) / 2, (w - size) / 2);
                let mut mask = vec![1.0; h * w];
                for r in top..top + size {
                    for col in left..left + size {
                        mask[r * w + col] = 0.0;
                    }
                }
                (Imp::Mask(mask), in_shape)
            }
            OperatorSpec::NonlinearBlur { gamma, size, sigma } => {
                if !(*gamma > 0.0) {
                    return Err(Error::InvalidOperator(format!("gamma must be positive, got {gamma}")));
                }
                (Imp::Nonlinear { gamma: *gamma, kernel: Kernel::gaussian(*size, *sigma)? }, in_shape)
            }
        };
        Ok(Self { spec, in_shape, out_shape, imp })
    }

    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn kind(&self) -> OperatorKind {
        self.spec.kind()
    }

    pub fn in_shape(&self) -> Shape {
        self.in_shape
    }

    pub fn out_shape(&self) -> Shape {
        self.out_shape
    }

    pub fn is_linear(&self) -> bool {
        self.kind().is_linear()
    }

    pub fn is_shape_preserving(&self) -> bool {
        self.in_shape == self.out_shape
    }

    pub fn kernel(&self) -> Option<&Kernel> {
        match &self.imp {
            Imp::Conv(k) | Imp::Nonlinear { kernel: k, .. } => Some(k),
            _ => None,
        }
    }

    /// Binary keep-mask plane (1 = observed) for the mask kinds.
    pub fn mask(&self) -> Option<Signal> {
        match &self.imp {
            Imp::Mask(m) => Some(Signal::from_vec(Shape::new(self.in_shape.h, self.in_shape.w, 1), m.clone()).expect("shape")),
            _ => None,
        }
    }

    pub fn apply(&self, x: &Signal) -> Result<Signal> {
        x.ensure_shape(self.in_shape)?;
        Ok(self.apply_unchecked(x))
    }

    fn apply_unchecked(&self, x: &Signal) -> Signal {
        let Shape { h, w, c } = self.in_shape;
        match &self.imp {
            Imp::Identity => x.clone(),
            Imp::Conv(k) => per_channel(x, self.out_shape, |inp, out| k.convolve(inp, h, w, false, out)),
            Imp::Decimate { rows, cols } => {
                let (oh, ow) = (rows.out_len(), cols.out_len());
                let mut out = Signal::zeros(self.out_shape);
                let mut tmp = vec![0.0; h * ow];
                for ch in 0..c {
                    let inp = x.channel(ch);
                    for r in 0..h {
                        cols.apply(&inp[r * w..], 1, &mut tmp[r * ow..], 1);
                    }
                    let o = out.channel_mut(ch);
                    for col in 0..ow {
                        rows.apply(&tmp[col..], ow, &mut o[col..], ow);
                    }
                }
                debug_assert_eq!(oh * ow, self.out_shape.plane());
                out
            }
            Imp::Mask(m) => {
                let mut out = x.clone();
                for ch in 0..c {
                    for (v, k) in out.channel_mut(ch).iter_mut().zip(m) {
                        *v *= k;
                    }
                }
                out
            }
            Imp::Nonlinear { gamma, kernel } => {
                let curved = x.map(|v| v.clamp(0.0, 1.0).powf(*gamma));
                per_channel(&curved, self.out_shape, |inp, out| kernel.convolve(inp, h, w, false, out))
            }
        }
    }

    /// `v^T dA/dx` at `x`; for linear kinds this is `A^T v` and ignores `x`.
    pub fn vjp(&self, x: &Signal, v: &Signal) -> Result<Signal> {
        x.ensure_shape(self.in_shape)?;
        v.ensure_shape(self.out_shape)?;
        Ok(self.vjp_unchecked(x, v))
    }

    /// `A^T v` for linear kinds.
    pub fn adjoint(&self, v: &Signal) -> Result<Signal> {
        if !self.is_linear() {
            return Err(Error::Unsupported(format!("{} has no input-independent adjoint", self.kind().label())));
        }
        v.ensure_shape(self.out_shape)?;
        Ok(self.vjp_unchecked(&Signal::zeros(self.in_shape), v))
    }

    fn vjp_unchecked(&self, x: &Signal, v: &Signal) -> Signal {
        let Shape { h, w, c } = self.in_shape;
        match &self.imp {
            Imp::Identity => v.clone(),
            Imp::Conv(k) => per_channel(v, self.in_shape, |inp, out| k.convolve(inp, h, w, true, out)),
            Imp::Decimate { rows, cols } => {
                let ow = cols.out_len();
                let mut out = Signal::zeros(self.in_shape);
                let mut tmp = vec![0.0; h * ow];
                for ch in 0..c {
                    let inp = v.channel(ch);
                    for col in 0..ow {
                        rows.adjoint(&inp[col..], ow, &mut tmp[col..], ow);
                    }
                    let o = out.channel_mut(ch);
                    for r in 0..h {
                        cols.adjoint(&tmp[r * ow..], 1, &mut o[r * w..], 1);
                    }
                }
                out
            }
            Imp::Mask(_) => self.apply_unchecked(v),
            Imp::Nonlinear { gamma, kernel } => {
                let back = per_channel(v, self.in_shape, |inp, out| kernel.convolve(inp, h, w, true, out));
                back.zip_map(x, |g, xi| if xi > 0.0 && xi < 1.0 { g * gamma * xi.powf(gamma - 1.0) } else { 0.0 })
            }
        }
    }

    /// Dense matrix of a linear operator (row = output index); small sizes only.
    pub fn dense_matrix(&self) -> Result<nalgebra::DMatrix<f64>> {
        if !self.is_linear() {
            return Err(Error::Unsupported("dense matrix of a nonlinear operator".into()));
        }
        let (n, m) = (self.in_shape.len(), self.out_shape.len());
        let mut mat = nalgebra::DMatrix::zeros(m, n);
        let mut e = Signal::zeros(self.in_shape);
        for j in 0..n {
            e[j] = 1.0;
            let col = self.apply_unchecked(&e);
            for i in 0..m {
                mat[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        Ok(mat)
    }

    /// Clean measurement plus noise.
    pub fn degrade<R: Rng + ?Sized>(&self, noise: &NoiseModel, x: &Signal, rng: &mut R) -> Result<Signal> {
        Ok(noise.corrupt(&self.apply(x)?, rng))
    }
}

fn per_channel(x: &Signal, out_shape: Shape, mut f: impl FnMut(&[f64], &mut [f64])) -> Signal {
    let mut out = Signal::zeros(out_shape);
    for ch in 0..out_shape.c {
        f(x.channel(ch), out.channel_mut(ch));
    }
    out
}

//! Shaped real tensors used for images, measurements and gradients.
//!
//! Storage is planar: channel-major, then row-major within a channel, so
//! `data[c * h * w + row * w + col]`.

use std::fmt;
use std::ops::{Index, IndexMut};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub h: usize,
    pub w: usize,
    pub c: usize,
}

impl Shape {
    pub const fn new(h: usize, w: usize, c: usize) -> Self {
        Self { h, w, c }
    }

    /// A flat vector of `n` entries.
    pub const fn vector(n: usize) -> Self {
        Self { h: 1, w: n, c: 1 }
    }

    pub const fn len(&self) -> usize {
        self.h * self.w * self.c
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn plane(&self) -> usize {
        self.h * self.w
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.h, self.w, self.c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    shape: Shape,
    data: Vec<f64>,
}

impl Signal {
    pub fn zeros(shape: Shape) -> Self {
        Self { shape, data: vec![0.0; shape.len()] }
    }

    pub fn filled(shape: Shape, value: f64) -> Self {
        Self { shape, data: vec![value; shape.len()] }
    }

    pub fn from_vec(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::Format(format!(
                "signal of shape {shape} needs {} values, got {}",
                shape.len(),
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Self { shape: Shape::vector(data.len()), data }
    }

    /// Standard normal white noise.
    pub fn randn<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> Self {
        let data = (0..shape.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        Self { shape, data }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let p = self.shape.plane();
        &self.data[c * p..(c + 1) * p]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let p = self.shape.plane();
        &mut self.data[c * p..(c + 1) * p]
    }

    pub fn at(&self, row: usize, col: usize, c: usize) -> f64 {
        self.data[c * self.shape.plane() + row * self.shape.w + col]
    }

    pub fn ensure_shape(&self, expected: Shape) -> Result<()> {
        if self.shape != expected {
            return Err(Error::ShapeMismatch { expected, actual: self.shape });
        }
        Ok(())
    }

    pub fn ensure_same(&self, other: &Signal) -> Result<()> {
        other.ensure_shape(self.shape)
    }

    /// Reinterpret with a new shape of the same length.
    pub fn reshaped(mut self, shape: Shape) -> Result<Self> {
        if shape.len() != self.data.len() {
            return Err(Error::ShapeMismatch { expected: shape, actual: self.shape });
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn dot(&self, other: &Signal) -> f64 {
        debug_assert_eq!(self.shape, other.shape);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Signal {
        Signal { shape: self.shape, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Signal, f: impl Fn(f64, f64) -> f64) -> Signal {
        debug_assert_eq!(self.shape, other.shape);
        Signal {
            shape: self.shape,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scaled(&self, k: f64) -> Signal {
        self.map(|v| k * v)
    }

    pub fn add(&self, other: &Signal) -> Signal {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Signal) -> Signal {
        self.zip_map(other, |a, b| a - b)
    }

    /// `self += k * other`
    pub fn axpy(&mut self, k: f64, other: &Signal) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += k * b;
        }
    }

    /// `a * x + b * y`, evaluated elementwise in that order.
    pub fn lincomb(a: f64, x: &Signal, b: f64, y: &Signal) -> Signal {
        x.zip_map(y, |u, v| a * u + b * v)
    }

    /// Average over channels, producing a single-channel plane.
    pub fn channel_mean(&self) -> Signal {
        let Shape { h, w, c } = self.shape;
        let mut out = vec![0.0; h * w];
        for ch in 0..c {
            for (o, v) in out.iter_mut().zip(self.channel(ch)) {
                *o += v;
            }
        }
        for o in &mut out {
            *o /= c as f64;
        }
        Signal { shape: Shape::new(h, w, 1), data: out }
    }
}

impl Index<usize> for Signal {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for Signal {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

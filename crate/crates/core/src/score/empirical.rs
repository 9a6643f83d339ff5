use rand::Rng;

use super::{responsibilities, Geometry, Jacobian};
use crate::error::{Error, Result};
use crate::signal::{Shape, Signal};

/// Dataset points `d_i`; the time-`t` marginal is
/// `(1/N) sum_i N(sqrt(abar_t) d_i, (1 - abar_t) I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalPrior {
    shape: Shape,
    count: usize,
    points: Vec<f64>,
}

impl EmpiricalPrior {
    pub fn new(data: Vec<Signal>) -> Result<Self> {
        let first = data.first().ok_or_else(|| Error::InvalidPrior("empirical prior needs at least one point".into()))?;
        let shape = first.shape();
        let mut points = Vec::with_capacity(shape.len() * data.len());
        for d in &data {
            if d.shape() != shape {
                return Err(Error::InvalidPrior(format!("point shape {} differs from {}", d.shape(), shape)));
            }
            points.extend_from_slice(d.as_slice());
        }
        Ok(Self { shape, count: data.len(), points })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.shape.len();
        &self.points[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> impl Iterator<Item = Signal> + '_ {
        (0..self.count).map(move |i| Signal::from_vec(self.shape, self.point(i).to_vec()).expect("shape"))
    }

    /// Draw one dataset point uniformly.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Signal {
        let i = rng.random_range(0..self.count);
        Signal::from_vec(self.shape, self.point(i).to_vec()).expect("shape")
    }

    pub(crate) fn evaluate(&self, g: Geometry, x: &Signal) -> (Signal, Jacobian<'_>) {
        let xs = x.as_slice();
        let inv2s = 0.5 / g.s;
        let logw: Vec<f64> = (0..self.count)
            .map(|i| {
                let d2: f64 = self.point(i).iter().zip(xs).map(|(p, xi)| (xi - g.a * p).powi(2)).sum();
                -d2 * inv2s
            })
            .collect();
        let weights = responsibilities(&logw);
        let mut mean = vec![0.0; xs.len()];
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (m, p) in mean.iter_mut().zip(self.point(i)) {
                *m += w * p;
            }
        }
        let score: Vec<f64> = xs.iter().zip(&mean).map(|(xi, m)| (g.a * m - xi) / g.s).collect();
        let score = Signal::from_vec(x.shape(), score).expect("shape");
        (score, Jacobian::Empirical { prior: self, weights, mean })
    }
}

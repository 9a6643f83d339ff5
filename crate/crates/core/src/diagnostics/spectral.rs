use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Default radial cutoff for an `n x n` image: 32 cycles per image at 256,
/// scaled proportionally (4 at 32).
pub fn default_cutoff(n: usize) -> usize {
    ((32.0 * n as f64 / 256.0).round() as usize).max(1)
}

/// Unnormalized forward 2-D DFT of a square power-of-two plane, row-major.
pub fn fft2(plane: &[f64], n: usize) -> Result<Vec<Complex64>> {
    if n == 0 || !n.is_power_of_two() || plane.len() != n * n {
        return Err(Error::FftSize { h: n, w: plane.len().checked_div(n).unwrap_or(0) });
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf: Vec<Complex64> = plane.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for row in buf.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::default(); n];
    for c in 0..n {
        for r in 0..n {
            col[r] = buf[r * n + c];
        }
        fft.process(&mut col);
        for r in 0..n {
            buf[r * n + c] = col[r];
        }
    }
    Ok(buf)
}

/// `fft2` of a single-channel square signal.
pub fn fft2_signal(x: &Signal) -> Result<Vec<Complex64>> {
    let s = x.shape();
    if s.c != 1 || s.h != s.w {
        return Err(Error::FftSize { h: s.h, w: s.w });
    }
    fft2(x.as_slice(), s.h)
}

/// Mean spectral magnitudes below and at-or-above a radial cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSplit {
    pub cutoff: usize,
    pub low_mag: f64,
    pub high_mag: f64,
}

impl SpectralSplit {
    /// Split the centered spectrum of the channel mean of `g`. The DC bin is
    /// in the low band; the radial index is the floor of the Euclidean
    /// distance on the centered integer lattice.
    pub fn of(g: &Signal, cutoff: usize) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::InvalidConfig("spectral cutoff must be >= 1".into()));
        }
        let plane = g.channel_mean();
        let n = plane.shape().h;
        let spec = fft2_signal(&plane)?;
        let half = n as i64 / 2;
        let (mut low, mut nlow, mut high, mut nhigh) = (0.0, 0usize, 0.0, 0usize);
        for u in 0..n {
            for v in 0..n {
                let fu = if (u as i64) < half { u as i64 } else { u as i64 - n as i64 };
                let fv = if (v as i64) < half { v as i64 } else { v as i64 - n as i64 };
                let radius = ((fu * fu + fv * fv) as f64).sqrt().floor() as usize;
                let mag = spec[u * n + v].norm();
                if radius < cutoff {
                    low += mag;
                    nlow += 1;
                } else {
                    high += mag;
                    nhigh += 1;
                }
            }
        }
        Ok(Self {
            cutoff,
            low_mag: if nlow > 0 { low / nlow as f64 } else { 0.0 },
            high_mag: if nhigh > 0 { high / nhigh as f64 } else { 0.0 },
        })
    }

    /// `high / low`; `+inf` when the low band is empty of energy.
    pub fn ratio(&self) -> f64 {
        if self.low_mag == 0.0 {
            f64::INFINITY
        } else {
            self.high_mag / self.low_mag
        }
    }
}

/// Mean magnitude ratio between the high and low bands of `g`.
pub fn freq_ratio(g: &Signal, cutoff: usize) -> Result<f64> {
    Ok(SpectralSplit::of(g, cutoff)?.ratio())
}

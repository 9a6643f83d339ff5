use crate::error::{Error, Result};

/// Square odd-sized convolution kernel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    taps: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, taps: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) || taps.len() != size * size {
            return Err(Error::InvalidOperator(format!("kernel must be odd-sized square, got size {size} with {} taps", taps.len())));
        }
        let total: f64 = taps.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidOperator("kernel must have positive mass".into()));
        }
        let taps = taps.into_iter().map(|v| v / total).collect();
        Ok(Self { size, taps })
    }

    pub fn gaussian(size: usize, sigma: f64) -> Result<Self> {
        if size.is_multiple_of(2) || size == 0 {
            return Err(Error::InvalidOperator(format!("blur kernel size must be odd, got {size}")));
        }
        if !(sigma > 0.0) {
            return Err(Error::InvalidOperator(format!("blur sigma must be positive, got {sigma}")));
        }
        let c = (size / 2) as f64;
        let mut taps = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                let (di, dj) = (i as f64 - c, j as f64 - c);
                taps.push((-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp());
            }
        }
        Self::new(size, taps)
    }

    /// Straight-line motion kernel of `length` pixels at `angle` radians,
    /// rasterized by bilinear splatting of densely spaced samples.
    pub fn motion(size: usize, length: f64, angle: f64) -> Result<Self> {
        if size.is_multiple_of(2) || size == 0 {
            return Err(Error::InvalidOperator(format!("motion kernel size must be odd, got {size}")));
        }
        if !(length >= 1.0 && length <= size as f64) {
            return Err(Error::InvalidOperator(format!("motion length must lie in [1, {size}], got {length}")));
        }
        if !(0.0..std::f64::consts::PI).contains(&angle) {
            return Err(Error::InvalidOperator(format!("motion angle must lie in [0, pi), got {angle}")));
        }
        let c = (size / 2) as f64;
        let mut taps = vec![0.0; size * size];
        let samples = (length * 16.0).ceil() as usize + 1;
        let (dr, dc) = (-angle.sin(), angle.cos());
        let half = (length - 1.0) / 2.0;
        for k in 0..samples {
            let s = if samples == 1 { 0.0 } else { -half + 2.0 * half * k as f64 / (samples - 1) as f64 };
            let (r, col) = (c + s * dr, c + s * dc);
            let (r0, c0) = (r.floor(), col.floor());
            let (fr, fc) = (r - r0, col - c0);
            for (rr, wr) in [(r0, 1.0 - fr), (r0 + 1.0, fr)] {
                for (cc, wc) in [(c0, 1.0 - fc), (c0 + 1.0, fc)] {
                    let w = wr * wc;
                    if w > 0.0 && rr >= 0.0 && cc >= 0.0 && (rr as usize) < size && (cc as usize) < size {
                        taps[rr as usize * size + cc as usize] += w;
                    }
                }
            }
        }
        Self::new(size, taps)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }

    /// Circular convolution of one plane; `adjoint` correlates instead.
    pub fn convolve(&self, plane: &[f64], h: usize, w: usize, adjoint: bool, out: &mut [f64]) {
        let k = self.size;
        let c = (k / 2) as isize;
        out[..h * w].fill(0.0);
        for i in 0..k {
            for j in 0..k {
                let kv = self.taps[i * k + j];
                if kv == 0.0 {
                    continue;
                }
                // forward reads in[r - dr][col - dc], the adjoint in[r + dr][col + dc]
                let (dr, dc) = (i as isize - c, j as isize - c);
                let (dr, dc) = if adjoint { (dr, dc) } else { (-dr, -dc) };
                let shift = dc.rem_euclid(w as isize) as usize;
                for r in 0..h {
                    let src_r = (r as isize + dr).rem_euclid(h as isize) as usize;
                    let src = &plane[src_r * w..(src_r + 1) * w];
                    let dst = &mut out[r * w..(r + 1) * w];
                    let (head, tail) = dst.split_at_mut(w - shift);
                    for (o, v) in head.iter_mut().zip(&src[shift..]) {
                        *o += kv * v;
                    }
                    for (o, v) in tail.iter_mut().zip(&src[..shift]) {
                        *o += kv * v;
                    }
                }
            }
        }
    }
}

/// Separable antialiased Catmull-Rom resampler along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisResampler {
    in_len: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

pub const CATMULL_ROM_A: f64 = -0.5;

pub fn cubic_weight(x: f64) -> f64 {
    let a = CATMULL_ROM_A;
    let x = x.abs();
    if x <= 1.0 {
        (a + 2.0) * x.powi(3) - (a + 3.0) * x.powi(2) + 1.0
    } else if x < 2.0 {
        a * x.powi(3) - 5.0 * a * x.powi(2) + 8.0 * a * x - 4.0 * a
    } else {
        0.0
    }
}

impl AxisResampler {
    /// Decimate `in_len` samples by `factor`; the cubic is stretched by the
    /// factor so it also acts as the antialiasing prefilter. Indices wrap.
    pub fn decimate(in_len: usize, factor: usize) -> Self {
        let out_len = in_len / factor;
        let f = factor as f64;
        let reach = 2 * factor as isize;
        let rows = (0..out_len)
            .map(|j| {
                let center = (j as f64 + 0.5) * f - 0.5;
                let base = center.floor() as isize;
                let mut taps: Vec<(usize, f64)> = Vec::new();
                for i in (base - reach)..=(base + reach + 1) {
                    let w = cubic_weight((i as f64 - center) / f);
                    if w != 0.0 {
                        let idx = i.rem_euclid(in_len as isize) as usize;
                        match taps.iter_mut().find(|(k, _)| *k == idx) {
                            Some(t) => t.1 += w,
                            None => taps.push((idx, w)),
                        }
                    }
                }
                let total: f64 = taps.iter().map(|t| t.1).sum();
                taps.iter_mut().for_each(|t| t.1 /= total);
                taps
            })
            .collect();
        Self { in_len, rows }
    }

    pub fn out_len(&self) -> usize {
        self.rows.len()
    }

    pub fn in_len(&self) -> usize {
        self.in_len
    }

    pub fn apply(&self, input: &[f64], stride: usize, output: &mut [f64], out_stride: usize) {
        for (j, taps) in self.rows.iter().enumerate() {
            output[j * out_stride] = taps.iter().map(|&(i, w)| w * input[i * stride]).sum();
        }
    }

    pub fn adjoint(&self, input: &[f64], stride: usize, output: &mut [f64], out_stride: usize) {
        for i in 0..self.in_len {
            output[i * out_stride] = 0.0;
        }
        for (j, taps) in self.rows.iter().enumerate() {
            let v = input[j * stride];
            for &(i, w) in taps {
                output[i * out_stride] += w * v;
            }
        }
    }
}

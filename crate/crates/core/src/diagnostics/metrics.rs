use crate::error::Result;
use crate::signal::Signal;

pub fn mse(a: &Signal, b: &Signal) -> Result<f64> {
    a.ensure_same(b)?;
    let n = a.len() as f64;
    Ok(a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n)
}

/// Mean squared error between the ground truth and a reconstruction.
pub fn recon_error(x_true: &Signal, x0hat: &Signal) -> Result<f64> {
    mse(x_true, x0hat)
}

/// `10 log10(peak^2 / MSE)`, `+inf` for identical inputs.
pub fn psnr(a: &Signal, b: &Signal, peak: f64) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / m).log10())
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;

/// Gaussian-windowed SSIM (11x11, sigma 1.5, K1 = 0.01, K2 = 0.03), averaged
/// over all fully-contained windows and then over channels. Planes smaller
/// than the window use the largest odd window that fits.
pub fn ssim(a: &Signal, b: &Signal, peak: f64) -> Result<f64> {
    a.ensure_same(b)?;
    let s = a.shape();
    let mut win = SSIM_WINDOW.min(s.h).min(s.w);
    if win.is_multiple_of(2) {
        win -= 1;
    }
    let c = (win / 2) as f64;
    let mut weights = Vec::with_capacity(win * win);
    for i in 0..win {
        for j in 0..win {
            let (di, dj) = (i as f64 - c, j as f64 - c);
            let w = if win == 1 { 1.0 } else { (-(di * di + dj * dj) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp() };
            weights.push(w);
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    let mut acc = 0.0;
    for ch in 0..s.c {
        let (pa, pb) = (a.channel(ch), b.channel(ch));
        let mut sum = 0.0;
        let mut count = 0usize;
        for r in 0..=(s.h - win) {
            for col in 0..=(s.w - win) {
                let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for i in 0..win {
                    for j in 0..win {
                        let w = weights[i * win + j];
                        let idx = (r + i) * s.w + col + j;
                        let (x, y) = (pa[idx], pb[idx]);
                        ma += w * x;
                        mb += w * y;
                        saa += w * x * x;
                        sbb += w * y * y;
                        sab += w * x * y;
                    }
                }
                let va = saa - ma * ma;
                let vb = sbb - mb * mb;
                let cov = sab - ma * mb;
                sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        acc += sum / count as f64;
    }
    Ok(acc / s.c as f64)
}

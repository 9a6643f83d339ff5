//! Independent reference computations used by the self-test and the test
//! suites: brute-force DFT, central finite differences and the adjoint
//! inner-product check. Nothing here shares code with the routines it checks.

use crate::signal::Signal;

/// Central-difference gradient of a scalar function, one coordinate at a time.
pub fn central_gradient(x: &Signal, delta: f64, mut f: impl FnMut(&Signal) -> f64) -> Signal {
    let mut grad = Signal::zeros(x.shape());
    let mut probe = x.clone();
    for j in 0..x.len() {
        let orig = probe[j];
        probe[j] = orig + delta;
        let up = f(&probe);
        probe[j] = orig - delta;
        let down = f(&probe);
        probe[j] = orig;
        grad[j] = (up - down) / (2.0 * delta);
    }
    grad
}

/// `||a - b|| / max(||a||, ||b||)`, zero when both vanish.
pub fn relative_error(a: &Signal, b: &Signal) -> f64 {
    let diff = a.sub(b).norm();
    let scale = a.norm().max(b.norm());
    if scale < 1e-300 {
        0.0
    } else {
        diff / scale
    }
}

/// Smallest gradient error a central difference can resolve when the scalar
/// is assembled from terms of size `term_scale`: each coordinate carries
/// rounding of order `eps * term_scale / delta`.
pub fn fd_roundoff_floor(term_scale: f64, dim: usize, delta: f64) -> f64 {
    8.0 * f64::EPSILON * term_scale * (dim as f64).sqrt() / delta
}

/// `||a - b|| <= rel * max(||a||, ||b||) + floor`
pub fn fd_agrees(analytic: &Signal, fd: &Signal, rel: f64, floor: f64) -> bool {
    analytic.sub(fd).norm() <= rel * analytic.norm().max(fd.norm()) + floor
}

/// `|<A x, u> - <x, A^T u>| / max(|<A x, u>|, tiny)`
pub fn adjoint_mismatch(ax: &Signal, u: &Signal, x: &Signal, atu: &Signal) -> f64 {
    let lhs = ax.dot(u);
    let rhs = x.dot(atu);
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300)
}

/// O(N^4) two-dimensional DFT, forward sign, unnormalized.
pub fn brute_force_dft(plane: &[f64], n: usize) -> Vec<DftBin> {
    let mut out = vec![DftBin::default(); n * n];
    for ku in 0..n {
        for kv in 0..n {
            let mut re = 0.0;
            let mut im = 0.0;
            for r in 0..n {
                for c in 0..n {
                    let phase = -2.0 * std::f64::consts::PI * ((ku * r + kv * c) % n) as f64 / n as f64;
                    re += plane[r * n + c] * phase.cos();
                    im += plane[r * n + c] * phase.sin();
                }
            }
            out[ku * n + kv] = DftBin { re, im };
        }
    }
    out
}

/// One bin of the reference DFT.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DftBin {
    pub re: f64,
    pub im: f64,
}

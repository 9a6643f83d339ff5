use super::*;
use crate::error::Error;
use crate::oracle::brute_force_dft;
use crate::score::{EmpiricalPrior, GmmPrior};
use crate::signal::Shape;
use approx::assert_relative_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn plane(n: usize) -> Shape {
    Shape::new(n, n, 1)
}

#[test]
fn fft_of_delta_and_constant() {
    let mut delta = vec![0.0; 64];
    delta[0] = 1.0;
    for bin in fft2(&delta, 8).unwrap() {
        assert_relative_eq!(bin.re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(bin.im, 0.0, epsilon = 1e-14);
    }
    let spec = fft2(&vec![0.25; 64], 8).unwrap();
    assert_relative_eq!(spec[0].re, 0.25 * 64.0, epsilon = 1e-12);
    assert!(spec[1..].iter().all(|b| b.norm() < 1e-12));
}

#[test]
fn fft_matches_brute_force() {
    let x = Signal::randn(plane(8), &mut rng(1));
    let fast = fft2(x.as_slice(), 8).unwrap();
    let slow = brute_force_dft(x.as_slice(), 8);
    for (f, s) in fast.iter().zip(&slow) {
        assert!((f.re - s.re).abs() < 1e-10 && (f.im - s.im).abs() < 1e-10);
    }
}

#[test]
fn parseval_holds() {
    let x = Signal::randn(plane(32), &mut rng(2));
    let energy: f64 = fft2(x.as_slice(), 32).unwrap().iter().map(|b| b.norm_sqr()).sum();
    assert_relative_eq!(energy, x.norm_sq() * 1024.0, max_relative = 1e-8);
}

#[test]
fn fft_rejects_bad_sizes() {
    assert!(matches!(fft2(&[0.0; 36], 6), Err(Error::FftSize { .. })));
    assert!(fft2_signal(&Signal::zeros(Shape::new(8, 4, 1))).is_err());
}

#[test]
fn freq_ratio_band_pure_inputs() {
    assert_eq!(freq_ratio(&Signal::filled(plane(32), 3.0), 4).unwrap(), 0.0);
    let mut checker = Signal::zeros(plane(32));
    for r in 0..32 {
        for c in 0..32 {
            checker[r * 32 + c] = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
        }
    }
    assert_eq!(freq_ratio(&checker, 4).unwrap(), f64::INFINITY);
    assert!(freq_ratio(&checker, 0).is_err());
}

#[test]
fn white_noise_ratio_is_one() {
    let mut r = rng(3);
    let n = 10_000;
    let mean: f64 = (0..n).map(|_| freq_ratio(&Signal::randn(plane(32), &mut r), 4).unwrap()).sum::<f64>() / n as f64;
    assert!((mean - 1.0).abs() < 0.02, "{mean}");
}

#[test]
fn freq_ratio_is_scale_invariant() {
    let g = Signal::randn(plane(16), &mut rng(4));
    let a = freq_ratio(&g, 2).unwrap();
    let b = freq_ratio(&g.scaled(-37.5), 2).unwrap();
    assert_relative_eq!(a, b, max_relative = 1e-12);
}

#[test]
fn freq_ratio_averages_channels() {
    let base = Signal::randn(plane(8), &mut rng(5));
    let mut stacked = Signal::zeros(Shape::new(8, 8, 3));
    for ch in 0..3 {
        stacked.channel_mut(ch).copy_from_slice(base.as_slice());
    }
    assert_relative_eq!(freq_ratio(&stacked, 1).unwrap(), freq_ratio(&base, 1).unwrap(), max_relative = 1e-12);
}

#[test]
fn default_cutoff_scales_with_side() {
    assert_eq!(default_cutoff(256), 32);
    assert_eq!(default_cutoff(32), 4);
    assert_eq!(default_cutoff(64), 8);
}

#[test]
fn eps_error_vanishes_for_single_point() {
    let s = NoiseSchedule::default();
    let d = Signal::randn(plane(4), &mut rng(6));
    let m: ScoreModel = EmpiricalPrior::new(vec![d]).unwrap().into();
    let mut r = rng(7);
    for t in [2, 300, 1000] {
        let x = Signal::randn(plane(4), &mut r);
        let e = eps_prediction_error(&m, &s, &x, t, &mut r).unwrap();
        assert!(e < 1e-16, "t={t}: {e}");
    }
}

#[test]
fn eps_error_standard_normal_by_hand() {
    let s = NoiseSchedule::default();
    let m: ScoreModel = GmmPrior::standard_normal(Shape::vector(2)).into();
    let t = 500;
    let ab = s.alpha_bar(t);
    let x0hat = Signal::vector(vec![0.4, -1.0]);
    let eps = Signal::vector(vec![1.0, 0.5]);
    let got = eps_error_with(&m, &s, &x0hat, t, &eps).unwrap();
    let mut want = 0.0;
    for i in 0..2 {
        let xp = ab.sqrt() * x0hat[i] + (1.0 - ab).sqrt() * eps[i];
        want += ((1.0 - ab).sqrt() * xp - eps[i]).powi(2);
    }
    assert_relative_eq!(got, want, max_relative = 1e-12);
}

#[test]
fn eps_error_sign_symmetry() {
    let s = NoiseSchedule::default();
    let mu = Signal::vector(vec![1.0, -0.5, 0.25]);
    let m: ScoreModel = GmmPrior::uniform(vec![mu.clone(), mu.scaled(-1.0)], 0.3).unwrap().into();
    let mut r = rng(8);
    for t in [10, 200, 900] {
        let x = Signal::randn(Shape::vector(3), &mut r);
        let eps = Signal::randn(Shape::vector(3), &mut r);
        let x0 = m.tweedie_x0hat(&s, &x, t).unwrap();
        let x0n = m.tweedie_x0hat(&s, &x.scaled(-1.0), t).unwrap();
        let a = eps_error_with(&m, &s, &x0, t, &eps).unwrap();
        let b = eps_error_with(&m, &s, &x0n, t, &eps.scaled(-1.0)).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-10);
        assert!(a >= 0.0);
    }
}

#[test]
fn recon_and_psnr() {
    let x = Signal::randn(plane(8), &mut rng(9));
    assert_eq!(recon_error(&x, &x).unwrap(), 0.0);
    assert_relative_eq!(recon_error(&x, &x.map(|v| v + 0.1)).unwrap(), 0.01, max_relative = 1e-12);
    let y = Signal::randn(plane(8), &mut rng(10));
    let direct: f64 = (0..64).map(|i| (x[i] - y[i]).powi(2)).sum::<f64>() / 64.0;
    assert_relative_eq!(recon_error(&x, &y).unwrap(), direct, max_relative = 1e-14);
    assert_eq!(psnr(&x, &x, 1.0).unwrap(), f64::INFINITY);
    assert_relative_eq!(psnr(&x, &x.map(|v| v + 0.1), 1.0).unwrap(), 20.0, epsilon = 1e-9);
    assert!(mse(&x, &Signal::zeros(plane(4))).is_err());
}

#[test]
fn ssim_properties() {
    let mut r = rng(11);
    let a = Signal::randn(plane(32), &mut r).map(|v| 0.5 + 0.2 * v);
    assert_relative_eq!(ssim(&a, &a, 1.0).unwrap(), 1.0, epsilon = 1e-12);
    let tiny = a.map(|v| v + 1e-6 * v.sin());
    assert!(ssim(&a, &tiny, 1.0).unwrap() < 1.0);
    for _ in 0..5 {
        let b = Signal::randn(plane(32), &mut r).map(|v| 0.5 + 0.2 * v);
        let ab = ssim(&a, &b, 1.0).unwrap();
        assert_relative_eq!(ab, ssim(&b, &a, 1.0).unwrap(), max_relative = 1e-12);
        assert!((-1.0..=1.0).contains(&ab));
        let neg = ssim(&a, &b.map(|v| 1.0 - v), 1.0).unwrap();
        assert!((-1.0..=1.0).contains(&neg));
    }
    // smaller than the window
    let s = Signal::randn(plane(4), &mut r);
    assert_relative_eq!(ssim(&s, &s, 1.0).unwrap(), 1.0, epsilon = 1e-12);
}

#[test]
fn row_formatting() {
    let row = StepRow { t: 7, residual: 0.5, freq_ratio: Some(f64::INFINITY), ..Default::default() };
    assert_eq!(row.to_csv_line(), "7,5.0000000000e-1,,,,,inf,");
    assert!(!row.has_unflagged_nonfinite());
    let bad = StepRow { t: 1, residual: f64::NAN, ..Default::default() };
    assert!(bad.has_unflagged_nonfinite());
    assert_eq!(ROW_HEADER.split(',').count(), row.to_csv_line().split(',').count());
}

#[test]
fn stride_always_includes_last_step() {
    let d = DiagnosticsConfig::every(100, 32);
    assert!(d.records(1) && d.records(100) && !d.records(99));
    assert!(!DiagnosticsConfig::off().records(1));
    assert_eq!(d.cutoff, 4);
}

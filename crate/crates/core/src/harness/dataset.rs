//! Image sources: a deterministic synthetic corpus and PNG directories.

use std::path::Path;

use image::{GrayImage, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::operators::Kernel;
use crate::signal::{Shape, Signal};

/// Image `index` of the synthetic corpus: a smoothed random field with one to
/// three flat geometric shapes on top, grayscale in `[0, 1]`.
///
/// Each image depends only on `(seed, index, side)`, so disjoint index ranges
/// give disjoint training and test sets.
pub fn synthetic_image(seed: u64, index: u64, side: usize) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let shape = Shape::new(side, side, 1);
    let noise = Signal::randn(shape, &mut rng);
    let width = (side / 3) | 1;
    let kernel = Kernel::gaussian(width, side as f64 / 12.0).expect("odd kernel");
    let mut field = vec![0.0; side * side];
    kernel.convolve(noise.as_slice(), side, side, false, &mut field);
    let mean = field.iter().sum::<f64>() / field.len() as f64;
    let sd = (field.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / field.len() as f64).sqrt().max(1e-12);
    let level = rng.random_range(0.3..0.7);
    let mut img: Vec<f64> = field.iter().map(|v| level + 0.12 * (v - mean) / sd).collect();

    let n = side as f64;
    for _ in 0..rng.random_range(1..=3) {
        let value = rng.random_range(0.05..0.95);
        let (cr, cc) = (rng.random_range(0.2 * n..0.8 * n), rng.random_range(0.2 * n..0.8 * n));
        if rng.random_bool(0.5) {
            let radius = rng.random_range(0.1 * n..0.28 * n);
            for r in 0..side {
                for c in 0..side {
                    let (dr, dc) = (r as f64 + 0.5 - cr, c as f64 + 0.5 - cc);
                    if dr * dr + dc * dc <= radius * radius {
                        img[r * side + c] = value;
                    }
                }
            }
        } else {
            let (hh, hw) = (rng.random_range(0.08 * n..0.25 * n), rng.random_range(0.08 * n..0.25 * n));
            for r in 0..side {
                for c in 0..side {
                    if (r as f64 + 0.5 - cr).abs() <= hh && (c as f64 + 0.5 - cc).abs() <= hw {
                        img[r * side + c] = value;
                    }
                }
            }
        }
    }
    Signal::from_vec(shape, img.into_iter().map(|v| v.clamp(0.0, 1.0)).collect()).expect("shape")
}

/// `count` consecutive synthetic images starting at `first`.
pub fn synthetic_corpus(seed: u64, first: u64, count: usize, side: usize) -> Vec<Signal> {
    (first..first + count as u64).map(|i| synthetic_image(seed, i, side)).collect()
}

/// Write a `[0, 1]` image as 8-bit PNG (values clamped). One channel gives
/// grayscale, three give RGB.
pub fn save_png(x: &Signal, path: &Path) -> Result<()> {
    let s = x.shape();
    let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    match s.c {
        1 => {
            let img = GrayImage::from_fn(s.w as u32, s.h as u32, |c, r| image::Luma([q(x.at(r as usize, c as usize, 0))]));
            img.save(path)?;
        }
        3 => {
            let img = RgbImage::from_fn(s.w as u32, s.h as u32, |c, r| {
                let (r, c) = (r as usize, c as usize);
                image::Rgb([q(x.at(r, c, 0)), q(x.at(r, c, 1)), q(x.at(r, c, 2))])
            });
            img.save(path)?;
        }
        c => return Err(Error::Format(format!("cannot write a {c}-channel image as PNG"))),
    }
    Ok(())
}

/// Read a PNG as grayscale (`color = false`) or RGB, scaled to `[0, 1]`.
pub fn load_png(path: &Path, color: bool) -> Result<Signal> {
    let img = image::open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if color {
        let rgb = img.to_rgb8();
        let mut data = vec![0.0; 3 * h * w];
        for (c, r, p) in rgb.enumerate_pixels() {
            for ch in 0..3 {
                data[ch * h * w + r as usize * w + c as usize] = p[ch] as f64 / 255.0;
            }
        }
        Signal::from_vec(Shape::new(h, w, 3), data)
    } else {
        let g = img.to_luma8();
        Signal::from_vec(Shape::new(h, w, 1), g.pixels().map(|p| p[0] as f64 / 255.0).collect())
    }
}

/// Every `*.png` in `dir`, in file-name order. All images must be
/// `side x side`.
pub fn load_png_dir(dir: &Path, side: usize, color: bool) -> Result<Vec<Signal>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Format(format!("no PNG files in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let img = load_png(p, color)?;
            if img.shape().h != side || img.shape().w != side {
                return Err(Error::Format(format!("{} is {}, expected {side}x{side}", p.display(), img.shape())));
            }
            Ok(img)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic_and_bounded() {
        let a = synthetic_corpus(3, 0, 4, 32);
        let b = synthetic_corpus(3, 0, 4, 32);
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
        assert_eq!(synthetic_image(3, 2, 32), a[2]);
        for img in &a {
            assert!(img.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn png_round_trip_quantizes() {
        let dir = tempfile::tempdir().unwrap();
        let img = synthetic_image(1, 0, 16);
        let path = dir.path().join("a.png");
        save_png(&img, &path).unwrap();
        let back = load_png(&path, false).unwrap();
        assert_eq!(back.shape(), img.shape());
        for (a, b) in img.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
        let all = load_png_dir(dir.path(), 16, false).unwrap();
        assert_eq!(all.len(), 1);
        assert!(load_png_dir(dir.path(), 32, false).is_err());
    }
}

//! File formats for priors.
//!
//! * GMM CSV: one component per row, `weight,variance,m_0,...,m_{D-1}`.
//!   Blank lines and lines starting with `#` are skipped.
//! * Empirical binary matrix: the 8-byte magic `DPSCMEMP`, then four
//!   little-endian `u64` values `h, w, c, count`, then `count * h * w * c`
//!   little-endian `f64` values, point-major in planar signal order.

use std::io::{Read, Write};

use super::{EmpiricalPrior, GmmPrior};
use crate::error::{Error, Result};
use crate::signal::{Shape, Signal};

pub const EMPIRICAL_MAGIC: &[u8; 8] = b"DPSCMEMP";

pub fn parse_gmm_csv(text: &str, shape: Shape) -> Result<GmmPrior> {
    let mut weights = Vec::new();
    let mut variances = Vec::new();
    let mut means = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: lineno + 1, msg: e.to_string() })?;
        if vals.len() != shape.len() + 2 {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected {} fields, got {}", shape.len() + 2, vals.len()),
            });
        }
        weights.push(vals[0]);
        variances.push(vals[1]);
        means.push(Signal::from_vec(shape, vals[2..].to_vec())?);
    }
    GmmPrior::new(weights, means, variances)
}

pub fn gmm_to_csv(prior: &GmmPrior) -> String {
    let mut out = String::new();
    for ((w, v), m) in prior.weights().iter().zip(prior.variances()).zip(prior.means()) {
        out.push_str(&format!("{w},{v}"));
        for x in m.as_slice() {
            out.push_str(&format!(",{x}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_empirical<W: Write>(prior: &EmpiricalPrior, mut out: W) -> Result<()> {
    let s = prior.shape();
    out.write_all(EMPIRICAL_MAGIC)?;
    for v in [s.h, s.w, s.c, prior.len()] {
        out.write_all(&(v as u64).to_le_bytes())?;
    }
    for i in 0..prior.len() {
        for x in prior.point(i) {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_empirical<R: Read>(mut input: R) -> Result<EmpiricalPrior> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != EMPIRICAL_MAGIC {
        return Err(Error::Format("bad magic for empirical prior matrix".into()));
    }
    let mut header = [0u64; 4];
    for h in &mut header {
        let mut b = [0u8; 8];
        input.read_exact(&mut b)?;
        *h = u64::from_le_bytes(b);
    }
    let [h, w, c, count] = header.map(|v| v as usize);
    if count == 0 || h * w * c == 0 {
        return Err(Error::Format("empty empirical prior matrix".into()));
    }
    let shape = Shape::new(h, w, c);
    let mut points = Vec::with_capacity(count);
    let mut b = [0u8; 8];
    for _ in 0..count {
        let mut data = Vec::with_capacity(shape.len());
        for _ in 0..shape.len() {
            input.read_exact(&mut b)?;
            data.push(f64::from_le_bytes(b));
        }
        points.push(Signal::from_vec(shape, data)?);
    }
    EmpiricalPrior::new(points)
}

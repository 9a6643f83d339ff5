//! Mean per-step curves across runs and paired ratio curves.

use std::fmt::Write as _;

use crate::diagnostics::{RunRecord, StepRow};
use crate::error::{Error, Result};

/// Columns aggregated from [`StepRow`], in CSV order.
pub const CURVE_COLUMNS: [&str; 7] =
    ["residual", "craft_residual", "craft_gap", "recon_mse", "eps_error", "freq_ratio", "freq_ratio_guidance"];

fn column(row: &StepRow, i: usize) -> Option<f64> {
    match i {
        0 => Some(row.residual),
        1 => row.craft_residual,
        2 => row.craft_gap,
        3 => row.recon_mse,
        4 => row.eps_error,
        5 => row.freq_ratio,
        6 => row.freq_ratio_guidance,
        _ => None,
    }
}

/// Mean of each column at each `t`; `None` where no run reported it.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub runs: usize,
    pub t: Vec<usize>,
    pub values: Vec<[Option<f64>; 7]>,
}

impl Curve {
    /// Average rows over runs. Every record must share one `t` grid.
    pub fn mean_of(label: &str, records: &[&RunRecord]) -> Result<Self> {
        let first = records.first().ok_or_else(|| Error::CurveMismatch(format!("no runs for {label}")))?;
        let t: Vec<usize> = first.rows.iter().map(|r| r.t).collect();
        let mut sums = vec![[(0.0, 0usize); 7]; t.len()];
        for rec in records {
            if rec.rows.len() != t.len() || rec.rows.iter().zip(&t).any(|(r, t)| r.t != *t) {
                return Err(Error::CurveMismatch(format!("{label}: runs disagree on the timestep grid")));
            }
            for (row, acc) in rec.rows.iter().zip(sums.iter_mut()) {
                for (i, slot) in acc.iter_mut().enumerate() {
                    if let Some(v) = column(row, i) {
                        slot.0 += v;
                        slot.1 += 1;
                    }
                }
            }
        }
        let values = sums.iter().map(|acc| acc.map(|(s, n)| (n > 0).then(|| s / n as f64))).collect();
        Ok(Self { label: label.to_string(), runs: records.len(), t, values })
    }

    /// Mean of column `name` over `lo <= t <= hi`, skipping missing values.
    pub fn window_mean(&self, name: &str, lo: usize, hi: usize) -> Option<f64> {
        let i = CURVE_COLUMNS.iter().position(|c| *c == name)?;
        let vals: Vec<f64> =
            self.t.iter().zip(&self.values).filter(|(t, _)| (lo..=hi).contains(*t)).filter_map(|(_, v)| v[i]).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = CURVE_COLUMNS.iter().position(|c| *c == name)?;
        Some(self.values.iter().map(|v| v[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# label={}\n# runs={}\nt,{}\n", self.label, self.runs, CURVE_COLUMNS.join(","));
        for (t, vals) in self.t.iter().zip(&self.values) {
            let cells: Vec<String> = vals.iter().map(|v| v.map(fmt_cell).unwrap_or_default()).collect();
            let _ = writeln!(out, "{t},{}", cells.join(","));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut label = String::new();
        let mut runs = 0;
        let mut t = Vec::new();
        let mut values = Vec::new();
        let mut header_seen = false;
        for (n, line) in text.lines().enumerate() {
            let perr = |msg: String| Error::Parse { line: n + 1, msg };
            if let Some(meta) = line.strip_prefix("# ") {
                if let Some(v) = meta.strip_prefix("label=") {
                    label = v.to_string();
                } else if let Some(v) = meta.strip_prefix("runs=") {
                    runs = v.parse().map_err(|_| perr(format!("bad run count {v:?}")))?;
                }
                continue;
            }
            if !header_seen {
                if line != format!("t,{}", CURVE_COLUMNS.join(",")) {
                    return Err(perr(format!("unexpected curve header {line:?}")));
                }
                header_seen = true;
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 8 {
                return Err(perr(format!("expected 8 cells, got {}", cells.len())));
            }
            t.push(cells[0].parse().map_err(|_| perr(format!("bad timestep {:?}", cells[0])))?);
            let mut row = [None; 7];
            for (slot, cell) in row.iter_mut().zip(&cells[1..]) {
                if !cell.is_empty() {
                    *slot = Some(parse_cell(cell).ok_or_else(|| perr(format!("bad value {cell:?}")))?);
                }
            }
            values.push(row);
        }
        Ok(Self { label, runs, t, values })
    }
}

fn fmt_cell(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.10e}")
    }
}

fn parse_cell(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        _ => s.parse().ok(),
    }
}

/// Elementwise `a / b` of two mean curves on the same grid. A zero
/// denominator with a nonzero numerator gives `+inf` and flags the row.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioCurve {
    pub numerator: String,
    pub denominator: String,
    pub t: Vec<usize>,
    pub values: Vec<[Option<f64>; 7]>,
    pub flagged: Vec<bool>,
}

pub fn compare_curves(a: &Curve, b: &Curve) -> Result<RatioCurve> {
    if a.t != b.t {
        return Err(Error::CurveMismatch(format!("{} and {} were recorded on different timestep grids", a.label, b.label)));
    }
    let mut flagged = Vec::with_capacity(a.t.len());
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(va, vb)| {
            let mut flag = false;
            let mut out = [None; 7];
            for i in 0..7 {
                out[i] = match (va[i], vb[i]) {
                    (Some(x), Some(y)) if y == 0.0 => {
                        if x == 0.0 {
                            Some(1.0)
                        } else {
                            flag = true;
                            Some(f64::INFINITY)
                        }
                    }
                    (Some(x), Some(y)) => Some(x / y),
                    _ => None,
                };
            }
            flagged.push(flag);
            out
        })
        .collect();
    Ok(RatioCurve { numerator: a.label.clone(), denominator: b.label.clone(), t: a.t.clone(), values, flagged })
}

impl RatioCurve {
    pub fn window_mean(&self, name: &str, lo: usize, hi: usize) -> Option<f64> {
        let i = CURVE_COLUMNS.iter().position(|c| *c == name)?;
        let vals: Vec<f64> = self
            .t
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| (lo..=hi).contains(*t))
            .filter_map(|(_, v)| v[i])
            .filter(|v| v.is_finite())
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# ratio={}/{}\nt,{},flagged\n", self.numerator, self.denominator, CURVE_COLUMNS.join(","));
        for ((t, vals), flag) in self.t.iter().zip(&self.values).zip(&self.flagged) {
            let cells: Vec<String> = vals.iter().map(|v| v.map(fmt_cell).unwrap_or_default()).collect();
            let _ = writeln!(out, "{t},{},{}", cells.join(","), u8::from(*flag));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(ts: &[usize], eps: f64) -> RunRecord {
        RunRecord {
            rows: ts.iter().map(|&t| StepRow { t, residual: 1.0, eps_error: Some(eps * t as f64), ..Default::default() }).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn self_ratio_is_one() {
        let (a, b) = (record(&[20, 10, 1], 1.0), record(&[20, 10, 1], 3.0));
        let c = Curve::mean_of("m", &[&a, &b]).unwrap();
        assert_eq!(c.column("eps_error").unwrap(), vec![Some(40.0), Some(20.0), Some(2.0)]);
        let r = compare_curves(&c, &c).unwrap();
        assert!(r.values.iter().all(|v| v[0] == Some(1.0) && v[4] == Some(1.0)));
        assert!(r.flagged.iter().all(|f| !f));
        assert_eq!(c.window_mean("eps_error", 10, 20), Some(30.0));
    }

    #[test]
    fn zero_denominator_is_flagged() {
        let a = Curve::mean_of("a", &[&record(&[2, 1], 1.0)]).unwrap();
        let b = Curve::mean_of("b", &[&record(&[2, 1], 0.0)]).unwrap();
        let r = compare_curves(&a, &b).unwrap();
        assert_eq!(r.values[0][4], Some(f64::INFINITY));
        assert!(r.flagged.iter().all(|f| *f));
        assert!(r.to_csv().lines().nth(2).unwrap().ends_with(",1"));
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = Curve::mean_of("a", &[&record(&[3, 1], 1.0)]).unwrap();
        let b = Curve::mean_of("b", &[&record(&[2, 1], 1.0)]).unwrap();
        assert!(matches!(compare_curves(&a, &b), Err(Error::CurveMismatch(_))));
        assert!(Curve::mean_of("c", &[&record(&[3, 1], 1.0), &record(&[2, 1], 1.0)]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut rec = record(&[5, 1], 2.0);
        rec.rows[0].freq_ratio = Some(f64::INFINITY);
        let c = Curve::mean_of("lbl", &[&rec]).unwrap();
        assert_eq!(Curve::parse_csv(&c.to_csv()).unwrap(), c);
    }
}

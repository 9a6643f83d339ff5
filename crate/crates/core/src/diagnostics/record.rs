use std::fmt::Write as _;
use std::time::Duration;

/// One logged timestep. Quantities that do not apply to a method are `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepRow {
    pub t: usize,
    /// `||y - A(x0hat)||`
    pub residual: f64,
    /// `||y0hat - A(x0hat)||`, crafted methods only.
    pub craft_residual: Option<f64>,
    /// `||y0hat - y||`, crafted methods only.
    pub craft_gap: Option<f64>,
    pub recon_mse: Option<f64>,
    pub eps_error: Option<f64>,
    /// Spectral ratio of the posterior-gradient estimate `score - zeta * grad`.
    pub freq_ratio: Option<f64>,
    /// Spectral ratio of the guidance gradient alone.
    pub freq_ratio_guidance: Option<f64>,
}

pub const ROW_HEADER: &str = "t,residual,craft_residual,craft_gap,recon_mse,eps_error,freq_ratio,freq_ratio_guidance";

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) => fmt_num(x),
    }
}

pub(crate) fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.10e}")
    }
}

impl StepRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.t,
            fmt_num(self.residual),
            fmt_opt(self.craft_residual),
            fmt_opt(self.craft_gap),
            fmt_opt(self.recon_mse),
            fmt_opt(self.eps_error),
            fmt_opt(self.freq_ratio),
            fmt_opt(self.freq_ratio_guidance)
        )
    }

    /// Any non-finite value, excluding the `+inf` spectral sentinel.
    pub fn has_unflagged_nonfinite(&self) -> bool {
        let base = [Some(self.residual), self.craft_residual, self.craft_gap, self.recon_mse, self.eps_error];
        base.iter().flatten().any(|v| !v.is_finite())
            || [self.freq_ratio, self.freq_ratio_guidance].iter().flatten().any(|v| v.is_nan())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FinalMetrics {
    pub psnr: f64,
    pub ssim: f64,
    pub mse: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    pub method: String,
    /// Echo of every sampler setting, in a fixed order.
    pub config: Vec<(String, String)>,
    pub rows: Vec<StepRow>,
    pub final_metrics: Option<FinalMetrics>,
    pub x_score_evals: usize,
    pub y_score_evals: usize,
    /// Crafted-trajectory model description (shared or pushforward and its
    /// covariance mode).
    pub craft_model: Option<String>,
    pub wall_clock: Duration,
}

impl RunRecord {
    pub fn config_value(&self, key: &str) -> Option<&str> {
        self.config.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Per-step rows as CSV, preceded by `#`-prefixed config echo lines.
    /// Wall-clock time is deliberately left out so reruns are byte-identical.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# method={}", self.method);
        for (k, v) in &self.config {
            let _ = writeln!(out, "# {k}={v}");
        }
        if let Some(c) = &self.craft_model {
            let _ = writeln!(out, "# craft_model={c}");
        }
        let _ = writeln!(out, "# x_score_evals={}", self.x_score_evals);
        let _ = writeln!(out, "# y_score_evals={}", self.y_score_evals);
        if let Some(m) = &self.final_metrics {
            let _ = writeln!(out, "# final_psnr={}", fmt_num(m.psnr));
            let _ = writeln!(out, "# final_ssim={}", fmt_num(m.ssim));
            let _ = writeln!(out, "# final_mse={}", fmt_num(m.mse));
        }
        out.push_str(ROW_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.to_csv_line());
            out.push('\n');
        }
        out
    }

    pub fn rows_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].t > w[1].t)
    }
}

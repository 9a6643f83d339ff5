//! Flat `key = value` experiment files with `[experiment]` and
//! `[method.<label>]` sections. `#` starts a comment.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::craft::{CovarianceMode, CraftMode};
use crate::error::{Error, Result};
use crate::operators::{NoiseModel, OperatorSpec, DEFAULT_POISSON_SCALE};
use crate::samplers::{GuidanceNorm, Method, SamplerConfig, StepSize};
use crate::schedule::{SigmaMode, DEFAULT_BETA_END, DEFAULT_BETA_START, DEFAULT_STEPS};

/// Raw sections in file order; keys within a section are sorted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub sections: Vec<(String, BTreeMap<String, String>)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = ConfigFile::default();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Parse { line, msg: format!("unterminated section header {body:?}") })?
                    .trim();
                if out.sections.iter().any(|(s, _)| s == name) {
                    return Err(Error::Parse { line, msg: format!("duplicate section [{name}]") });
                }
                out.sections.push((name.to_string(), BTreeMap::new()));
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| Error::Parse { line, msg: format!("expected key = value, got {body:?}") })?;
            let section = out
                .sections
                .last_mut()
                .ok_or_else(|| Error::Parse { line, msg: "key outside any section".into() })?;
            if section.1.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Parse { line, msg: format!("duplicate key {:?}", k.trim()) });
            }
        }
        Ok(out)
    }

    pub fn section(&self, name: &str) -> Option<&BTreeMap<String, String>> {
        self.sections.iter().find(|(s, _)| s == name).map(|(_, m)| m)
    }
}

/// Where images come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ImageSource {
    /// `synthetic:<first>..<end>` or `synthetic:<count>` (starting at 0).
    Synthetic { seed: u64, first: u64, count: usize },
    /// `pngdir:<path>`
    PngDir(PathBuf),
}

/// The x-space prior.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorSource {
    /// Empirical prior over images.
    Images(ImageSource),
    /// `empirical:<path>` in the binary point format.
    EmpiricalFile(PathBuf),
    /// `gmm:<path>` in the CSV format.
    GmmFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub label: String,
    pub config: SamplerConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub side: usize,
    pub color: bool,
    pub operator: OperatorSpec,
    pub noise: NoiseModel,
    pub prior: PriorSource,
    pub test_images: ImageSource,
    pub seeds: Vec<u64>,
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub sigma_mode: SigmaMode,
    pub craft_mode: CraftMode,
    pub covariance: CovarianceMode,
    pub diag_stride: usize,
    pub eps_error: bool,
    pub spectral_cutoff: Option<usize>,
    pub save_images: bool,
    pub jobs: usize,
    pub output: PathBuf,
    pub methods: Vec<MethodSpec>,
}

struct Keys<'a> {
    section: &'a str,
    map: &'a BTreeMap<String, String>,
}

impl Keys<'_> {
    fn err(&self, key: &str, msg: impl std::fmt::Display) -> Error {
        Error::InvalidConfig(format!("[{}] {key}: {msg}", self.section))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| self.err(key, format!("cannot parse {v:?}"))),
        }
    }

    fn str(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.str(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(self.err(key, format!("expected true/false, got {v:?}"))),
        }
    }
}

fn parse_range(text: &str) -> Option<(u64, usize)> {
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        (b > a).then(|| (a, (b - a) as usize))
    } else {
        let n: usize = text.trim().parse().ok()?;
        (n > 0).then_some((0, n))
    }
}

fn parse_images(v: &str, seed: u64) -> Option<ImageSource> {
    if let Some(r) = v.strip_prefix("synthetic:") {
        let (first, count) = parse_range(r)?;
        Some(ImageSource::Synthetic { seed, first, count })
    } else {
        v.strip_prefix("pngdir:").map(|p| ImageSource::PngDir(PathBuf::from(p)))
    }
}

/// `0,1,2` or `0..5`.
pub fn parse_seeds(v: &str) -> Option<Vec<u64>> {
    if v.contains("..") {
        let (a, n) = parse_range(v)?;
        return Some((a..a + n as u64).collect());
    }
    v.split(',').map(|s| s.trim().parse().ok()).collect()
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_file(&ConfigFile::parse(text)?)
    }

    pub fn from_file(file: &ConfigFile) -> Result<Self> {
        let exp = file.section("experiment").ok_or_else(|| Error::InvalidConfig("missing [experiment] section".into()))?;
        let k = Keys { section: "experiment", map: exp };
        let side: usize = k.parse("side", 32)?;
        let dataset_seed: u64 = k.parse("dataset_seed", 7)?;

        let mut op_pairs = exp.clone();
        let task = k.str("task").ok_or_else(|| k.err("task", "missing"))?;
        op_pairs.insert("kind".into(), task.into());
        let operator = OperatorSpec::from_pairs(&op_pairs, side)?;

        let noise = match k.str("noise").unwrap_or("gaussian") {
            "gaussian" => NoiseModel::gaussian(k.parse("noise_sigma", 0.05)?)?,
            "poisson" => NoiseModel::poisson(k.parse("poisson_lambda", 1.0)?, k.parse("poisson_scale", DEFAULT_POISSON_SCALE)?)?,
            other => return Err(k.err("noise", format!("unknown noise model {other:?}"))),
        };

        let prior_text = k.str("prior").unwrap_or("synthetic:64");
        let prior = if let Some(p) = prior_text.strip_prefix("empirical:") {
            PriorSource::EmpiricalFile(p.into())
        } else if let Some(p) = prior_text.strip_prefix("gmm:") {
            PriorSource::GmmFile(p.into())
        } else {
            PriorSource::Images(parse_images(prior_text, dataset_seed).ok_or_else(|| k.err("prior", format!("cannot parse {prior_text:?}")))?)
        };
        let test_text = k.str("test_images").unwrap_or("synthetic:1000..1010");
        let test_images = parse_images(test_text, dataset_seed).ok_or_else(|| k.err("test_images", format!("cannot parse {test_text:?}")))?;

        let seeds = parse_seeds(k.str("seeds").unwrap_or("0..5")).ok_or_else(|| k.err("seeds", "expected a list like 0,1,2 or a range 0..5"))?;
        if seeds.is_empty() {
            return Err(k.err("seeds", "at least one seed is required"));
        }
        let sigma_mode = match k.str("sigma_mode") {
            None => SigmaMode::Simple,
            Some(v) => SigmaMode::parse(v).ok_or_else(|| k.err("sigma_mode", format!("unknown {v:?}")))?,
        };
        let craft_mode = match k.str("craft_mode") {
            None => CraftMode::Auto,
            Some(v) => CraftMode::parse(v).ok_or_else(|| k.err("craft_mode", format!("unknown {v:?}")))?,
        };
        let covariance = match k.str("covariance") {
            None => CovarianceMode::Isotropic,
            Some(v) => CovarianceMode::parse(v).ok_or_else(|| k.err("covariance", format!("unknown {v:?}")))?,
        };
        let steps = k.parse("steps", DEFAULT_STEPS)?;

        let mut methods = Vec::new();
        for (name, map) in &file.sections {
            let Some(label) = name.strip_prefix("method.") else {
                if name != "experiment" {
                    return Err(Error::InvalidConfig(format!("unknown section [{name}]")));
                }
                continue;
            };
            let mk = Keys { section: name, map };
            let method_name = mk.str("method").unwrap_or(label);
            let method = Method::parse(method_name).ok_or_else(|| mk.err("method", format!("unknown method {method_name:?}")))?;
            let mut config = SamplerConfig::new(method);
            config.zeta = StepSize::Constant(mk.parse("zeta", 1.0)?);
            config.omega = StepSize::Constant(mk.parse("omega", 1.0)?);
            config.mu = mk.parse("mu", 0.5)?;
            config.mc_samples = mk.parse("mc_samples", 1)?;
            config.mc_radius = mk.parse("mc_radius", config.mc_radius)?;
            config.poisson_floor = mk.parse("poisson_floor", config.poisson_floor)?;
            config.accel_cutoff = match mk.str("accel_cutoff") {
                None | Some("none") => None,
                Some(v) => Some(v.parse().map_err(|_| mk.err("accel_cutoff", format!("cannot parse {v:?}")))?),
            };
            if let Some(v) = mk.str("guidance_norm") {
                config.guidance_norm = GuidanceNorm::parse(v).ok_or_else(|| mk.err("guidance_norm", format!("unknown {v:?}")))?;
            }
            config.validate(steps)?;
            methods.push(MethodSpec { label: label.to_string(), config });
        }
        if methods.is_empty() {
            return Err(Error::InvalidConfig("at least one [method.<label>] section is required".into()));
        }

        let spec = Self {
            name: k.str("name").unwrap_or("experiment").to_string(),
            side,
            color: k.bool("color", false)?,
            operator,
            noise,
            prior,
            test_images,
            seeds,
            steps,
            beta_start: k.parse("beta_start", DEFAULT_BETA_START)?,
            beta_end: k.parse("beta_end", DEFAULT_BETA_END)?,
            sigma_mode,
            craft_mode,
            covariance,
            diag_stride: k.parse("diag_stride", 10)?,
            eps_error: k.bool("eps_error", true)?,
            spectral_cutoff: match k.str("spectral_cutoff") {
                None => None,
                Some(v) => Some(v.parse().map_err(|_| k.err("spectral_cutoff", format!("cannot parse {v:?}")))?),
            },
            save_images: k.bool("save_images", true)?,
            jobs: k.parse("jobs", 0)?,
            output: PathBuf::from(k.str("output").unwrap_or("out")),
            methods,
        };
        Ok(spec)
    }
}

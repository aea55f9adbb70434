//! Sweep configuration files (TOML).
//!
//! ```toml
//! master_seed = 7
//! workers = 4
//!
//! [code]
//! path = "codes/r12_n2048.alist"   # relative to this file
//! puncture_target = 0.55           # optional
//! puncture_seed = 0
//!
//! [grid]
//! beta = [0.80, 0.84, 0.88]
//!
//! [stop]
//! min_frame_errors = 100
//! max_frames = 10000
//!
//! [[policies]]
//! label = "pce-200"
//! d_max = 200
//!
//! [[policies]]
//! label = "vnr"
//! d_max = "unbounded"
//! use_vnr = true
//!
//! [qkd]
//! distance_km = 80.0
//! v_a_mode = "rate"
//! ```
//!
//! Any field can be overridden with a dotted `key=value` assignment, e.g.
//! `stop.max_frames=500` or `policies.1.d_max=300`.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::StopCriterion;
use crate::decoder::{DecodeConfig, IterationLimit, DEFAULT_MSG_CLAMP};
use crate::qkd::{Detection, QkdSystemParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub master_seed: u64,
    /// Worker threads; defaults to the number of CPUs.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Records CSV path, relative to the config file.
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub code: CodeSection,
    pub grid: GridSection,
    #[serde(default)]
    pub stop: StopSection,
    #[serde(default)]
    pub decoder: DecoderSection,
    pub policies: Vec<PolicyConfig>,
    #[serde(default)]
    pub qkd: QkdSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSection {
    pub path: PathBuf,
    #[serde(default)]
    pub puncture_target: Option<f64>,
    #[serde(default)]
    pub puncture_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub beta: Vec<f64>,
    /// Fixed channel SNR used for every grid point instead of the β
    /// mapping. Meant for degenerate checks such as the noiseless limit.
    #[serde(default)]
    pub snr_override: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopSection {
    /// 0 disables the error-count rule.
    pub min_frame_errors: u64,
    pub max_frames: u64,
}

impl Default for StopSection {
    fn default() -> Self {
        let d = StopCriterion::default();
        Self {
            min_frame_errors: d.min_frame_errors.unwrap_or(0),
            max_frames: d.max_frames,
        }
    }
}

impl StopSection {
    pub fn criterion(&self) -> StopCriterion {
        StopCriterion {
            min_frame_errors: (self.min_frame_errors > 0).then_some(self.min_frame_errors),
            max_frames: self.max_frames,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoderSection {
    pub msg_clamp: f64,
}

impl Default for DecoderSection {
    fn default() -> Self {
        Self {
            msg_clamp: DEFAULT_MSG_CLAMP,
        }
    }
}

/// An iteration limit as written in a config: a count or `"unbounded"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DMaxSpec {
    Count(usize),
    Keyword(String),
}

impl DMaxSpec {
    fn limit(&self, field: &str) -> Result<IterationLimit> {
        match self {
            DMaxSpec::Count(n) => Ok(IterationLimit::Bounded(*n)),
            DMaxSpec::Keyword(k) if k == "unbounded" => Ok(IterationLimit::Unbounded),
            DMaxSpec::Keyword(k) => Err(Error::Config(format!(
                "{field}: expected an iteration count or \"unbounded\", got \"{k}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub label: String,
    pub d_max: DMaxSpec,
    #[serde(default = "yes")]
    pub use_pce: bool,
    #[serde(default)]
    pub use_vnr: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VaMode {
    /// `V_A` solved so that `I_AB = R / β` at every grid point.
    Rate,
    /// `V_A` taken from the config as is.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QkdSection {
    pub distance_km: f64,
    pub loss_db_per_km: f64,
    pub eta: f64,
    pub nu_el: f64,
    pub xi: f64,
    pub v_a: f64,
    pub v_a_mode: VaMode,
    pub detection: Detection,
    pub n_privacy: f64,
    pub eps_bar: f64,
    pub eps_pa: f64,
    pub f_rep: Option<f64>,
    /// Block length `N` used in the throughput formulas; defaults to the
    /// number of transmitted code bits.
    pub block_length: Option<f64>,
}

impl Default for QkdSection {
    fn default() -> Self {
        let p = QkdSystemParams::default();
        Self {
            distance_km: p.distance_km,
            loss_db_per_km: p.loss_db_per_km,
            eta: p.eta,
            nu_el: p.nu_el,
            xi: p.xi,
            v_a: p.v_a,
            v_a_mode: VaMode::Rate,
            detection: p.detection,
            n_privacy: p.n_privacy,
            eps_bar: p.eps_bar,
            eps_pa: p.eps_pa,
            f_rep: p.f_rep,
            block_length: None,
        }
    }
}

impl QkdSection {
    pub fn params(&self) -> QkdSystemParams {
        QkdSystemParams {
            distance_km: self.distance_km,
            loss_db_per_km: self.loss_db_per_km,
            eta: self.eta,
            nu_el: self.nu_el,
            xi: self.xi,
            v_a: self.v_a,
            detection: self.detection,
            n_privacy: self.n_privacy,
            eps_bar: self.eps_bar,
            eps_pa: self.eps_pa,
            f_rep: self.f_rep,
        }
    }
}

/// A validated policy: label plus decoder settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub label: String,
    pub decode: DecodeConfig,
}

impl SweepConfig {
    /// Parses TOML text. Syntax and type errors carry line/column.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses TOML text after applying `key=value` overrides.
    pub fn from_toml_with_overrides<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Self::from_toml(text);
        }
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o.as_ref())?;
        }
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load<S: AsRef<str>>(path: impl AsRef<Path>, overrides: &[S]) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_with_overrides(&text, overrides)
            .map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
                other => other,
            })?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.code.path.is_relative() {
            cfg.code.path = base.join(&cfg.code.path);
        }
        if let Some(out) = cfg.out.as_mut() {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.beta.is_empty() {
            return Err(Error::Config("grid.beta: must not be empty".into()));
        }
        for (i, &b) in self.grid.beta.iter().enumerate() {
            if !(b > 0.0 && b <= 1.0) {
                return Err(Error::Config(format!(
                    "grid.beta[{i}]: {b} outside (0, 1]"
                )));
            }
        }
        if let Some(s) = self.grid.snr_override {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!(
                    "grid.snr_override: {s} must be positive and finite"
                )));
            }
        }
        if self.stop.max_frames == 0 {
            return Err(Error::Config("stop.max_frames: must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers: must be at least 1".into()));
        }
        if let Some(t) = self.code.puncture_target {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!(
                    "code.puncture_target: {t} outside (0, 1)"
                )));
            }
        }
        if self.policies.is_empty() {
            return Err(Error::Config("policies: at least one policy is required".into()));
        }
        let mut seen = HashSet::new();
        for (i, p) in self.policies.iter().enumerate() {
            if p.label.is_empty() {
                return Err(Error::Config(format!("policies[{i}].label: empty")));
            }
            if !seen.insert(p.label.as_str()) {
                return Err(Error::Config(format!(
                    "policies[{i}].label: duplicate label \"{}\"",
                    p.label
                )));
            }
        }
        self.resolved_policies()?;
        let params = self.qkd.params();
        params
            .validate()
            .map_err(|e| Error::Config(format!("qkd: {e}")))?;
        if let Some(n) = self.qkd.block_length {
            if !(n >= 1.0) {
                return Err(Error::Config(format!("qkd.block_length: {n} below 1")));
            }
        }
        Ok(())
    }

    pub fn resolved_policies(&self) -> Result<Vec<Policy>> {
        self.policies
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let decode = DecodeConfig {
                    d_max: p.d_max.limit(&format!("policies[{i}].d_max"))?,
                    use_pce: p.use_pce,
                    use_vnr: p.use_vnr,
                    msg_clamp: self.decoder.msg_clamp,
                };
                decode
                    .validate()
                    .map_err(|e| Error::Config(format!("policies[{i}] ({}): {e}", p.label)))?;
                Ok(Policy {
                    label: p.label.clone(),
                    decode,
                })
            })
            .collect()
    }
}

/// Sets `path=value` in `table`. Numeric path segments index arrays.
/// The value is parsed as TOML, falling back to a bare string.
fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}`: expected key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()));

    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::Config(format!("override `{assignment}`: empty key segment")));
    }
    let mut root = toml::Value::Table(std::mem::take(table));
    let result = set_path(&mut root, &segments, value)
        .map_err(|msg| Error::Config(format!("override `{key}`: {msg}")));
    if let toml::Value::Table(t) = root {
        *table = t;
    }
    result
}

fn set_path(node: &mut toml::Value, segments: &[&str], value: toml::Value) -> Result<(), String> {
    let Some((seg, rest)) = segments.split_first() else {
        *node = value;
        return Ok(());
    };
    let child = match node {
        toml::Value::Table(t) => t
            .entry((*seg).to_owned())
            .or_insert_with(|| toml::Value::Table(toml::Table::new())),
        toml::Value::Array(a) => {
            let len = a.len();
            let idx: usize = seg
                .parse()
                .map_err(|_| format!("`{seg}` is not an array index"))?;
            a.get_mut(idx)
                .ok_or_else(|| format!("index {idx} out of range (len {len})"))?
        }
        _ => return Err(format!("`{seg}` is inside a non-table value")),
    };
    set_path(child, rest, value)
}

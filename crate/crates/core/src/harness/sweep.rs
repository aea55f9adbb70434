use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{SweepConfig, VaMode};
use crate::channel::{run_trials, snr_for_beta, ChannelPoint, TrialStats};
use crate::code::{apply_puncture, load_alist, ParityCheckMatrix, PunctureMask};
use crate::decoder::{IterationLimit, TerminationReason};
use crate::qkd::{
    decoder_throughput, finite_size_penalty, holevo_bound, mutual_information, skr_dec_from_margin,
    solve_va_for_iab, QkdSystemParams, SkrBreakdown,
};
use crate::{Error, Result};

/// One (β, policy) cell of a sweep. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub beta: f64,
    pub snr: f64,
    pub policy_label: String,
    /// Iteration limit, or `unbounded`.
    pub d_max: String,
    pub use_pce: bool,
    pub use_vnr: bool,
    pub rate: f64,
    /// Transmitted bits per frame used in the throughput formulas.
    pub block_length: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub undetected_errors: u64,
    pub fer: f64,
    pub fer_ci_low: f64,
    pub fer_ci_high: f64,
    pub d_bar: f64,
    pub d_p99: usize,
    pub d_observed_max: usize,
    pub vnr_stops: u64,
    pub safety_cap_hits: u64,
    pub k_throughput: f64,
    pub i_ab: f64,
    pub chi_be: f64,
    pub delta_n: f64,
    pub skr: f64,
    pub skr_dec: f64,
    pub skr_negative: bool,
    pub v_a_used: f64,
    pub seed: u64,
    pub min_frame_errors: u64,
    pub max_frames: u64,
    pub exhausted_max_frames: bool,
    /// `none`, or the puncture-pattern stand-in that was used.
    pub puncture: String,
    /// Sidecar iteration histogram, relative to the records file.
    pub iter_histogram_path: String,
}

/// The code and mask a sweep runs on.
pub struct PreparedCode {
    pub code: ParityCheckMatrix,
    pub mask: PunctureMask,
}

impl PreparedCode {
    pub fn load(cfg: &SweepConfig) -> Result<Self> {
        let code = load_alist(&cfg.code.path)?;
        code.validate_rate()?;
        let mask = match cfg.code.puncture_target {
            Some(t) => apply_puncture(&code, t, cfg.code.puncture_seed)?,
            None => PunctureMask::none(&code),
        };
        Ok(Self { code, mask })
    }

    fn puncture_label(&self, cfg: &SweepConfig) -> String {
        if self.mask.is_empty() {
            "none".into()
        } else {
            format!(
                "seeded-uniform(seed={},count={})",
                cfg.code.puncture_seed,
                self.mask.len()
            )
        }
    }
}

/// Histogram sidecar location for a records file: `<stem>.hist/`.
fn histogram_dir(out: &Path) -> (PathBuf, String) {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "records".into());
    let rel = format!("{stem}.hist");
    let dir = out.parent().unwrap_or(Path::new("")).join(&rel);
    (dir, rel)
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

fn write_histogram(path: &Path, stats: &TrialStats) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::from("iterations,frames\n");
    for (d, n) in &stats.histogram {
        text.push_str(&format!("{d},{n}\n"));
    }
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Runs every (β, policy) cell of `cfg` in grid order.
///
/// With `out`, each record is appended to the CSV and flushed as soon as
/// its cell finishes, so an interrupted sweep leaves a valid prefix, and
/// iteration histograms are written next to it. Worker threads come from
/// `cfg.workers`; results do not depend on the count.
pub fn run_sweep(cfg: &SweepConfig, out: Option<&Path>) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let prepared = PreparedCode::load(cfg)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("workers: {e}")))?;
    pool.install(|| sweep_on(cfg, &prepared, out))
}

fn sweep_on(
    cfg: &SweepConfig,
    prepared: &PreparedCode,
    out: Option<&Path>,
) -> Result<Vec<SweepRecord>> {
    let policies = cfg.resolved_policies()?;
    let rate = prepared.mask.effective_rate();
    let block_length = cfg
        .qkd
        .block_length
        .unwrap_or(prepared.mask.transmitted_len() as f64);
    let stop = cfg.stop.criterion();
    let base_params = cfg.qkd.params();
    let puncture = prepared.puncture_label(cfg);

    let mut writer = match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let (hist_dir, hist_rel) = histogram_dir(path);
            fs::create_dir_all(&hist_dir).map_err(|e| Error::io(&hist_dir, e))?;
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            Some((csv::Writer::from_writer(file), hist_dir, hist_rel, path))
        }
        None => None,
    };

    let mut records = Vec::with_capacity(cfg.grid.beta.len() * policies.len());
    for &beta in &cfg.grid.beta {
        let point = match cfg.grid.snr_override {
            Some(snr) => ChannelPoint {
                beta,
                ..ChannelPoint::from_snr(snr, rate)?
            },
            None => snr_for_beta(beta, rate)?,
        };
        let params = match cfg.qkd.v_a_mode {
            VaMode::Rate => base_params.with_v_a(solve_va_for_iab(rate / beta, &base_params)?),
            VaMode::Fixed => base_params,
        };
        let key = KeyTerms::new(&params)?;

        for policy in &policies {
            let stats = run_trials(
                &prepared.code,
                &prepared.mask,
                &point,
                &policy.decode,
                stop,
                cfg.master_seed,
            )?;
            let file_name = format!("beta{beta:.6}_{}.csv", sanitize(&policy.label));
            let hist_rel = writer
                .as_ref()
                .map(|(_, _, rel, _)| format!("{rel}/{file_name}"))
                .unwrap_or_default();

            let fer = stats.fer();
            let d_bar = stats.d_bar();
            let (fer_ci_low, fer_ci_high) = stats.fer_interval();
            let breakdown = SkrBreakdown::from_components(key.i_ab, key.chi_be, key.delta_n, beta, fer);
            let record = SweepRecord {
                beta,
                snr: point.snr,
                policy_label: policy.label.clone(),
                d_max: match policy.decode.d_max {
                    IterationLimit::Bounded(n) => n.to_string(),
                    IterationLimit::Unbounded => "unbounded".into(),
                },
                use_pce: policy.decode.use_pce,
                use_vnr: policy.decode.use_vnr,
                rate,
                block_length,
                frames: stats.frames,
                frame_errors: stats.frame_errors,
                undetected_errors: stats.undetected_errors,
                fer,
                fer_ci_low,
                fer_ci_high,
                d_bar,
                d_p99: stats.iteration_quantile(0.99),
                d_observed_max: stats.max_iterations(),
                vnr_stops: stats.reason_count(TerminationReason::VnrDrop),
                safety_cap_hits: stats.reason_count(TerminationReason::SafetyCap),
                k_throughput: decoder_throughput(block_length, d_bar, rate, fer),
                i_ab: key.i_ab,
                chi_be: key.chi_be,
                delta_n: key.delta_n,
                skr: breakdown.skr,
                skr_dec: skr_dec_from_margin(
                    block_length,
                    d_bar,
                    params.detection.mu(),
                    fer,
                    breakdown.margin(),
                ),
                skr_negative: breakdown.is_negative(),
                v_a_used: params.v_a,
                seed: cfg.master_seed,
                min_frame_errors: stop.min_frame_errors.unwrap_or(0),
                max_frames: stop.max_frames,
                exhausted_max_frames: stats.exhausted_max_frames,
                puncture: puncture.clone(),
                iter_histogram_path: hist_rel,
            };

            if let Some((w, hist_dir, _, path)) = writer.as_mut() {
                write_histogram(&hist_dir.join(&file_name), &stats)?;
                let csv_err = |e: csv::Error| Error::Csv {
                    context: path.display().to_string(),
                    msg: e.to_string(),
                };
                w.serialize(&record).map_err(csv_err)?;
                w.flush().map_err(|e| Error::io(*path, e))?;
            }
            records.push(record);
        }
    }
    Ok(records)
}

struct KeyTerms {
    i_ab: f64,
    chi_be: f64,
    delta_n: f64,
}

impl KeyTerms {
    fn new(p: &QkdSystemParams) -> Result<Self> {
        Ok(Self {
            i_ab: mutual_information(p),
            chi_be: holevo_bound(p)?,
            delta_n: finite_size_penalty(p),
        })
    }
}

/// Reads a records CSV written by [`run_sweep`].
pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<SweepRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    super::read_csv_rows(csv::Reader::from_reader(file), &path.display().to_string())
}

/// Writes records as CSV (header plus one row per record).
pub fn write_records(path: impl AsRef<Path>, records: &[SweepRecord]) -> Result<()> {
    super::write_csv(path, records)
}

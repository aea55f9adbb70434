use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::compare::RatioFlag;
use super::config::{QkdSection, VaMode};
use super::{read_csv_rows, SweepRecord};
use crate::qkd::{
    finite_size_penalty, holevo_bound, mutual_information, optimize_beta, skr_dec_from_margin,
    solve_va_for_iab, BetaPoint, QkdSystemParams, SkrBreakdown,
};
use crate::{Error, Result};

/// Per-(β, policy) key rates with optimum markers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkrRow {
    pub beta: f64,
    pub policy_label: String,
    pub fer: f64,
    pub d_bar: f64,
    pub i_ab: f64,
    pub chi_be: f64,
    pub delta_n: f64,
    pub skr: f64,
    pub skr_dec: f64,
    pub skr_negative: bool,
    /// This β maximises SKR for the policy.
    pub beta_opt_skr: bool,
    /// This β maximises SKR_dec for the policy.
    pub beta_opt_skr_dec: bool,
}

/// Key-rate table from sweep records.
///
/// With `qkd`, the key terms are recomputed from those system parameters
/// (using each record's rate, FER and D̄); otherwise the values stored in
/// the records are used.
pub fn skr_table(records: &[SweepRecord], qkd: Option<&QkdSection>) -> Result<Vec<SkrRow>> {
    if records.is_empty() {
        return Err(Error::Empty("no sweep records"));
    }
    let mut rows = records
        .iter()
        .map(|r| match qkd {
            None => Ok(SkrRow {
                beta: r.beta,
                policy_label: r.policy_label.clone(),
                fer: r.fer,
                d_bar: r.d_bar,
                i_ab: r.i_ab,
                chi_be: r.chi_be,
                delta_n: r.delta_n,
                skr: r.skr,
                skr_dec: r.skr_dec,
                skr_negative: r.skr_negative,
                beta_opt_skr: false,
                beta_opt_skr_dec: false,
            }),
            Some(section) => recompute(r, section),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut labels: Vec<String> = Vec::new();
    for r in &rows {
        if !labels.contains(&r.policy_label) {
            labels.push(r.policy_label.clone());
        }
    }
    for label in labels {
        let points: Vec<BetaPoint> = rows
            .iter()
            .filter(|r| r.policy_label == label)
            .map(|r| BetaPoint {
                beta: r.beta,
                skr: r.skr,
                skr_dec: r.skr_dec,
            })
            .collect();
        let opt = optimize_beta(&points)?;
        for r in rows.iter_mut().filter(|r| r.policy_label == label) {
            r.beta_opt_skr = r.beta == opt.beta_skr;
            r.beta_opt_skr_dec = r.beta == opt.beta_skr_dec;
        }
    }
    Ok(rows)
}

fn recompute(r: &SweepRecord, section: &QkdSection) -> Result<SkrRow> {
    let base = section.params();
    let params = match section.v_a_mode {
        VaMode::Rate => base.with_v_a(solve_va_for_iab(r.rate / r.beta, &base)?),
        VaMode::Fixed => base,
    };
    let i_ab = mutual_information(&params);
    let chi_be = holevo_bound(&params)?;
    let delta_n = finite_size_penalty(&params);
    let b = SkrBreakdown::from_components(i_ab, chi_be, delta_n, r.beta, r.fer);
    let n = section.block_length.unwrap_or(r.block_length);
    Ok(SkrRow {
        beta: r.beta,
        policy_label: r.policy_label.clone(),
        fer: r.fer,
        d_bar: r.d_bar,
        i_ab,
        chi_be,
        delta_n,
        skr: b.skr,
        skr_dec: skr_dec_from_margin(n, r.d_bar, params.detection.mu(), r.fer, b.margin()),
        skr_negative: b.is_negative(),
        beta_opt_skr: false,
        beta_opt_skr_dec: false,
    })
}

/// One row of a user-supplied captures table: measured key terms for one
/// capture decoded with one policy at one β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureRow {
    pub capture_id: String,
    pub policy_label: String,
    pub beta: f64,
    pub i_ab: f64,
    pub chi_be: f64,
    pub fer: f64,
    pub d_bar: f64,
}

const CAPTURE_COLUMNS: [&str; 7] = [
    "capture_id",
    "policy_label",
    "beta",
    "i_ab",
    "chi_be",
    "fer",
    "d_bar",
];

/// Parses a captures CSV, checking the header and every value.
pub fn read_captures<R: Read>(reader: R, context: &str) -> Result<Vec<CaptureRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Csv {
        context: context.to_owned(),
        msg: e.to_string(),
    })?;
    let missing: Vec<&str> = CAPTURE_COLUMNS
        .iter()
        .copied()
        .filter(|c| !headers.iter().any(|h| h == *c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Csv {
            context: format!("{context} line 1"),
            msg: format!("missing column(s): {}", missing.join(", ")),
        });
    }
    let rows: Vec<CaptureRow> = read_csv_rows(rdr, context)?;
    for (i, r) in rows.iter().enumerate() {
        let bad = |column: &str, msg: String| Error::Csv {
            context: format!("{context} line {}, column `{column}`", i + 2),
            msg,
        };
        if !(r.beta > 0.0 && r.beta <= 1.0) {
            return Err(bad("beta", format!("{} outside (0, 1]", r.beta)));
        }
        if !(0.0..=1.0).contains(&r.fer) {
            return Err(bad("fer", format!("{} outside [0, 1]", r.fer)));
        }
        if !(r.d_bar >= 1.0) {
            return Err(bad("d_bar", format!("{} below 1", r.d_bar)));
        }
        if !r.i_ab.is_finite() || !r.chi_be.is_finite() {
            return Err(bad("i_ab/chi_be", "values must be finite".into()));
        }
    }
    Ok(rows)
}

pub fn read_captures_file(path: impl AsRef<Path>) -> Result<Vec<CaptureRow>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_captures(file, &path.display().to_string())
}

/// Best operating point of one policy on one capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureSummary {
    pub capture_id: String,
    pub policy_label: String,
    /// β maximising SKR_dec among this capture's rows for this policy.
    pub beta_opt: f64,
    pub i_ab: f64,
    pub chi_be: f64,
    pub delta_n: f64,
    pub fer: f64,
    pub d_bar: f64,
    pub skr: f64,
    pub skr_dec: f64,
    pub skr_negative: bool,
    pub baseline_label: String,
    /// `SKR_dec / SKR_dec(baseline)` at each policy's own optimum.
    pub skr_dec_ratio: Option<f64>,
    pub skr_dec_ratio_flag: RatioFlag,
}

/// Key rates for externally measured captures.
///
/// `params` supplies `Δ_n` (through `N_privacy` and the epsilons) and μ;
/// `block_length` is the code length `N`. Captures are ordered by the β at
/// which the first non-baseline policy maximises SKR_dec.
pub fn external_skr_table(
    rows: &[CaptureRow],
    params: &QkdSystemParams,
    block_length: f64,
    baseline_label: &str,
) -> Result<Vec<CaptureSummary>> {
    if rows.is_empty() {
        return Err(Error::Empty("no capture rows"));
    }
    if !rows.iter().any(|r| r.policy_label == baseline_label) {
        return Err(Error::MissingPolicy(baseline_label.to_owned()));
    }
    let delta_n = finite_size_penalty(params);
    let mu = params.detection.mu();

    let mut captures: Vec<&str> = Vec::new();
    for r in rows {
        if !captures.contains(&r.capture_id.as_str()) {
            captures.push(&r.capture_id);
        }
    }

    let mut groups: Vec<(f64, usize, Vec<CaptureSummary>)> = Vec::new();
    for (order, cap) in captures.into_iter().enumerate() {
        let mut labels: Vec<&str> = vec![baseline_label];
        for r in rows.iter().filter(|r| r.capture_id == cap) {
            if !labels.contains(&r.policy_label.as_str()) {
                labels.push(&r.policy_label);
            }
        }
        let mut best: Vec<CaptureSummary> = Vec::new();
        for label in labels {
            let candidates: Vec<(SkrBreakdown, f64, &CaptureRow)> = rows
                .iter()
                .filter(|r| r.capture_id == cap && r.policy_label == label)
                .map(|r| {
                    let b = SkrBreakdown::from_components(r.i_ab, r.chi_be, delta_n, r.beta, r.fer);
                    let dec = skr_dec_from_margin(block_length, r.d_bar, mu, r.fer, b.margin());
                    (b, dec, r)
                })
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let points: Vec<BetaPoint> = candidates
                .iter()
                .map(|(b, dec, r)| BetaPoint {
                    beta: r.beta,
                    skr: b.skr,
                    skr_dec: *dec,
                })
                .collect();
            let opt = optimize_beta(&points)?.beta_skr_dec;
            let (b, dec, r) = candidates
                .iter()
                .find(|(_, _, r)| r.beta == opt)
                .expect("optimum is one of the candidates");
            best.push(CaptureSummary {
                capture_id: cap.to_owned(),
                policy_label: label.to_owned(),
                beta_opt: r.beta,
                i_ab: r.i_ab,
                chi_be: r.chi_be,
                delta_n,
                fer: r.fer,
                d_bar: r.d_bar,
                skr: b.skr,
                skr_dec: *dec,
                skr_negative: b.is_negative(),
                baseline_label: baseline_label.to_owned(),
                skr_dec_ratio: None,
                skr_dec_ratio_flag: RatioFlag::Undefined,
            });
        }

        let base = best
            .iter()
            .find(|s| s.policy_label == baseline_label)
            .map(|s| s.skr_dec);
        for s in &mut best {
            (s.skr_dec_ratio, s.skr_dec_ratio_flag) = match base {
                Some(d) if d != 0.0 => (Some(s.skr_dec / d), RatioFlag::Ok),
                Some(_) if s.skr_dec != 0.0 => (None, RatioFlag::Infinite),
                _ => (None, RatioFlag::Undefined),
            };
        }
        let sort_key = best
            .iter()
            .find(|s| s.policy_label != baseline_label)
            .or(best.first())
            .map_or(0.0, |s| s.beta_opt);
        groups.push((sort_key, order, best));
    }

    groups.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(groups.into_iter().flat_map(|(_, _, g)| g).collect())
}

use serde::{Deserialize, Serialize};

use super::SweepRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioFlag {
    Ok,
    /// Nonzero numerator over a zero denominator.
    Infinite,
    /// Zero over zero.
    Undefined,
}

fn ratio(num: f64, den: f64) -> (Option<f64>, RatioFlag) {
    if den != 0.0 {
        (Some(num / den), RatioFlag::Ok)
    } else if num == 0.0 {
        (None, RatioFlag::Undefined)
    } else {
        (None, RatioFlag::Infinite)
    }
}

/// Reliability-terminated policy against one baseline at one β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtComparison {
    pub beta: f64,
    pub vnr_label: String,
    pub baseline_label: String,
    pub fer_vnr: f64,
    pub fer_baseline: f64,
    pub d_bar_vnr: f64,
    pub d_bar_baseline: f64,
    pub k_vnr: f64,
    pub k_baseline: f64,
    /// `K_vnr / K_baseline`; empty when the denominator is zero.
    pub k_ratio: Option<f64>,
    pub k_ratio_flag: RatioFlag,
    pub skr_dec_vnr: f64,
    pub skr_dec_baseline: f64,
    pub skr_dec_ratio: Option<f64>,
    pub skr_dec_ratio_flag: RatioFlag,
}

/// Throughput and decoded-key ratios of the VNR policy over each baseline,
/// per β.
///
/// `vnr_label` picks the VNR policy; without it the single policy with
/// `use_vnr` set is used. Every other label is a baseline unless
/// `baseline_label` narrows it to one.
pub fn compare_et(
    records: &[SweepRecord],
    vnr_label: Option<&str>,
    baseline_label: Option<&str>,
) -> Result<Vec<EtComparison>> {
    let vnr = match vnr_label {
        Some(l) => l.to_owned(),
        None => {
            let mut labels: Vec<&str> = records
                .iter()
                .filter(|r| r.use_vnr)
                .map(|r| r.policy_label.as_str())
                .collect();
            labels.sort_unstable();
            labels.dedup();
            match labels.as_slice() {
                [one] => (*one).to_owned(),
                [] => return Err(Error::MissingPolicy("<any policy with use_vnr>".into())),
                _ => {
                    return Err(Error::Config(format!(
                        "several VNR policies ({}); choose one with --vnr-label",
                        labels.join(", ")
                    )))
                }
            }
        }
    };
    if !records.iter().any(|r| r.policy_label == vnr) {
        return Err(Error::MissingPolicy(vnr));
    }
    if let Some(b) = baseline_label {
        if !records.iter().any(|r| r.policy_label == b) {
            return Err(Error::MissingPolicy(b.to_owned()));
        }
    }
    let is_baseline = |r: &SweepRecord| {
        r.policy_label != vnr && baseline_label.is_none_or(|b| r.policy_label == b)
    };
    if !records.iter().any(is_baseline) {
        return Err(Error::MissingPolicy("<baseline>".into()));
    }

    let mut rows = Vec::new();
    for v in records.iter().filter(|r| r.policy_label == vnr) {
        for b in records.iter().filter(|r| is_baseline(r) && r.beta == v.beta) {
            let (k_ratio, k_ratio_flag) = ratio(v.k_throughput, b.k_throughput);
            let (skr_dec_ratio, skr_dec_ratio_flag) = ratio(v.skr_dec, b.skr_dec);
            rows.push(EtComparison {
                beta: v.beta,
                vnr_label: vnr.clone(),
                baseline_label: b.policy_label.clone(),
                fer_vnr: v.fer,
                fer_baseline: b.fer,
                d_bar_vnr: v.d_bar,
                d_bar_baseline: b.d_bar,
                k_vnr: v.k_throughput,
                k_baseline: b.k_throughput,
                k_ratio,
                k_ratio_flag,
                skr_dec_vnr: v.skr_dec,
                skr_dec_baseline: b.skr_dec,
                skr_dec_ratio,
                skr_dec_ratio_flag,
            });
        }
    }
    Ok(rows)
}

//! Binary-input AWGN reconciliation channel and Monte-Carlo trials.
//!
//! The all-zero codeword is sent with BPSK (`0 → +1`), so `y = 1 + g` with
//! `g ~ N(0, σ²)` and the channel LLR is `2y/σ²`. Trial `t` under master
//! seed `s` draws its noise from ChaCha8 stream `t` of seed `s`, so every
//! trial is reproducible on its own and the worker count cannot change any
//! result. The same trial index also gives the same standard-normal draws
//! at every SNR and for every policy (common random numbers).

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::{active_var_set, ParityCheckMatrix, PunctureMask};
use crate::decoder::{BpDecoder, DecodeConfig, StopRuleRegistry, TerminationReason};
use crate::stats::{wilson_interval, Z_95};
use crate::{Error, Result};

/// Operating point of the channel.
///
/// β is measured against the per-real-dimension Gaussian capacity
/// `½ log2(1 + snr)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPoint {
    pub beta: f64,
    pub rate: f64,
    pub snr: f64,
    /// Noise variance `1 / snr`.
    pub sigma2: f64,
}

impl ChannelPoint {
    /// A point given directly by its SNR; β is derived and may exceed 1.
    pub fn from_snr(snr: f64, rate: f64) -> Result<Self> {
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(Error::Domain(format!("snr must be positive and finite, got {snr}")));
        }
        check_rate(rate)?;
        Ok(Self {
            beta: rate / (0.5 * snr.ln_1p() / std::f64::consts::LN_2),
            rate,
            snr,
            sigma2: 1.0 / snr,
        })
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if rate > 0.0 && rate < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("code rate must lie in (0, 1), got {rate}")))
    }
}

/// SNR at which a rate-`rate` code runs at efficiency `beta`:
/// `snr = 2^(2 rate / beta) - 1`.
pub fn snr_for_beta(beta: f64, rate: f64) -> Result<ChannelPoint> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain(format!("beta must lie in (0, 1], got {beta}")));
    }
    check_rate(rate)?;
    let snr = (2.0 * rate / beta * std::f64::consts::LN_2).exp_m1();
    Ok(ChannelPoint {
        beta,
        rate,
        snr,
        sigma2: 1.0 / snr,
    })
}

/// Channel LLRs for one transmitted block.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrBlock {
    pub llrs: Vec<f64>,
    pub snr: f64,
    pub seed: u64,
    pub trial_index: u64,
}

fn fill_llrs(point: &ChannelPoint, mask: &PunctureMask, seed: u64, trial: u64, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let sigma = point.sigma2.sqrt();
    let scale = 2.0 / point.sigma2;
    for llr in out.iter_mut() {
        let g: f64 = StandardNormal.sample(&mut rng);
        *llr = scale * (1.0 + sigma * g);
    }
    for &i in mask.indices() {
        out[i] = 0.0;
    }
}

/// Draws the LLR block of trial `trial`.
pub fn sample_block(
    point: &ChannelPoint,
    n: usize,
    mask: &PunctureMask,
    master_seed: u64,
    trial: u64,
) -> LlrBlock {
    let mut llrs = vec![0.0; n];
    fill_llrs(point, mask, master_seed, trial, &mut llrs);
    LlrBlock {
        llrs,
        snr: point.snr,
        seed: master_seed,
        trial_index: trial,
    }
}

/// When to stop a Monte-Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopCriterion {
    /// Stop once this many frame errors are seen; `None` runs to
    /// `max_frames`.
    pub min_frame_errors: Option<u64>,
    pub max_frames: u64,
}

impl Default for StopCriterion {
    fn default() -> Self {
        Self {
            min_frame_errors: Some(100),
            max_frames: 10_000,
        }
    }
}

impl StopCriterion {
    pub fn fixed_frames(frames: u64) -> Self {
        Self {
            min_frame_errors: None,
            max_frames: frames,
        }
    }

    fn done(&self, frames: u64, errors: u64) -> bool {
        frames >= self.max_frames || self.min_frame_errors.is_some_and(|m| errors >= m)
    }
}

/// Aggregated results of [`run_trials`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialStats {
    pub frames: u64,
    /// Frames not decoded to the transmitted word, or not converged.
    pub frame_errors: u64,
    /// Frames that satisfied every check but decoded to a wrong codeword.
    pub undetected_errors: u64,
    pub iteration_sum: u64,
    /// Iteration count → number of frames.
    pub histogram: BTreeMap<usize, u64>,
    pub reasons: BTreeMap<TerminationReason, u64>,
    /// The run ended on `max_frames` before reaching `min_frame_errors`.
    pub exhausted_max_frames: bool,
}

impl TrialStats {
    pub fn fer(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.frame_errors as f64 / self.frames as f64
        }
    }

    /// Wilson 95% interval for the FER.
    pub fn fer_interval(&self) -> (f64, f64) {
        wilson_interval(self.frame_errors, self.frames, Z_95)
    }

    /// Mean iterations per frame.
    pub fn d_bar(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.iteration_sum as f64 / self.frames as f64
        }
    }

    /// Smallest iteration count `d` with at least a fraction `p` of frames
    /// finishing within `d` iterations.
    pub fn iteration_quantile(&self, p: f64) -> usize {
        let need = (p * self.frames as f64).ceil().max(1.0) as u64;
        let mut seen = 0;
        for (&d, &count) in &self.histogram {
            seen += count;
            if seen >= need {
                return d;
            }
        }
        self.histogram.keys().next_back().copied().unwrap_or(0)
    }

    pub fn max_iterations(&self) -> usize {
        self.histogram.keys().next_back().copied().unwrap_or(0)
    }

    pub fn reason_count(&self, reason: TerminationReason) -> u64 {
        self.reasons.get(&reason).copied().unwrap_or(0)
    }

    fn record(&mut self, trial: &TrialResult) {
        self.frames += 1;
        self.frame_errors += u64::from(trial.error);
        self.undetected_errors += u64::from(trial.undetected);
        self.iteration_sum += trial.iterations as u64;
        *self.histogram.entry(trial.iterations).or_default() += 1;
        *self.reasons.entry(trial.reason).or_default() += 1;
    }
}

struct TrialResult {
    error: bool,
    undetected: bool,
    iterations: usize,
    reason: TerminationReason,
}

/// Trials decoded per parallel batch. Results are folded in trial order,
/// so this only affects how much work past the stopping point is wasted.
const BATCH: u64 = 64;

/// Runs trials `0, 1, 2, ...` until `stop` is met, using the built-in stop
/// rules. Parallelism comes from the ambient rayon pool.
pub fn run_trials(
    code: &ParityCheckMatrix,
    mask: &PunctureMask,
    point: &ChannelPoint,
    cfg: &DecodeConfig,
    stop: StopCriterion,
    master_seed: u64,
) -> Result<TrialStats> {
    run_trials_with(
        code,
        mask,
        point,
        cfg,
        &StopRuleRegistry::default(),
        stop,
        master_seed,
    )
}

/// [`run_trials`] with stop rules resolved from `registry`.
pub fn run_trials_with(
    code: &ParityCheckMatrix,
    mask: &PunctureMask,
    point: &ChannelPoint,
    cfg: &DecodeConfig,
    registry: &StopRuleRegistry,
    stop: StopCriterion,
    master_seed: u64,
) -> Result<TrialStats> {
    if mask.n_vars() != code.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: code.n_vars(),
            got: mask.n_vars(),
        });
    }
    let active = active_var_set(code);
    let proto = BpDecoder::new(code, &active, cfg.clone(), registry)?;
    let n = code.n_vars();

    let mut stats = TrialStats::default();
    let mut next = 0u64;
    while !stop.done(stats.frames, stats.frame_errors) {
        let end = next + BATCH.min(stop.max_frames - stats.frames);
        let batch: Vec<TrialResult> = (next..end)
            .into_par_iter()
            .map_init(
                || (proto.clone(), vec![0.0; n]),
                |(decoder, llrs), trial| {
                    fill_llrs(point, mask, master_seed, trial, llrs);
                    let out = decoder.decode(llrs)?;
                    let wrong = !out.is_all_zero();
                    let converged = code.parity_ok(&out.bits);
                    Ok(TrialResult {
                        error: wrong || !converged,
                        undetected: wrong && converged,
                        iterations: out.iterations,
                        reason: out.reason,
                    })
                },
            )
            .collect::<Result<_>>()?;
        for trial in &batch {
            stats.record(trial);
            if stop.done(stats.frames, stats.frame_errors) {
                break;
            }
        }
        next = end;
    }
    stats.exhausted_max_frames = stop
        .min_frame_errors
        .is_some_and(|m| stats.frame_errors < m);
    Ok(stats)
}

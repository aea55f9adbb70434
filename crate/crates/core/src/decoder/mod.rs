//! Flooding-schedule sum-product decoding in the LLR domain.
//!
//! Each iteration runs every check-node update, then every variable-node
//! update, then evaluates the configured stop rules in order (parity check
//! before reliability drop, so a converged word is never thrown away by a
//! reliability dip in the same iteration).

mod stop;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use stop::{
    IterationState, ParityCheckStop, ReliabilityDropStop, StopRule, StopRuleRegistry,
    TerminationReason,
};

use crate::code::{ActiveVarSet, ParityCheckMatrix};
use crate::{Error, Result};

/// Hard iteration cap for runs configured as unbounded.
pub const SAFETY_CAP: usize = 100_000;

/// Default bound on message magnitudes, in LLR units.
pub const DEFAULT_MSG_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IterationLimit {
    Bounded(usize),
    /// Runs until a stop rule fires or [`SAFETY_CAP`] is reached.
    Unbounded,
}

impl IterationLimit {
    pub fn cap(self) -> usize {
        match self {
            IterationLimit::Bounded(n) => n,
            IterationLimit::Unbounded => SAFETY_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub d_max: IterationLimit,
    pub use_pce: bool,
    pub use_vnr: bool,
    /// Messages are clamped to `±msg_clamp`. `f64::INFINITY` disables the
    /// clamp.
    pub msg_clamp: f64,
}

impl DecodeConfig {
    /// Parity-check termination only, with at most `d_max` iterations.
    pub fn pce(d_max: usize) -> Self {
        Self {
            d_max: IterationLimit::Bounded(d_max),
            use_pce: true,
            use_vnr: false,
            msg_clamp: DEFAULT_MSG_CLAMP,
        }
    }

    /// Parity-check and reliability-drop termination with no iteration
    /// limit other than the safety cap.
    pub fn vnr_unbounded() -> Self {
        Self {
            d_max: IterationLimit::Unbounded,
            use_pce: true,
            use_vnr: true,
            msg_clamp: DEFAULT_MSG_CLAMP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.d_max {
            IterationLimit::Bounded(0) => {
                return Err(Error::DecodeConfig("d_max must be at least 1".into()))
            }
            IterationLimit::Unbounded if !self.use_vnr => {
                return Err(Error::DecodeConfig(
                    "an unbounded iteration limit needs the vnr stop rule".into(),
                ))
            }
            _ => {}
        }
        if !(self.msg_clamp > 0.0) {
            return Err(Error::DecodeConfig(format!(
                "msg_clamp must be positive, got {}",
                self.msg_clamp
            )));
        }
        Ok(())
    }

    /// Registry names of the enabled stop rules, in evaluation order.
    pub fn rule_names(&self) -> Vec<&'static str> {
        let mut names = Vec::with_capacity(2);
        if self.use_pce {
            names.push("pce");
        }
        if self.use_vnr {
            names.push("vnr");
        }
        names
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeOutcome {
    /// Hard decision, one 0/1 entry per variable.
    pub bits: Vec<u8>,
    pub iterations: usize,
    pub reason: TerminationReason,
    /// `q` after each iteration; its length equals `iterations`.
    pub q_trace: Vec<f64>,
    /// Final a-posteriori LLRs.
    pub posteriors: Vec<f64>,
}

impl DecodeOutcome {
    pub fn is_all_zero(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    /// The q trace as comma-separated values.
    pub fn q_trace_csv(&self) -> String {
        self.q_trace
            .iter()
            .map(|q| q.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// `true` iff `bits` satisfies every parity check of `code`.
pub fn syndrome_check(code: &ParityCheckMatrix, bits: &[u8]) -> Result<bool> {
    if bits.len() != code.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: code.n_vars(),
            got: bits.len(),
        });
    }
    Ok(code.parity_ok(bits))
}

/// Sum of the posteriors over the active (degree ≥ 2) variables.
pub fn vnr_statistic(posteriors: &[f64], active: &ActiveVarSet) -> f64 {
    active.members().iter().map(|&i| posteriors[i]).sum()
}

/// Strict decrease test; equality keeps decoding.
pub fn vnr_should_stop(q_k: f64, q_km1: f64) -> bool {
    q_k < q_km1
}

/// Decodes one block with the built-in stop rules.
///
/// Punctured positions must already carry LLR 0.
pub fn decode(
    code: &ParityCheckMatrix,
    llr_in: &[f64],
    active: &ActiveVarSet,
    cfg: &DecodeConfig,
) -> Result<DecodeOutcome> {
    BpDecoder::new(code, active, cfg.clone(), &StopRuleRegistry::default())?.decode(llr_in)
}

/// Reusable sum-product decoder bound to one code.
///
/// Holds the message buffers so repeated decodes do not reallocate. One
/// instance decodes one block at a time; use one per thread.
#[derive(Clone)]
pub struct BpDecoder<'c> {
    code: &'c ParityCheckMatrix,
    active: &'c ActiveVarSet,
    cfg: DecodeConfig,
    rules: Vec<Arc<dyn StopRule>>,
    c2v: Vec<f64>,
    /// `tanh(L(v→c) / 2)` per edge; the variable-to-check messages are
    /// only ever used through this transform.
    half_tanh: Vec<f64>,
}

impl<'c> BpDecoder<'c> {
    /// Resolves the rules named by `cfg` in `registry`.
    pub fn new(
        code: &'c ParityCheckMatrix,
        active: &'c ActiveVarSet,
        cfg: DecodeConfig,
        registry: &StopRuleRegistry,
    ) -> Result<Self> {
        let rules = registry.resolve(&cfg.rule_names())?;
        Self::with_rules(code, active, cfg, rules)
    }

    /// Uses an explicit rule chain instead of the `use_pce`/`use_vnr`
    /// flags of `cfg`.
    pub fn with_rules(
        code: &'c ParityCheckMatrix,
        active: &'c ActiveVarSet,
        cfg: DecodeConfig,
        rules: Vec<Arc<dyn StopRule>>,
    ) -> Result<Self> {
        cfg.validate()?;
        let e = code.n_edges();
        Ok(Self {
            code,
            active,
            cfg,
            rules,
            c2v: vec![0.0; e],
            half_tanh: vec![0.0; e],
        })
    }

    pub fn config(&self) -> &DecodeConfig {
        &self.cfg
    }

    pub fn decode(&mut self, llr_in: &[f64]) -> Result<DecodeOutcome> {
        let code = self.code;
        let n = code.n_vars();
        if llr_in.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: llr_in.len(),
            });
        }
        if let Some(i) = llr_in.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteLlr(i));
        }

        let clamp = self.cfg.msg_clamp;
        for e in 0..code.n_edges() {
            let m = llr_in[code.edge_var(e)].clamp(-clamp, clamp);
            self.half_tanh[e] = (0.5 * m).tanh();
        }

        let cap = self.cfg.d_max.cap();
        let mut posteriors = vec![0.0; n];
        let mut bits = vec![0u8; n];
        let mut q_trace = Vec::new();

        for k in 1..=cap {
            self.check_update();
            self.variable_update(llr_in, &mut posteriors, &mut bits);
            q_trace.push(vnr_statistic(&posteriors, self.active));

            let state = IterationState {
                code,
                iteration: k,
                hard_bits: &bits,
                posteriors: &posteriors,
                q_trace: &q_trace,
            };
            let reason = self.rules.iter().find_map(|r| r.check(&state)).or(
                (k == cap).then_some(match self.cfg.d_max {
                    IterationLimit::Bounded(_) => TerminationReason::MaxIterations,
                    IterationLimit::Unbounded => TerminationReason::SafetyCap,
                }),
            );
            if let Some(reason) = reason {
                return Ok(DecodeOutcome {
                    bits,
                    iterations: k,
                    reason,
                    q_trace,
                    posteriors,
                });
            }
        }
        unreachable!("iteration cap is at least 1")
    }

    /// `L(c→v) = 2 atanh(∏_{v'≠v} tanh(L(v'→c)/2))`, with the leave-one-out
    /// products formed from prefix and suffix products so zero messages
    /// need no special case.
    fn check_update(&mut self) {
        let clamp = self.cfg.msg_clamp;
        for c in 0..self.code.n_checks() {
            let edges = self.code.check_edges(c);
            let mut prefix = 1.0;
            for e in edges.clone() {
                self.c2v[e] = prefix;
                prefix *= self.half_tanh[e];
            }
            let mut suffix = 1.0;
            for e in edges.rev() {
                let p = self.c2v[e] * suffix;
                suffix *= self.half_tanh[e];
                self.c2v[e] = (2.0 * p.atanh()).clamp(-clamp, clamp);
            }
        }
    }

    fn variable_update(&mut self, llr_in: &[f64], posteriors: &mut [f64], bits: &mut [u8]) {
        let clamp = self.cfg.msg_clamp;
        for (v, (post, bit)) in posteriors.iter_mut().zip(bits.iter_mut()).enumerate() {
            let edges = self.code.var_edges(v);
            let total = llr_in[v] + edges.iter().map(|&e| self.c2v[e]).sum::<f64>();
            *post = total;
            // A zero posterior decides 0.
            *bit = u8::from(total < 0.0);
            for &e in edges {
                let m = (total - self.c2v[e]).clamp(-clamp, clamp);
                self.half_tanh[e] = (0.5 * m).tanh();
            }
        }
    }
}

//! Early-termination rules.
//!
//! A [`StopRule`] inspects the decoder state after each full iteration and
//! may end decoding with a [`TerminationReason`]. Rules are looked up by
//! name in a [`StopRuleRegistry`] and evaluated in the order given; the
//! first rule that fires wins.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::code::ParityCheckMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    /// The hard decision satisfies every parity check.
    SyndromeSatisfied,
    /// The reliability sum over degree-≥2 variables decreased.
    VnrDrop,
    /// The configured iteration limit was reached.
    MaxIterations,
    /// An unbounded run hit the hard safety cap.
    SafetyCap,
}

impl TerminationReason {
    pub const ALL: [TerminationReason; 4] = [
        TerminationReason::SyndromeSatisfied,
        TerminationReason::VnrDrop,
        TerminationReason::MaxIterations,
        TerminationReason::SafetyCap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::SyndromeSatisfied => "syndrome_satisfied",
            TerminationReason::VnrDrop => "vnr_drop",
            TerminationReason::MaxIterations => "max_iterations",
            TerminationReason::SafetyCap => "safety_cap",
        }
    }
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Decoder state after iteration `iteration` (1-based).
pub struct IterationState<'a> {
    pub code: &'a ParityCheckMatrix,
    pub iteration: usize,
    pub hard_bits: &'a [u8],
    pub posteriors: &'a [f64],
    /// `q(1..=iteration)`; the last entry belongs to this iteration.
    pub q_trace: &'a [f64],
}

pub trait StopRule: Send + Sync {
    fn name(&self) -> &str;

    fn check(&self, state: &IterationState<'_>) -> Option<TerminationReason>;
}

/// Parity-check-equation termination: stop once `ĉ Hᵀ = 0`.
#[derive(Debug, Default, Clone, Copy)]
pub struct ParityCheckStop;

impl StopRule for ParityCheckStop {
    fn name(&self) -> &str {
        "pce"
    }

    fn check(&self, state: &IterationState<'_>) -> Option<TerminationReason> {
        state
            .code
            .parity_ok(state.hard_bits)
            .then_some(TerminationReason::SyndromeSatisfied)
    }
}

/// Variable-node-reliability termination: stop at the first iteration
/// whose `q` is strictly below the previous one. `q(1)` only seeds the
/// comparison.
#[derive(Debug, Default, Clone, Copy)]
pub struct ReliabilityDropStop;

impl StopRule for ReliabilityDropStop {
    fn name(&self) -> &str {
        "vnr"
    }

    fn check(&self, state: &IterationState<'_>) -> Option<TerminationReason> {
        match state.q_trace {
            [.., prev, cur] => {
                super::vnr_should_stop(*cur, *prev).then_some(TerminationReason::VnrDrop)
            }
            _ => None,
        }
    }
}

/// Named stop rules. [`Default`] registers `pce` and `vnr`.
#[derive(Clone)]
pub struct StopRuleRegistry {
    rules: BTreeMap<String, Arc<dyn StopRule>>,
}

impl StopRuleRegistry {
    pub fn empty() -> Self {
        Self {
            rules: BTreeMap::new(),
        }
    }

    /// Registers `rule` under its own name, replacing any previous entry.
    pub fn register(&mut self, rule: Arc<dyn StopRule>) {
        self.rules.insert(rule.name().to_owned(), rule);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn StopRule>> {
        self.rules
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownStopRule(name.to_owned()))
    }

    /// Resolves an ordered list of names.
    pub fn resolve<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<Arc<dyn StopRule>>> {
        names.iter().map(|n| self.get(n.as_ref())).collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.rules.keys().map(String::as_str)
    }
}

impl Default for StopRuleRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(ParityCheckStop));
        reg.register(Arc::new(ReliabilityDropStop));
        reg
    }
}

impl fmt::Debug for StopRuleRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rules.keys()).finish()
    }
}

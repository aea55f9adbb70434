use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ParityCheckMatrix;
use crate::{Error, Result};

/// Variables withheld from transmission to raise the code rate.
///
/// Punctured positions enter the decoder with LLR 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PunctureMask {
    n_vars: usize,
    punctured: Vec<usize>,
    effective_rate: f64,
}

impl PunctureMask {
    /// A mask that punctures nothing.
    pub fn none(code: &ParityCheckMatrix) -> Self {
        Self {
            n_vars: code.n_vars(),
            punctured: Vec::new(),
            effective_rate: code.rate(),
        }
    }

    /// Sorted punctured indices.
    pub fn indices(&self) -> &[usize] {
        &self.punctured
    }

    pub fn contains(&self, v: usize) -> bool {
        self.punctured.binary_search(&v).is_ok()
    }

    pub fn len(&self) -> usize {
        self.punctured.len()
    }

    pub fn is_empty(&self) -> bool {
        self.punctured.is_empty()
    }

    /// `(N - M) / (N - |punctured|)`.
    pub fn effective_rate(&self) -> f64 {
        self.effective_rate
    }

    /// Number of code bits actually sent over the channel.
    pub fn transmitted_len(&self) -> usize {
        self.n_vars - self.punctured.len()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }
}

/// Picks variables to puncture so the code reaches `target_rate`.
///
/// The count is `round(N - (N - M) / target_rate)`. Positions are drawn
/// uniformly without replacement among variables of degree ≥ 2, since a
/// punctured degree-1 bit receives no information and can never be
/// recovered.
pub fn apply_puncture(
    code: &ParityCheckMatrix,
    target_rate: f64,
    seed: u64,
) -> Result<PunctureMask> {
    let rate = code.rate();
    if !(target_rate < 1.0) || !target_rate.is_finite() {
        return Err(Error::Puncture(format!(
            "target rate {target_rate} must be below 1"
        )));
    }
    if target_rate < rate - 1e-12 {
        return Err(Error::Puncture(format!(
            "target rate {target_rate} is below the code rate {rate}; puncturing only raises the rate"
        )));
    }
    let n = code.n_vars() as f64;
    let k = n - code.n_checks() as f64;
    let count = (n - k / target_rate).round().max(0.0) as usize;

    let eligible: Vec<usize> = (0..code.n_vars())
        .filter(|&v| code.var_degree(v) >= 2)
        .collect();
    if count > eligible.len() {
        return Err(Error::Puncture(format!(
            "need {count} punctured positions but only {} variables have degree >= 2",
            eligible.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut punctured: Vec<usize> = index::sample(&mut rng, eligible.len(), count)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    punctured.sort_unstable();

    Ok(PunctureMask {
        n_vars: code.n_vars(),
        effective_rate: k / (n - count as f64),
        punctured,
    })
}

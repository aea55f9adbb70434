#![allow(dead_code)]

use cvqkd_et::code::{lift_protograph, ParityCheckMatrix};
use rand::Rng;

/// Base matrix of a column-weight-3, row-weight-6 protograph: row `r` is
/// all ones except columns `2r` and `2r + 1`.
pub fn regular_36_base() -> Vec<Vec<u32>> {
    (0..4)
        .map(|r| (0..8).map(|c| u32::from(c / 2 != r)).collect())
        .collect()
}

/// Rate-1/2 (3,6)-regular code with `n = 8 z`.
pub fn regular_36(z: usize, seed: u64) -> ParityCheckMatrix {
    lift_protograph(&regular_36_base(), z, seed).unwrap()
}

/// A random cycle-free Tanner graph: every check joins variables from
/// distinct connected components of the graph built so far.
pub fn random_tree_code<R: Rng>(rng: &mut R, n: usize) -> ParityCheckMatrix {
    let mut label: Vec<usize> = (0..n).collect();
    let mut checks: Vec<Vec<usize>> = Vec::new();
    let target = rng.random_range(1..n);
    while checks.len() < target {
        let mut comps: Vec<usize> = label.clone();
        comps.sort_unstable();
        comps.dedup();
        if comps.len() < 2 {
            break;
        }
        let deg = rng.random_range(2..=comps.len().min(4));
        let mut vars = Vec::with_capacity(deg);
        let mut joined = Vec::with_capacity(deg);
        for _ in 0..deg {
            let c = comps.swap_remove(rng.random_range(0..comps.len()));
            let members: Vec<usize> = (0..n).filter(|&v| label[v] == c).collect();
            vars.push(members[rng.random_range(0..members.len())]);
            joined.push(c);
        }
        for l in label.iter_mut() {
            if joined.contains(l) {
                *l = joined[0];
            }
        }
        vars.sort_unstable();
        checks.push(vars);
    }
    ParityCheckMatrix::from_check_lists(n, &checks).unwrap()
}

/// Exact bitwise MAP posterior LLRs by enumerating all `2^n` words.
pub fn brute_force_posteriors(code: &ParityCheckMatrix, llr: &[f64]) -> Vec<f64> {
    let n = code.n_vars();
    let mut log_w0 = vec![f64::NEG_INFINITY; n];
    let mut log_w1 = vec![f64::NEG_INFINITY; n];
    for word in 0u32..(1 << n) {
        let bit = |v: usize| (word >> v) & 1;
        let is_codeword = (0..code.n_checks())
            .all(|c| code.check_vars(c).iter().map(|&v| bit(v)).sum::<u32>() % 2 == 0);
        if !is_codeword {
            continue;
        }
        // P(x | y) ∝ exp(−Σ x_v L_v)
        let lw: f64 = -(0..n).filter(|&v| bit(v) == 1).map(|v| llr[v]).sum::<f64>();
        for v in 0..n {
            let slot = if bit(v) == 0 { &mut log_w0[v] } else { &mut log_w1[v] };
            *slot = log_add(*slot, lw);
        }
    }
    log_w0.iter().zip(&log_w1).map(|(a, b)| a - b).collect()
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

mod common;

use cvqkd_et::code::active_var_set;
use cvqkd_et::decoder::{decode, DecodeConfig, IterationLimit, TerminationReason};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn free_running(iterations: usize) -> DecodeConfig {
    DecodeConfig {
        d_max: IterationLimit::Bounded(iterations),
        use_pce: false,
        use_vnr: false,
        msg_clamp: f64::INFINITY,
    }
}

#[test]
fn tree_codes_match_exhaustive_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..40 {
        let n = rng.random_range(3..=12);
        let code = common::random_tree_code(&mut rng, n);
        let llr: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
        let out = decode(&code, &llr, &active_var_set(&code), &free_running(2 * n + 2)).unwrap();
        let exact = common::brute_force_posteriors(&code, &llr);
        for (v, (bp, map)) in out.posteriors.iter().zip(&exact).enumerate() {
            assert!(
                (bp - map).abs() < 1e-9,
                "trial {trial}, var {v}: bp {bp} vs map {map}"
            );
        }
    }
}

#[test]
fn negated_input_negates_the_run() {
    // Every check of this code has even degree, so the all-ones word is a
    // codeword and parity decisions are symmetric.
    let code = common::regular_36(16, 5);
    let active = active_var_set(&code);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let llr: Vec<f64> = (0..code.n_vars())
            .map(|_| 2.0 * (1.0 + 0.9 * rng.sample::<f64, _>(rand_distr::StandardNormal)) / 0.81)
            .collect();
        let neg: Vec<f64> = llr.iter().map(|x| -x).collect();
        let a = decode(&code, &llr, &active, &DecodeConfig::pce(30)).unwrap();
        let b = decode(&code, &neg, &active, &DecodeConfig::pce(30)).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.reason, b.reason);
        // libm's tanh/atanh are odd only up to rounding.
        for (x, y) in a.posteriors.iter().zip(&b.posteriors) {
            assert!((x + y).abs() <= 1e-9 * x.abs().max(1.0), "{x} vs {y}");
        }
        for (x, y) in a.bits.iter().zip(&b.bits) {
            assert_eq!(*x, 1 - *y);
        }
    }
}

fn noisy_llrs(rng: &mut ChaCha8Rng, n: usize, sigma2: f64) -> Vec<f64> {
    let sigma = sigma2.sqrt();
    (0..n)
        .map(|_| 2.0 * (1.0 + sigma * rng.sample::<f64, _>(rand_distr::StandardNormal)) / sigma2)
        .collect()
}

#[test]
fn vnr_fires_on_first_drop() {
    let code = common::regular_36(32, 1);
    let active = active_var_set(&code);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut seen = 0;
    for _ in 0..200 {
        let llr = noisy_llrs(&mut rng, code.n_vars(), 0.9);
        let out = decode(&code, &llr, &active, &DecodeConfig::vnr_unbounded()).unwrap();
        assert_eq!(out.q_trace.len(), out.iterations);
        let q = &out.q_trace;
        // No earlier iteration saw a drop.
        assert!(q.windows(2).take(q.len().saturating_sub(2)).all(|w| w[1] >= w[0]));
        if out.reason == TerminationReason::VnrDrop {
            seen += 1;
            assert!(out.iterations >= 2);
            assert!(q[q.len() - 1] < q[q.len() - 2]);
        }
    }
    assert!(seen > 0, "no frame stopped on a reliability drop");
}

#[test]
fn parity_rule_wins_ties() {
    let code = common::regular_36(4, 2);
    let active = active_var_set(&code);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut ties = 0;
    for _ in 0..20_000 {
        if ties >= 20 {
            break;
        }
        let llr = noisy_llrs(&mut rng, code.n_vars(), 0.8);
        let vnr_only = DecodeConfig {
            d_max: IterationLimit::Bounded(50),
            use_pce: false,
            use_vnr: true,
            msg_clamp: 30.0,
        };
        let v = decode(&code, &llr, &active, &vnr_only).unwrap();
        let p = decode(&code, &llr, &active, &DecodeConfig::pce(50)).unwrap();
        let both = DecodeConfig {
            d_max: IterationLimit::Bounded(50),
            ..DecodeConfig::vnr_unbounded()
        };
        let out = decode(&code, &llr, &active, &both).unwrap();
        let pce_fires_at = (p.reason == TerminationReason::SyndromeSatisfied).then_some(p.iterations);
        let vnr_fires_at = (v.reason == TerminationReason::VnrDrop).then_some(v.iterations);
        if pce_fires_at.is_some() && pce_fires_at == vnr_fires_at {
            ties += 1;
            assert_eq!(out.reason, TerminationReason::SyndromeSatisfied);
            assert_eq!(out.iterations, p.iterations);
        }
    }
    assert!(ties > 0, "no frame where both rules fire together");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q_trace_and_iterations_agree(seed in any::<u64>(), d_max in 1usize..40) {
        let code = common::regular_36(8, 4);
        let active = active_var_set(&code);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let llr = noisy_llrs(&mut rng, code.n_vars(), 1.0);
        let cfg = DecodeConfig {
            d_max: IterationLimit::Bounded(d_max),
            ..DecodeConfig::vnr_unbounded()
        };
        let out = decode(&code, &llr, &active, &cfg).unwrap();
        prop_assert!(out.iterations >= 1 && out.iterations <= d_max);
        prop_assert_eq!(out.q_trace.len(), out.iterations);
        if out.reason == TerminationReason::MaxIterations {
            prop_assert_eq!(out.iterations, d_max);
        }
        for (b, p) in out.bits.iter().zip(&out.posteriors) {
            prop_assert_eq!(*b, u8::from(*p < 0.0));
        }
    }

    #[test]
    fn strong_correct_input_decodes_at_once(n_extra in 0usize..4, mag in 0.5f64..20.0) {
        let code = common::regular_36(4 + n_extra, 9);
        let llr = vec![mag; code.n_vars()];
        let out = decode(&code, &llr, &active_var_set(&code), &DecodeConfig::vnr_unbounded()).unwrap();
        prop_assert_eq!(out.reason, TerminationReason::SyndromeSatisfied);
        prop_assert_eq!(out.iterations, 1);
        prop_assert!(out.is_all_zero());
    }
}

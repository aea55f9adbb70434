//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its
//! criterion (written straight to stdout so it shows without
//! `--nocapture`) and then asserts.

mod common;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use cvqkd_et::channel::snr_for_beta;
use cvqkd_et::code::{active_var_set, save_alist};
use cvqkd_et::decoder::{
    decode, vnr_should_stop, DecodeConfig, IterationLimit, TerminationReason,
};
use cvqkd_et::harness::{
    compare_et, external_skr_table, read_captures, run_sweep, skr_table, to_csv_string,
    SweepConfig, SweepRecord,
};
use cvqkd_et::qkd::{
    decoder_throughput, finite_size_penalty, holevo_bound, mutual_information, skr, skr_dec,
    skr_dec_from_margin, solve_va_for_iab, symplectic_eigenvalues, Detection, QkdSystemParams,
    SkrBreakdown,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, name: &str, ok: bool, elapsed: Duration, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let line = format!(
        "[acceptance] {verdict} criterion {criterion} ({name}) in {:.2}s: {detail}\n",
        elapsed.as_secs_f64()
    );
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(ok, "criterion {criterion} ({name}) failed: {detail}");
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn criterion_1_formulas() {
    let start = Instant::now();
    let mut failures: Vec<String> = Vec::new();
    let mut check = |label: &str, got: f64, want: f64| {
        if !close(got, want, 1e-12) {
            failures.push(format!("{label}: {got} vs {want}"));
        }
    };

    let lossless = QkdSystemParams {
        distance_km: 0.0,
        eta: 1.0,
        nu_el: 0.0,
        xi: 0.0,
        v_a: 3.0,
        detection: Detection::Heterodyne,
        ..QkdSystemParams::default()
    };
    check("chi_line", lossless.chi_line(), 0.0);
    check("chi_het", lossless.chi_det(), 1.0);
    check("I_AB", mutual_information(&lossless), 2.5f64.log2());
    check(
        "solve_va",
        solve_va_for_iab(2.5f64.log2(), &lossless).unwrap(),
        3.0,
    );

    let p = QkdSystemParams::default();
    let delta = 7.0 * ((2.0f64 / 1e-10).log2() / 1e8).sqrt() + 2.0 / 1e8 * (1e10f64).log2();
    check("delta_n", finite_size_penalty(&p), delta);
    check(
        "skr",
        SkrBreakdown::from_components(0.02 / 0.95, 0.01, 0.0041, 0.95, 0.0).skr,
        0.0059,
    );
    check(
        "skr fer=1",
        SkrBreakdown::from_components(0.5, 0.1, 0.01, 0.9, 1.0).skr,
        0.0,
    );
    check("K", decoder_throughput(1e6, 500.0, 0.02, 0.0), 40.0);
    check("K fer=1", decoder_throughput(1e6, 500.0, 0.02, 1.0), 0.0);
    check("K halved D", decoder_throughput(1e6, 250.0, 0.02, 0.0), 80.0);
    check("SKR_dec", skr_dec_from_margin(1e6, 250.0, 2, 0.5, 0.004), 4.0);
    check(
        "mu ratio",
        skr_dec_from_margin(1e5, 30.0, 1, 0.2, 0.01) / skr_dec_from_margin(1e5, 30.0, 2, 0.2, 0.01),
        2.0,
    );
    check(
        "snr(1, 0.02)",
        snr_for_beta(1.0, 0.02).unwrap().snr,
        2f64.powf(0.04) - 1.0,
    );
    check("snr(0.5, 0.25)", snr_for_beta(0.5, 0.25).unwrap().snr, 1.0);

    // SKR_dec · μ · D̄ / N = SKR on random draws.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let detection = if rng.random_bool(0.5) {
            Detection::Homodyne
        } else {
            Detection::Heterodyne
        };
        let p = QkdSystemParams {
            distance_km: rng.random_range(0.0..120.0),
            eta: rng.random_range(0.2..1.0),
            nu_el: rng.random_range(0.0..0.1),
            xi: rng.random_range(0.0..0.05),
            v_a: rng.random_range(0.01..20.0),
            detection,
            n_privacy: 10f64.powf(rng.random_range(4.0..12.0)),
            ..QkdSystemParams::default()
        };
        let beta = rng.random_range(0.5..=1.0);
        let fer = rng.random_range(0.0..=1.0);
        let n = rng.random_range(1e3..1e7);
        let d_bar = rng.random_range(1.0..1000.0);
        let key = skr(&p, beta, fer).unwrap().skr;
        let dec = skr_dec(&p, beta, fer, n, d_bar).unwrap();
        let err = (dec * detection.mu() as f64 * d_bar / n - key).abs() / key.abs().max(1.0);
        worst = worst.max(err);
    }
    if worst > 1e-12 {
        failures.push(format!("identity worst relative error {worst:e}"));
    }

    let elapsed = start.elapsed();
    report(
        1,
        "formula suite",
        failures.is_empty() && elapsed < Duration::from_secs(1),
        elapsed,
        &if failures.is_empty() {
            format!("14 hand values to 1e-12; identity worst error {worst:.1e} over 1000 draws")
        } else {
            failures.join("; ")
        },
    );
}

#[test]
fn criterion_2_holevo_physicality() {
    let start = Instant::now();
    let axis = |lo: f64, hi: f64| (0..5).map(move |i| lo + (hi - lo) * i as f64 / 4.0);
    let mut worst_chi: f64 = 0.0;
    for detection in [Detection::Homodyne, Detection::Heterodyne] {
        for eta in axis(0.2, 1.0) {
            for nu_el in axis(0.0, 0.2) {
                for v_a in axis(0.1, 40.0) {
                    let p = QkdSystemParams {
                        distance_km: 0.0,
                        xi: 0.0,
                        eta,
                        nu_el,
                        v_a,
                        detection,
                        ..QkdSystemParams::default()
                    };
                    worst_chi = worst_chi.max(holevo_bound(&p).unwrap().abs());
                }
            }
        }
    }

    let mut min_nu = f64::INFINITY;
    let rate = 0.02;
    for detection in [Detection::Homodyne, Detection::Heterodyne] {
        let base = QkdSystemParams {
            detection,
            ..QkdSystemParams::default()
        };
        for k in 0..=80 {
            let beta = 0.92 + 0.001 * k as f64;
            let p = base.with_v_a(solve_va_for_iab(rate / beta, &base).unwrap());
            for nu in symplectic_eigenvalues(&p).unwrap() {
                min_nu = min_nu.min(nu);
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        2,
        "Holevo physicality",
        worst_chi <= 1e-9 && min_nu >= 1.0 - 1e-9 && elapsed < Duration::from_secs(1),
        elapsed,
        &format!("max |χ_BE(T=1)| = {worst_chi:.1e} on 5x5x5 grid; min ν = {min_nu:.12} for β in [0.92, 1]"),
    );
}

#[test]
fn criterion_3_tree_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    let codes = 25;
    for _ in 0..codes {
        let n = rng.random_range(4..=12);
        let code = common::random_tree_code(&mut rng, n);
        let llr: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
        let cfg = DecodeConfig {
            d_max: IterationLimit::Bounded(2 * n + 2),
            use_pce: false,
            use_vnr: false,
            msg_clamp: f64::INFINITY,
        };
        let out = decode(&code, &llr, &active_var_set(&code), &cfg).unwrap();
        let exact = common::brute_force_posteriors(&code, &llr);
        for (a, b) in out.posteriors.iter().zip(&exact) {
            worst = worst.max((a - b).abs());
        }
    }
    let elapsed = start.elapsed();
    report(
        3,
        "tree oracle",
        worst <= 1e-9 && elapsed < Duration::from_secs(10),
        elapsed,
        &format!("{codes} cycle-free codes, max |BP − MAP| = {worst:.1e}"),
    );
}

#[test]
fn criterion_4_termination_semantics() {
    let start = Instant::now();
    let mut notes = Vec::new();

    let code = common::regular_36(8, 2);
    let active = active_var_set(&code);
    let noiseless = vec![50.0; code.n_vars()];
    let mut a_ok = true;
    for cfg in [DecodeConfig::pce(10), DecodeConfig::vnr_unbounded()] {
        let out = decode(&code, &noiseless, &active, &cfg).unwrap();
        a_ok &= out.reason == TerminationReason::SyndromeSatisfied
            && out.iterations == 1
            && out.is_all_zero();
    }
    notes.push(format!("(a) {}", if a_ok { "ok" } else { "bad" }));

    let b_ok = vnr_should_stop(2.5, 3.0) && !vnr_should_stop(3.0, 3.0) && !vnr_should_stop(3.1, 3.0);
    notes.push(format!("(b) {}", if b_ok { "ok" } else { "bad" }));

    // Find frames where PCE alone and VNR alone would stop at the same
    // iteration, then decode with both.
    let small = common::regular_36(4, 2);
    let active = active_var_set(&small);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let sigma = 0.8f64.sqrt();
    let (mut ties, mut c_ok, mut frames) = (0, true, 0);
    let vnr_only = DecodeConfig {
        d_max: IterationLimit::Bounded(50),
        use_pce: false,
        use_vnr: true,
        msg_clamp: 30.0,
    };
    let both = DecodeConfig {
        d_max: IterationLimit::Bounded(50),
        ..DecodeConfig::vnr_unbounded()
    };
    while ties < 5 && frames < 50_000 {
        frames += 1;
        let llr: Vec<f64> = (0..small.n_vars())
            .map(|_| 2.0 * (1.0 + sigma * rng.sample::<f64, _>(rand_distr::StandardNormal)) / 0.8)
            .collect();
        let p = decode(&small, &llr, &active, &DecodeConfig::pce(50)).unwrap();
        if p.reason != TerminationReason::SyndromeSatisfied || p.iterations < 2 {
            continue;
        }
        let v = decode(&small, &llr, &active, &vnr_only).unwrap();
        if v.reason == TerminationReason::VnrDrop && v.iterations == p.iterations {
            ties += 1;
            let out = decode(&small, &llr, &active, &both).unwrap();
            c_ok &= out.reason == TerminationReason::SyndromeSatisfied
                && out.iterations == p.iterations;
        }
    }
    c_ok &= ties > 0;
    notes.push(format!(
        "(c) {} ({ties} simultaneous-fire frames in {frames})",
        if c_ok { "ok" } else { "bad" }
    ));

    let elapsed = start.elapsed();
    report(
        4,
        "termination semantics",
        a_ok && b_ok && c_ok && elapsed < Duration::from_secs(1),
        elapsed,
        &notes.join(", "),
    );
}

const TREND_BETAS: [f64; 6] = [0.78, 0.80, 0.82, 0.83, 0.84, 0.85];
const TREND_FRAMES: u64 = 300;

struct Trend {
    records: Vec<SweepRecord>,
    elapsed: Duration,
}

fn write_trend_config(dir: &Path, code_z: usize, betas: &[f64], frames: u64, policies: &str) -> std::path::PathBuf {
    save_alist(&common::regular_36(code_z, 1), dir.join("code.alist")).unwrap();
    let grid = betas.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(", ");
    let text = format!(
        "master_seed = 2024\n\n[code]\npath = \"code.alist\"\n\n[grid]\nbeta = [{grid}]\n\n\
         [stop]\nmin_frame_errors = 0\nmax_frames = {frames}\n\n{policies}"
    );
    let path = dir.join("sweep.toml");
    fs::write(&path, text).unwrap();
    path
}

const TREND_POLICIES: &str = r#"
[[policies]]
label = "pce-10"
d_max = 10

[[policies]]
label = "pce-50"
d_max = 50

[[policies]]
label = "pce-200"
d_max = 200

[[policies]]
label = "vnr"
d_max = "unbounded"
use_vnr = true
"#;

/// One sweep on the N = 2048 (3,6) code shared by criteria 5-7.
fn trend() -> &'static Trend {
    static TREND: OnceLock<Trend> = OnceLock::new();
    TREND.get_or_init(|| {
        let start = Instant::now();
        let dir = tempfile::tempdir().unwrap();
        let path = write_trend_config(dir.path(), 256, &TREND_BETAS, TREND_FRAMES, TREND_POLICIES);
        let cfg = SweepConfig::load(&path, &[] as &[&str]).unwrap();
        let records = run_sweep(&cfg, None).unwrap();
        Trend {
            records,
            elapsed: start.elapsed(),
        }
    })
}

fn cell<'a>(records: &'a [SweepRecord], beta: f64, label: &str) -> &'a SweepRecord {
    records
        .iter()
        .find(|r| r.beta == beta && r.policy_label == label)
        .unwrap()
}

#[test]
fn criterion_5_fer_and_iterations_ordered_by_dmax() {
    let t = trend();
    let mut ok = true;
    let mut cells = Vec::new();
    for &beta in &TREND_BETAS {
        let r: Vec<&SweepRecord> = ["pce-10", "pce-50", "pce-200"]
            .iter()
            .map(|l| cell(&t.records, beta, l))
            .collect();
        ok &= r[0].fer >= r[1].fer && r[1].fer >= r[2].fer;
        ok &= r[0].d_bar <= r[1].d_bar && r[1].d_bar <= r[2].d_bar;
        ok &= r.iter().all(|x| x.frames == TREND_FRAMES);
        cells.push(format!(
            "β={beta}: FER {:.3}/{:.3}/{:.3} D̄ {:.1}/{:.1}/{:.1}",
            r[0].fer, r[1].fer, r[2].fer, r[0].d_bar, r[1].d_bar, r[2].d_bar
        ));
    }
    report(
        5,
        "FER/D̄ ordering in D_max",
        ok && t.elapsed < Duration::from_secs(600),
        t.elapsed,
        &cells.join("; "),
    );
}

#[test]
fn criterion_6_vnr_throughput_gain() {
    let t = trend();
    let cmp = compare_et(&t.records, Some("vnr"), Some("pce-200")).unwrap();
    let in_band: Vec<_> = cmp
        .iter()
        .filter(|c| (0.3..=0.98).contains(&c.fer_baseline))
        .collect();
    let mut ok = in_band.len() >= 2;
    ok &= in_band.iter().all(|c| c.k_ratio.is_some_and(|r| r > 1.0));
    let by_fer = |pick_max: bool| {
        in_band
            .iter()
            .copied()
            .reduce(|a, b| {
                let b_wins = if pick_max {
                    b.fer_baseline > a.fer_baseline
                } else {
                    b.fer_baseline < a.fer_baseline
                };
                if b_wins {
                    b
                } else {
                    a
                }
            })
    };
    if let (Some(hi), Some(lo)) = (by_fer(true), by_fer(false)) {
        ok &= hi.k_ratio > lo.k_ratio;
    }
    let detail = in_band
        .iter()
        .map(|c| {
            format!(
                "β={}: FER_base {:.3} K ratio {:.2}",
                c.beta,
                c.fer_baseline,
                c.k_ratio.unwrap_or(f64::NAN)
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    report(
        6,
        "VNR throughput gain",
        ok && t.elapsed < Duration::from_secs(600),
        t.elapsed,
        &detail,
    );
}

#[test]
fn criterion_7_vnr_iteration_bound() {
    let t = trend();
    let vnr: Vec<&SweepRecord> = t.records.iter().filter(|r| r.policy_label == "vnr").collect();
    let worst = vnr.iter().map(|r| r.d_p99).max().unwrap();
    let max = vnr.iter().map(|r| r.d_observed_max).max().unwrap();
    let caps: u64 = vnr.iter().map(|r| r.safety_cap_hits).sum();
    report(
        7,
        "VNR p99 iterations",
        worst < 200 && caps == 0,
        t.elapsed,
        &format!("worst p99 = {worst} (< 200), largest single frame = {max}, safety-cap hits = {caps}"),
    );
}

/// Runs the sweep into `dir` and returns every output file's bytes.
fn sweep_outputs(config: &Path, dir: &Path, workers: usize) -> Vec<(String, Vec<u8>)> {
    let cfg = SweepConfig::load(config, &[format!("workers={workers}")]).unwrap();
    let out = dir.join("records.csv");
    let records = run_sweep(&cfg, Some(&out)).unwrap();
    fs::write(
        dir.join("compare.csv"),
        to_csv_string(&compare_et(&records, None, None).unwrap()).unwrap(),
    )
    .unwrap();
    fs::write(
        dir.join("skr.csv"),
        to_csv_string(&skr_table(&records, None).unwrap()).unwrap(),
    )
    .unwrap();
    let mut files: Vec<_> = walk(dir)
        .into_iter()
        .map(|p| {
            let rel = p.strip_prefix(dir).unwrap().display().to_string();
            (rel, fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out
}

#[test]
fn criterion_8_determinism() {
    let start = Instant::now();
    let root = tempfile::tempdir().unwrap();
    let policies = "[[policies]]\nlabel = \"pce-50\"\nd_max = 50\n\n\
                    [[policies]]\nlabel = \"vnr\"\nd_max = \"unbounded\"\nuse_vnr = true\n";
    let config = write_trend_config(root.path(), 64, &[0.8, 0.85], 200, policies);
    let runs: Vec<_> = [("w1", 1), ("w1-again", 1), ("w4", 4)]
        .iter()
        .map(|(name, workers)| {
            let dir = root.path().join(name);
            fs::create_dir(&dir).unwrap();
            sweep_outputs(&config, &dir, *workers)
        })
        .collect();
    let files = runs[0].len();
    let ok = runs[0] == runs[1] && runs[0] == runs[2] && files >= 7;
    let elapsed = start.elapsed();
    report(
        8,
        "determinism and worker invariance",
        ok && elapsed < Duration::from_secs(120),
        elapsed,
        &format!("{files} output files byte-identical across 2 reruns (1 worker) and 4 workers"),
    );
}

#[test]
fn criterion_9_external_captures() {
    let start = Instant::now();
    let mut text = String::from("capture_id,policy_label,beta,i_ab,chi_be,fer,d_bar\n");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for cap in 0..8 {
        for k in 0..5 {
            let beta = 0.92 + 0.02 * k as f64;
            let i_ab = rng.random_range(0.02..0.03);
            let chi = rng.random_range(0.0..0.015);
            let fer = rng.random_range(0.0..0.9);
            let d = rng.random_range(20.0..600.0);
            text.push_str(&format!("cap{cap},baseline,{beta},{i_ab},{chi},{fer},{d}\n"));
            text.push_str(&format!("cap{cap},vnr,{beta},{i_ab},{chi},{fer},{}\n", d / 2.0));
        }
    }
    let rows = read_captures(text.as_bytes(), "synthetic captures").unwrap();
    let table =
        external_skr_table(&rows, &QkdSystemParams::default(), 1e6, "baseline").unwrap();
    let vnr: Vec<_> = table.iter().filter(|s| s.policy_label == "vnr").collect();
    let worst = vnr
        .iter()
        .map(|s| s.skr_dec_ratio.map_or(f64::INFINITY, |r| (r - 2.0).abs()))
        .fold(0.0, f64::max);
    let sorted = vnr.windows(2).all(|w| w[0].beta_opt <= w[1].beta_opt);
    let elapsed = start.elapsed();
    report(
        9,
        "external captures",
        vnr.len() == 8 && worst <= 1e-12 && sorted && elapsed < Duration::from_secs(1),
        elapsed,
        &format!("{} captures, max |ratio − 2| = {worst:.1e}, sorted by β_opt: {sorted}", vnr.len()),
    );
}

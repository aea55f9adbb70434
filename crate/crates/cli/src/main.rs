use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cvqkd_et::code::{active_var_set, lift_protograph, load_alist, parse_base_matrix, save_alist};
use cvqkd_et::decoder::{decode, DecodeConfig, IterationLimit, DEFAULT_MSG_CLAMP};
use cvqkd_et::harness::config::QkdSection;
use cvqkd_et::harness::{
    compare_et, external_skr_table, read_captures_file, read_records, run_sweep, skr_table,
    to_csv_string, write_csv, SweepConfig,
};
use cvqkd_et::{Error, ErrorKind, Result};

#[derive(Parser)]
#[command(name = "cvqkd-et", version, about = "LDPC early-termination and CV-QKD key-rate study")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lift a protograph base matrix into an alist parity-check matrix.
    GenCode {
        /// Base matrix, rows separated by `;` or newlines; or a file holding one.
        #[arg(long)]
        base: String,
        /// Lifting factor Z.
        #[arg(long)]
        lift: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode one block of channel LLRs.
    Decode {
        /// Parity-check matrix in alist format.
        #[arg(long)]
        code: PathBuf,
        /// Channel LLRs separated by whitespace or commas.
        #[arg(long)]
        llr: PathBuf,
        /// Iteration limit, or `unbounded` (needs --vnr).
        #[arg(long, default_value = "50")]
        d_max: String,
        /// Enable the reliability-drop stop rule.
        #[arg(long)]
        vnr: bool,
        /// Disable the parity-check stop rule.
        #[arg(long)]
        no_pce: bool,
        /// Message clamp; `inf` disables it.
        #[arg(long, default_value_t = DEFAULT_MSG_CLAMP)]
        clamp: f64,
        /// Write the full outcome as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo FER and iteration sweep over β and termination policies.
    FerSweep {
        #[arg(long)]
        config: PathBuf,
        /// Override a config field, e.g. `stop.max_frames=500` or
        /// `policies.0.d_max=10`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Records CSV; overrides `out` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Throughput and decoded-key ratios of a VNR policy over baselines.
    CompareEt {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        vnr_label: Option<String>,
        #[arg(long)]
        baseline_label: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Key-rate table from sweep records or external captures.
    SkrTable {
        #[arg(long, conflicts_with = "external", required_unless_present = "external")]
        records: Option<PathBuf>,
        /// Captures CSV with columns capture_id, policy_label, beta, i_ab,
        /// chi_be, fer, d_bar.
        #[arg(long, requires = "baseline_label")]
        external: Option<PathBuf>,
        /// Recompute key terms with this config's [qkd] section.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        baseline_label: Option<String>,
        /// Block length N for external captures.
        #[arg(long)]
        block_length: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 1,
                ErrorKind::Io => 2,
                ErrorKind::Validation => 3,
            })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenCode {
            base,
            lift,
            seed,
            out,
        } => {
            let text = if Path::new(&base).is_file() {
                fs::read_to_string(&base).map_err(|e| Error::Io {
                    path: base.clone().into(),
                    source: e,
                })?
            } else {
                base
            };
            let code = lift_protograph(&parse_base_matrix(&text)?, lift, seed)?;
            save_alist(&code, &out)?;
            println!(
                "n={} m={} edges={} rate={}",
                code.n_vars(),
                code.n_checks(),
                code.n_edges(),
                code.rate()
            );
            Ok(())
        }
        Command::Decode {
            code,
            llr,
            d_max,
            vnr,
            no_pce,
            clamp,
            out,
        } => {
            let h = load_alist(&code)?;
            let llrs = read_llrs(&llr)?;
            let cfg = DecodeConfig {
                d_max: parse_d_max(&d_max)?,
                use_pce: !no_pce,
                use_vnr: vnr,
                msg_clamp: clamp,
            };
            let outcome = decode(&h, &llrs, &active_var_set(&h), &cfg)?;
            println!("iterations={}", outcome.iterations);
            println!("reason={}", outcome.reason);
            println!("q_trace={}", outcome.q_trace_csv());
            if let Some(path) = out {
                let json = serde_json::to_string_pretty(&outcome)
                    .map_err(|e| Error::Domain(format!("outcome is not representable: {e}")))?;
                write_text(&path, &json)?;
            }
            Ok(())
        }
        Command::FerSweep {
            config,
            set,
            seed,
            workers,
            out,
        } => {
            let mut cfg = SweepConfig::load(&config, &set)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(w) = workers {
                if w == 0 {
                    return Err(Error::Config("--workers must be at least 1".into()));
                }
                cfg.workers = Some(w);
            }
            if out.is_some() {
                cfg.out = out;
            }
            let records = run_sweep(&cfg, cfg.out.as_deref())?;
            if cfg.out.is_none() {
                print!("{}", to_csv_string(&records)?);
            }
            Ok(())
        }
        Command::CompareEt {
            records,
            vnr_label,
            baseline_label,
            out,
        } => {
            let recs = read_records(&records)?;
            let rows = compare_et(&recs, vnr_label.as_deref(), baseline_label.as_deref())?;
            emit(&rows, out.as_deref())
        }
        Command::SkrTable {
            records,
            external,
            config,
            set,
            baseline_label,
            block_length,
            out,
        } => {
            let qkd: Option<QkdSection> = match &config {
                Some(path) => Some(SweepConfig::load(path, &set)?.qkd),
                None if !set.is_empty() => {
                    return Err(Error::Config("--set needs --config".into()));
                }
                None => None,
            };
            if let Some(path) = external {
                let baseline = baseline_label.expect("clap requires it with --external");
                let n = block_length
                    .or(qkd.and_then(|q| q.block_length))
                    .ok_or_else(|| {
                        Error::Config(
                            "external captures need --block-length or qkd.block_length".into(),
                        )
                    })?;
                let params = qkd.unwrap_or_default().params();
                let rows = external_skr_table(&read_captures_file(&path)?, &params, n, &baseline)?;
                emit(&rows, out.as_deref())
            } else {
                let path = records.expect("clap requires --records or --external");
                let mut qkd = qkd;
                if let (Some(q), Some(n)) = (qkd.as_mut(), block_length) {
                    q.block_length = Some(n);
                }
                let rows = skr_table(&read_records(&path)?, qkd.as_ref())?;
                emit(&rows, out.as_deref())
            }
        }
    }
}

fn parse_d_max(text: &str) -> Result<IterationLimit> {
    if text == "unbounded" {
        return Ok(IterationLimit::Unbounded);
    }
    text.parse()
        .map(IterationLimit::Bounded)
        .map_err(|_| Error::Config(format!("--d-max: expected a count or `unbounded`, got `{text}`")))
}

fn read_llrs(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(i, t)| {
            t.parse::<f64>().map_err(|_| Error::Csv {
                context: format!("{} value {}", path.display(), i + 1),
                msg: format!("`{t}` is not a number"),
            })
        })
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn emit<T: serde::Serialize>(rows: &[T], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_csv(path, rows),
        None => {
            print!("{}", to_csv_string(rows)?);
            Ok(())
        }
    }
}

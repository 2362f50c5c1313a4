use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use orf::data::{parse_libsvm_file, LibsvmOptions};
use orf::eval::log::FOREST_FILE;
use orf::eval::{consistency_report, shrink_factor_check, RunLog};
use orf::experiment::{train_to_dir, ExperimentConfig};
use orf::{OrfError, RngStream};

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_INVARIANT: u8 = 4;

#[derive(Parser)]
#[command(name = "orf", version, about = "Online random forest experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "ORF_THREADS")]
    threads: Option<usize>,

    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the seeded repetitions described by a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the consistency diagnostics of a run or experiment directory.
    Diagnose {
        dir: PathBuf,
        /// Monte-Carlo trials for the shrink-factor check.
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
    /// Validate a LIBSVM file.
    ParseCheck { file: PathBuf },
}

fn data_exit(e: &OrfError) -> u8 {
    match e {
        OrfError::Config(_) => EXIT_CONFIG,
        OrfError::Invariant(_) => EXIT_INVARIANT,
        _ => EXIT_DATA,
    }
}

fn fail(code: u8, e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(code)
}

fn train(
    config: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
) -> ExitCode {
    let mut cfg = match ExperimentConfig::load(config) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if let Some(s) = seed {
        cfg.hyperparams.master_seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    if threads == Some(0) {
        return fail(EXIT_CONFIG, "--threads must be at least 1");
    }
    let results = match train_to_dir(&cfg, threads) {
        Ok(r) => r,
        Err(e) => return fail(data_exit(&e), e),
    };
    for r in &results {
        let last = r.log.checkpoints.last().expect("at least one checkpoint");
        let bayes = last
            .bayes_accuracy
            .map(|b| format!("  bayes {b:.4}"))
            .unwrap_or_default();
        println!(
            "run {:03}: t={} forest {:.4}  trees {:.4} +- {:.4}  splits {}{bayes}",
            r.run,
            last.t,
            last.forest_accuracy,
            last.mean_tree_accuracy,
            last.std_tree_accuracy,
            last.split_count
        );
    }
    println!("wrote {}", cfg.output_dir.display());
    ExitCode::SUCCESS
}

/// `dir` itself if it holds a run, else its `run_*` subdirectories.
fn run_dirs(dir: &Path) -> Vec<PathBuf> {
    if dir.join(FOREST_FILE).is_file() {
        return vec![dir.to_path_buf()];
    }
    let Ok(entries) = fs::read_dir(dir) else {
        return Vec::new();
    };
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_dir()
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("run_"))
        })
        .collect();
    dirs.sort();
    dirs
}

fn diagnose(dir: &Path, trials: usize, seed: Option<u64>) -> ExitCode {
    let dirs = run_dirs(dir);
    if dirs.is_empty() {
        return fail(
            EXIT_DATA,
            format!("{}: no run artifacts found", dir.display()),
        );
    }
    let mut all_ok = true;
    for d in &dirs {
        let log = match RunLog::read_dir(d) {
            Ok(l) => l,
            Err(e) => return fail(EXIT_DATA, e),
        };
        let report = match consistency_report(&log) {
            Ok(r) => r,
            Err(e) => return fail(EXIT_DATA, e),
        };
        println!("== {}", d.display());
        print!("{report}");
        all_ok &= report.hard_invariants_hold();
    }
    if trials > 0 {
        let mut rng = RngStream::new(seed.unwrap_or(0));
        println!("== shrink factor, {trials} trials");
        for m in [1, 5, 10] {
            let est = shrink_factor_check(m, trials, &mut rng);
            println!(
                "m={m:<3} estimate {:.6}  expected {:.6}  z {:+.2}",
                est.mean,
                est.expected(),
                est.z_score()
            );
        }
    }
    if all_ok {
        println!("all hard invariants hold");
        ExitCode::SUCCESS
    } else {
        println!("hard invariant violated");
        ExitCode::from(EXIT_FAIL)
    }
}

fn parse_check(file: &Path) -> ExitCode {
    match parse_libsvm_file(file, &LibsvmOptions::default()) {
        Ok(ds) => {
            println!(
                "{}: {} points, {} features, {} classes (labels {:?})",
                file.display(),
                ds.len(),
                ds.dims,
                ds.classes,
                ds.label_map
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_DATA, e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Train { config, out } => train(&config, out, cli.seed, cli.threads),
        Command::Diagnose { dir, trials } => diagnose(&dir, trials, cli.seed),
        Command::ParseCheck { file } => parse_check(&file),
    }
}

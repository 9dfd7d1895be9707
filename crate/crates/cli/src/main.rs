//! Batch driver: partition verification suites, limit-law evaluation,
//! finite-size convergence sweeps, compression-identity checks and freeness
//! certification, all driven by JSON experiment configs.

mod config;

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use ovfree::algebra::{AlgElement, BlockMatrix};
use ovfree::cumulants::{
    boolean_limit_moment, freeness_check, semicircular_limit_moment, BooleanOracle,
    SemicircularOracle,
};
use ovfree::matmodel::{
    convergence_sweep, decay_ratios_ok, verify_matrix_cpm, MomentRegime, SweepMode, SweepRow,
    MAX_EXACT_DEGREE,
};
use ovfree::partitions::{enumerate_all, enumerate_class, verify, PartitionClass};

/// How a command run can fail; the variant fixes the process exit code.
pub enum Failure {
    Verification(String),
    Config(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Config(m) | Failure::Io(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "ovfree",
    version,
    about = "Operator-valued free probability toolkit: partition suites, limit laws, band matrix sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count a partition class and run named verification suites.
    Partitions {
        /// Ground set size for the class count.
        #[arg(long)]
        m: usize,
        /// Class to count: all, noncrossing, interval, pair, nc_pair,
        /// interval_pair, closed.
        #[arg(long)]
        class: Option<String>,
        /// Verification suite to run (repeatable): counts, ok-bijection,
        /// remove-one, restriction-p, odd-length, even-length, single-block,
        /// inside-ok, anti-oriented, d-closure.
        #[arg(long = "verify")]
        verify: Vec<String>,
    },
    /// Evaluate the limit moment of each configured word as a JSON matrix.
    Limit {
        #[arg(long)]
        config: PathBuf,
        /// Restrict to one word id.
        #[arg(long)]
        word: Option<String>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep band counts with the exact and/or Monte Carlo engines, emit CSV.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cap the worker thread count.
        #[arg(long)]
        threads: Option<usize>,
        /// Exact-mode deviations must shrink by this factor per doubled n.
        #[arg(long, default_value_t = 0.75)]
        ratio: f64,
    },
    /// Check the compression identity of the regrouped matrix model.
    ExtendedCheck {
        #[arg(long)]
        config: PathBuf,
        /// Outer grid size N of the regrouping.
        #[arg(long, default_value_t = 2)]
        grid: usize,
        /// Number of random arguments per entry model.
        #[arg(long, default_value_t = 10)]
        draws: usize,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Largest acceptable deviation.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Certify freeness of two symbol families under the limit law.
    Freeness {
        #[arg(long)]
        config: PathBuf,
        /// Longest mixed word to scan (defaults to the config's max_len).
        #[arg(long)]
        max_len: Option<usize>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Mc,
    Both,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Partitions { m, class, verify } => run_partitions(m, class, &verify),
        Command::Limit { config, word, out } => run_limit(&config, word, out.as_deref()),
        Command::Converge { config, mode, seed, out, threads, ratio } => {
            run_converge(&config, mode, seed, out.as_deref(), threads, ratio)
        }
        Command::ExtendedCheck { config, grid, draws, seed, tol } => {
            run_extended_check(&config, grid, draws, seed, tol)
        }
        Command::Freeness { config, max_len, tol, seed } => {
            run_freeness(&config, max_len, tol, seed)
        }
    };
    match result {
        Ok(()) => {}
        Err(f) => {
            eprintln!("error: {}", f.message());
            std::process::exit(f.exit_code());
        }
    }
}

fn parse_class(name: &str) -> Result<PartitionClass, Failure> {
    Ok(match name {
        "noncrossing" | "nc" => PartitionClass::Noncrossing,
        "interval" => PartitionClass::Interval,
        "pair" => PartitionClass::Pair,
        "nc_pair" => PartitionClass::NcPair,
        "interval_pair" => PartitionClass::IntervalPair,
        "closed" => PartitionClass::Closed,
        other => {
            return Err(Failure::Config(format!(
                "unknown partition class '{other}'"
            )))
        }
    })
}

fn run_partitions(m: usize, class: Option<String>, suites: &[String]) -> Result<(), Failure> {
    if let Some(name) = class {
        let list = if name == "all" {
            enumerate_all(m)
        } else {
            enumerate_class(m, parse_class(&name)?)
        }
        .map_err(|e| Failure::Config(e.to_string()))?;
        println!("count {}", list.len());
    }
    for name in suites {
        match verify::run_suite(name) {
            Ok(()) => println!("verify {name}: pass"),
            Err(ovfree::Error::InvalidInput(msg)) => return Err(Failure::Config(msg)),
            Err(e) => {
                println!("verify {name}: FAIL");
                return Err(Failure::Verification(format!("suite {name}: {e}")));
            }
        }
    }
    Ok(())
}

fn matrix_out(a: &AlgElement) -> Vec<Vec<[f64; 2]>> {
    let k = a.dim();
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    let z = a.entry(i, j);
                    [z.re, z.im]
                })
                .collect()
        })
        .collect()
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| Failure::Io(format!("writing {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::Io(format!("writing stdout: {e}"))),
    }
}

fn run_limit(path: &Path, word: Option<String>, out: Option<&Path>) -> Result<(), Failure> {
    let loaded = config::load(path)?;
    if let Some(id) = &word {
        if !loaded.words.iter().any(|(wid, _)| wid == id) {
            return Err(Failure::Config(format!("no word with id '{id}'")));
        }
    }

    #[derive(Serialize)]
    struct Row {
        word_id: String,
        value: Vec<Vec<[f64; 2]>>,
    }

    let mut rows = Vec::new();
    for (id, w) in &loaded.words {
        if word.as_deref().is_some_and(|only| only != id) {
            continue;
        }
        let value = match &loaded.regime {
            MomentRegime::Classical => semicircular_limit_moment(&loaded.profile, &loaded.etas, w),
            MomentRegime::Boolean(_) => boolean_limit_moment(&loaded.profile, &loaded.etas, w),
        }
        .map_err(|e| Failure::Config(format!("word '{id}': {e}")))?;
        rows.push(Row { word_id: id.clone(), value: matrix_out(&value) });
    }
    let mut text = serde_json::to_string_pretty(&rows).expect("report serializes");
    text.push('\n');
    write_out(out, text.as_bytes())
}

fn write_csv(out: Option<&Path>, rows: &[SweepRow]) -> Result<(), Failure> {
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(
            File::create(path)
                .map_err(|e| Failure::Io(format!("creating {}: {e}", path.display())))?,
        ),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let io_err = |e: csv::Error| Failure::Io(format!("writing csv: {e}"));
    w.write_record(["word_id", "n", "mode", "deviation_norm", "stderr_norm", "wall_ms"])
        .map_err(io_err)?;
    for row in rows {
        w.write_record([
            row.word_id.as_str(),
            &row.n.to_string(),
            row.mode,
            &format!("{:e}", row.deviation_norm),
            &format!("{:e}", row.stderr_norm),
            &format!("{:.3}", row.wall_ms),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| Failure::Io(format!("writing csv: {e}")))
}

fn run_converge(
    path: &Path,
    mode: ModeArg,
    seed: Option<u64>,
    out: Option<&Path>,
    threads: Option<usize>,
    ratio: f64,
) -> Result<(), Failure> {
    let loaded = config::load(path)?;
    let mode = match mode {
        ModeArg::Exact => SweepMode::Exact,
        ModeArg::Mc => SweepMode::Mc,
        ModeArg::Both => SweepMode::Both,
    };
    if loaded.is_boolean && mode != SweepMode::Exact {
        return Err(Failure::Config(
            "the boolean regime has no sampling path; use --mode exact".into(),
        ));
    }
    if loaded.n_list.is_empty() {
        return Err(Failure::Config("n_list must not be empty".into()));
    }
    if mode != SweepMode::Exact && loaded.trials < 2 {
        return Err(Failure::Config(
            "trials must be at least 2 for Monte Carlo sweeps".into(),
        ));
    }
    if mode != SweepMode::Mc {
        for (id, w) in &loaded.words {
            if w.degree() > MAX_EXACT_DEGREE {
                return Err(Failure::Config(format!(
                    "word '{id}' has degree {} but the exact engine caps at {MAX_EXACT_DEGREE}",
                    w.degree()
                )));
            }
        }
    }
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    }
    let seed = seed.unwrap_or(loaded.seed);
    let rows = convergence_sweep(
        &loaded.profile,
        &loaded.models,
        &loaded.regime,
        &loaded.words,
        &loaded.n_list,
        mode,
        loaded.trials,
        seed,
    )
    .map_err(|e| Failure::Config(e.to_string()))?;
    write_csv(out, &rows)?;
    if mode != SweepMode::Mc && !decay_ratios_ok(&rows, ratio) {
        return Err(Failure::Verification(format!(
            "exact deviations fail the decay factor {ratio} across doubled band counts"
        )));
    }
    Ok(())
}

fn run_extended_check(
    path: &Path,
    grid: usize,
    draws: usize,
    seed: Option<u64>,
    tol: f64,
) -> Result<(), Failure> {
    let loaded = config::load(path)?;
    if grid == 0 || draws == 0 {
        return Err(Failure::Config("grid and draws must be positive".into()));
    }
    let seed = seed.unwrap_or(loaded.seed);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let side = loaded.dim * grid;
    let mut worst_all = 0.0f64;
    for (s, model) in loaded.models.iter().enumerate() {
        let mut worst = 0.0f64;
        for _ in 0..draws {
            let flat = DMatrix::from_fn(side, side, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let b = BlockMatrix::from_flat(loaded.dim, grid, flat)
                .map_err(|e| Failure::Config(e.to_string()))?;
            for i in 0..grid {
                for j in 0..grid {
                    let (_, _, dev) = verify_matrix_cpm(model, &b, grid, i, j)
                        .map_err(|e| Failure::Config(e.to_string()))?;
                    worst = worst.max(dev);
                }
            }
        }
        println!(
            "model {s}: worst deviation {worst:.3e} over {draws} draws on the {grid}x{grid} grid"
        );
        worst_all = worst_all.max(worst);
    }
    if worst_all > tol {
        return Err(Failure::Verification(format!(
            "compression identity deviates by {worst_all:.3e}, tolerance {tol:.1e}"
        )));
    }
    Ok(())
}

fn run_freeness(
    path: &Path,
    max_len: Option<usize>,
    tol: f64,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let loaded = config::load(path)?;
    let (fam1, fam2) = loaded
        .families
        .clone()
        .ok_or_else(|| Failure::Config("config must define families".into()))?;
    let max_len = max_len.unwrap_or(loaded.max_len);
    let seed = seed.unwrap_or(loaded.seed);
    let outcome = if loaded.is_boolean {
        let oracle =
            BooleanOracle::new(loaded.etas.clone()).map_err(|e| Failure::Config(e.to_string()))?;
        freeness_check(&oracle, &fam1, &fam2, max_len, tol, seed)
    } else {
        let oracle = SemicircularOracle::new(loaded.etas.clone())
            .map_err(|e| Failure::Config(e.to_string()))?;
        freeness_check(&oracle, &fam1, &fam2, max_len, tol, seed)
    }
    .map_err(|e| Failure::Config(e.to_string()))?;
    if outcome.is_free {
        println!(
            "free: yes (checked {} cumulants up to length {max_len}, max violation {:.3e})",
            outcome.cumulants_checked, outcome.max_violation
        );
        Ok(())
    } else {
        let w = outcome.witness.expect("non-free outcome carries a witness");
        println!(
            "free: no; witness letters {:?}, partition {}, violation {:.3e}",
            w.letters, w.partition, w.violation
        );
        Err(Failure::Verification(
            "mixed free cumulants do not vanish".into(),
        ))
    }
}

//! `chemdiv` — batch workflows over SMILES files: validation, diversity
//! reports, the generated-vs-natural diversity challenge, and the seqgen
//! training lab. Every report command can emit a run manifest with input
//! hashes so runs are reproducible byte for byte.

mod commands;
mod manifest;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

/// Data-shaped errors (unreadable files, bad records, failed joins).
pub fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Parser)]
#[command(
    name = "chemdiv",
    version,
    about = "Chemical-diversity metrics and a desk-scale sequence-generation lab"
)]
struct Cli {
    /// Worker threads for parallel sections (default: CHEMDIV_WORKERS or all
    /// cores). Results are bit-identical for any worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a SMILES file line by line and report the valid fraction.
    Validate {
        /// SMILES file, or '-' for stdin.
        input: String,
        /// Print a verdict line per record before the summary.
        #[arg(long)]
        per_line: bool,
        /// Write the JSON summary here instead of stdout (also emits a
        /// manifest next to it).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute a diversity metric over one set (internal, variance) or two
    /// sets (external).
    Divreport {
        /// SMILES file, or '-' for stdin.
        input: String,
        /// Second SMILES file (external metric only).
        input_b: Option<String>,
        #[arg(long, value_parser = ["internal", "external", "variance"], default_value = "internal")]
        metric: String,
        /// Morgan radius.
        #[arg(long, default_value_t = 2)]
        radius: u32,
        /// Folded bitset width (power of two in [64, 65536]).
        #[arg(long, default_value_t = 2048)]
        nbits: u32,
        /// Compare folded bitsets instead of exact feature sets.
        #[arg(long)]
        folded: bool,
        /// Subsample size: internal -> evaluate a random subset; external ->
        /// cap the second (reference) set, default 3000; 0 disables.
        #[arg(long)]
        subsample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Label for the report (default: input file stem).
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the diversity challenge: are the generated molecules that
    /// satisfy the property at least as diverse as the natural ones?
    Challenge {
        /// Generated-set SMILES file.
        gen: String,
        /// Natural-set SMILES file.
        nature: String,
        /// TSV of ingested scores covering both sets.
        #[arg(long)]
        scores: PathBuf,
        /// Which score column to threshold on.
        #[arg(long)]
        score_col: String,
        #[arg(long, default_value_t = 0.8)]
        threshold: f64,
        #[arg(long, default_value_t = 2)]
        radius: u32,
        #[arg(long, default_value_t = 2048)]
        nbits: u32,
        #[arg(long)]
        folded: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the sequence-generation lab and write per-epoch reports.
    Train {
        /// key=value training config file.
        #[arg(long)]
        config: PathBuf,
        /// Training corpus (SMILES or plain sequences, one per line).
        #[arg(long)]
        corpus: PathBuf,
        /// Output directory for checkpoint.bin, epochs.jsonl, manifest.json.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Sample sequences from a checkpoint.
    Sample {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_workers(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("CHEMDIV_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n.filter(|&n| n > 0) {
        // ignore failure: the pool can only be configured once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run() -> Result<(), CliError> {
    let cli = Cli::try_parse().map_err(|e| {
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            print!("{e}");
            std::process::exit(0);
        }
        CliError::Usage(e.to_string())
    })?;
    init_workers(cli.workers);

    match cli.command {
        Command::Validate {
            input,
            per_line,
            out,
        } => commands::validate(&input, per_line, out.as_deref()),
        Command::Divreport {
            input,
            input_b,
            metric,
            radius,
            nbits,
            folded,
            subsample,
            seed,
            label,
            out,
        } => commands::divreport(commands::DivreportArgs {
            input,
            input_b,
            metric,
            radius,
            nbits,
            folded,
            subsample,
            seed,
            label,
            out,
        }),
        Command::Challenge {
            gen,
            nature,
            scores,
            score_col,
            threshold,
            radius,
            nbits,
            folded,
            out,
        } => commands::challenge(commands::ChallengeArgs {
            gen,
            nature,
            scores,
            score_col,
            threshold,
            radius,
            nbits,
            folded,
            out,
        }),
        Command::Train {
            config,
            corpus,
            out_dir,
        } => commands::train(&config, &corpus, &out_dir),
        Command::Sample {
            checkpoint,
            n,
            seed,
            out,
        } => commands::sample(&checkpoint, n, seed, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

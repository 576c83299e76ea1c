use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use isosense_cli::commands::{self, AnalyzeOptions, CompareOptions, EvalOptions};
use isosense_cli::error::{CliError, CliResult};
use isosense_core::corpus::{CorpusFormat, Pos};
use isosense_core::{PairingMode, SenSimNormalization};

#[derive(Parser)]
#[command(
    name = "isosense",
    version,
    about = "Anisotropy and word-sense analysis of contextual embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_pos(s: &str) -> Result<Pos, String> {
    s.to_ascii_uppercase().parse()
}

fn parse_normalization(s: &str) -> Result<SenSimNormalization, String> {
    match s {
        "pair-mean" | "pair_mean" => Ok(SenSimNormalization::PairMean),
        "literal" => Ok(SenSimNormalization::Literal),
        other => Err(format!("unknown normalization '{other}' (pair-mean | literal)")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Random-pair baseline, explained variance and 2D projections per layer.
    Analyze {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Baseline sample size.
        #[arg(long, default_value_t = 1000)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of leading principal components to report.
        #[arg(long = "d-top", default_value_t = 10)]
        d_top: usize,
        /// Frequency bands for the projection CSVs.
        #[arg(long, default_value_t = 4)]
        bands: usize,
        /// all-pairs: k occurrences, every pair; k-pairs: k random pairs.
        #[arg(long, default_value = "all-pairs")]
        pairing: PairingMode,
    },
    /// Within-sense and cross-sense similarity report, vanilla and adjusted.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "all-pairs")]
        pairing: PairingMode,
        #[arg(long, value_delimiter = ',', value_parser = parse_pos, default_value = "NOUN,VERB,ADJ")]
        pos: Vec<Pos>,
        /// Within-sense normalization: pair-mean or literal.
        #[arg(long, value_parser = parse_normalization, default_value = "pair-mean")]
        sensim_normalization: SenSimNormalization,
    },
    /// Remove dominant directions and retrofit same-sense occurrences.
    Laser {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two datasets over the same occurrence table.
    Compare {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "d-top", default_value_t = 10)]
        d_top: usize,
        #[arg(long, default_value = "all-pairs")]
        pairing: PairingMode,
        #[arg(long, value_delimiter = ',', value_parser = parse_pos, default_value = "NOUN,VERB,ADJ")]
        pos: Vec<Pos>,
    },
    /// Generate a synthetic dataset from a JSON spec.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load a sense-annotated corpus and report the multi-sense vocabulary.
    Inventory {
        #[arg(long)]
        corpus: PathBuf,
        /// tsv or xml (UFSAC).
        #[arg(long, default_value = "tsv")]
        format: CorpusFormat,
        #[arg(long, value_delimiter = ',', value_parser = parse_pos, default_value = "NOUN,VERB,ADJ")]
        pos: Vec<Pos>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    match cli.command {
        Command::Analyze {
            dataset,
            out,
            k,
            seed,
            d_top,
            bands,
            pairing,
        } => commands::cmd_analyze(
            &dataset,
            &out,
            &AnalyzeOptions {
                k,
                seed,
                d_top,
                bands,
                pairing,
            },
        ),
        Command::Eval {
            dataset,
            out,
            k,
            seed,
            pairing,
            pos,
            sensim_normalization,
        } => commands::cmd_eval(
            &dataset,
            &out,
            &EvalOptions {
                k,
                seed,
                pairing,
                pos,
                normalization: sensim_normalization,
            },
        ),
        Command::Laser { dataset, config, out } => commands::cmd_laser(&dataset, &config, &out),
        Command::Compare {
            before,
            after,
            out,
            k,
            seed,
            d_top,
            pairing,
            pos,
        } => commands::cmd_compare(
            &before,
            &after,
            &out,
            &CompareOptions {
                k,
                seed,
                d_top,
                pairing,
                pos,
            },
        ),
        Command::Synth { config, out } => commands::cmd_synth(&config, &out),
        Command::Inventory {
            corpus,
            format,
            pos,
            out,
        } => commands::cmd_inventory(&corpus, format, &pos, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(out)) => {
            println!("{}", out.display());
            ExitCode::SUCCESS
        }
        Ok(Err(e)) => report(e),
        Err(_) => report(CliError::internal("internal error")),
    }
}

fn report(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

mod commands;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use increco_core::analysis::RestoreStep;
use increco_core::decode::Endpoint;
use increco_core::state::{ContextUnit, EntityOrder, Mode};

/// Incremental coreference resolution: run, score and analyse.
#[derive(Debug, Parser)]
#[command(name = "increco", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert between CoNLL-2012 and docjson (chosen by file extension).
    Convert { input: PathBuf, output: PathBuf },
    /// Write the seeded synthetic corpus.
    Synth(SynthArgs),
    /// Print k train/dev/test folds over a corpus as JSON.
    Folds {
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Annotate a corpus chunk by chunk.
    Run(RunArgs),
    /// Score predictions against gold clusters.
    Score(ScoreArgs),
    /// Error analyses and corpus augmentations.
    #[command(subcommand)]
    Analyze(Analysis),
    /// Compression ratio between a full-prefix and an entity-centric run.
    CompressStats {
        /// runlog.jsonl of the full-prefix run.
        #[arg(long)]
        full_prefix: PathBuf,
        /// runlog.jsonl of the entity-centric run.
        #[arg(long)]
        entity_centric: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 60)]
    docs: usize,
    #[arg(long, default_value_t = 2023)]
    seed: u64,
    #[arg(long, default_value_t = 400)]
    min_tokens: usize,
    #[arg(long, default_value_t = 600)]
    max_tokens: usize,
    /// Output file; `.conll` selects CoNLL, anything else docjson.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    FullPrefix,
    EntityCentric,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::FullPrefix => Mode::FullPrefix,
            ModeArg::EntityCentric => Mode::EntityCentric,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OrderArg {
    Recency,
    Document,
}

impl From<OrderArg> for EntityOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Recency => EntityOrder::Recency,
            OrderArg::Document => EntityOrder::Document,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UnitArg {
    Annotated,
    Raw,
}

impl From<UnitArg> for ContextUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Annotated => ContextUnit::Annotated,
            UnitArg::Raw => ContextUnit::Raw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum PredictorSpec {
    Oracle,
    Random(u64),
    External(Endpoint),
}

impl FromStr for PredictorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "oracle" {
            return Ok(PredictorSpec::Oracle);
        }
        if let Some(seed) = s.strip_prefix("random:") {
            return seed
                .parse()
                .map(PredictorSpec::Random)
                .map_err(|e| format!("bad seed {seed:?}: {e}"));
        }
        s.parse()
            .map(PredictorSpec::External)
            .map_err(|e| format!("{e}; expected oracle, random:SEED, tcp:HOST:PORT or stdio:COMMAND"))
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Gold or raw corpus (.conll or docjson).
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "entity-centric")]
    mode: ModeArg,
    /// Target chunk size in tokens.
    #[arg(long, default_value_t = 100)]
    chunk: usize,
    /// Context window size (entity-centric only) [default: 100].
    #[arg(long)]
    context: Option<usize>,
    #[arg(long, value_enum, default_value = "annotated")]
    context_unit: UnitArg,
    #[arg(long, value_enum, default_value = "recency")]
    ordering: OrderArg,
    #[arg(long, default_value_t = 4)]
    max_nesting: usize,
    /// oracle, random:SEED, tcp:HOST:PORT or stdio:COMMAND.
    #[arg(long, default_value = "oracle")]
    predictor: PredictorSpec,
    /// Per-request timeout for external predictors.
    #[arg(long, default_value_t = 30_000)]
    timeout_ms: u64,
    /// Open a mention at the start of every named entity of these types.
    #[arg(long)]
    force_ner_starts: bool,
    #[arg(long, value_delimiter = ',', default_value = "GPE,PERSON,ORG")]
    ner_categories: Vec<String>,
    /// Documents processed in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    gold: PathBuf,
    pred: PathBuf,
    /// Add a mention detection line.
    #[arg(long)]
    mentions: bool,
    /// Print fractions with four decimals instead of percentages.
    #[arg(long)]
    fractions: bool,
}

#[derive(Debug, Subcommand)]
enum Analysis {
    /// Missed mentions of one system relative to another, as CSV.
    Breakdown {
        #[arg(long)]
        gold: PathBuf,
        /// Predictions whose correct mentions form the reference set.
        #[arg(long)]
        baseline: PathBuf,
        /// Predictions checked for misses.
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scores after restoring gold links step by step, as CSV.
    Restore {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "ne-exact,ne-partial,def-exact,def-partial", value_parser = parse_step)]
        steps: Vec<RestoreStep>,
        /// Write the fully restored predictions here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Link NER spans to predictions by exact string match.
    NerAugment {
        #[arg(long)]
        pred: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "GPE,ORG,PERSON,LAW,FAC,LANGUAGE,EVENT,PRODUCT,LOC,DATE,WORK_OF_ART"
        )]
        categories: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add externally detected spans as singleton clusters.
    Pseudosingletons {
        #[arg(long)]
        corpus: PathBuf,
        /// JSON lines of {"doc_id": ..., "spans": [[start, end], ...]}.
        #[arg(long)]
        spans: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_step(s: &str) -> Result<RestoreStep, String> {
    s.parse()
        .map_err(|e: increco_core::analysis::AnalysisError| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("INCRECO_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<commands::UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::time::Duration;

use anyhow::{anyhow, Context, Result};
use increco_core::analysis::{
    add_pseudosingletons, compression_ratio, missed_mention_breakdown, ner_exact_match_augment, ner_forced_starts,
    restore_gold_links, DocRunLog, RestoreStep,
};
use increco_core::corpus::{make_folds, Document, SingletonSpans};
use increco_core::decode::{
    run_incremental, DecodeHook, ExternalConfig, ExternalFactory, OracleFactory, PredictorFactory, RandomFactory,
    RunOutput,
};
use increco_core::metrics::{fixed, percent, score_corpus, Counts, Scores};
use increco_core::state::{Mode, PipelineConfig};
use increco_core::synth::{synthetic_corpus, SynthConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::files::{output, read_corpus, read_jsonl, write_corpus, write_jsonl, write_text};
use crate::{Analysis, Command, PredictorSpec, RunArgs, ScoreArgs, SynthArgs};

/// Invalid flag values that clap cannot catch; exit status 1.
#[derive(Debug)]
pub struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Convert { input, output } => write_corpus(&output, &read_corpus(&input)?),
        Command::Synth(args) => synth(args),
        Command::Folds { input, k, seed } => folds(&input, k, seed),
        Command::Run(args) => run(args),
        Command::Score(args) => score(args),
        Command::Analyze(a) => analyze(a),
        Command::CompressStats {
            full_prefix,
            entity_centric,
            out,
        } => {
            let report = compression_ratio(&read_jsonl(&full_prefix)?, &read_jsonl(&entity_centric)?)?;
            report.write_csv(output(out.as_deref())?)?;
            Ok(())
        }
    }
}

fn synth(args: SynthArgs) -> Result<()> {
    if args.min_tokens > args.max_tokens || args.docs == 0 {
        return Err(usage("need --docs > 0 and --min-tokens <= --max-tokens"));
    }
    let docs = synthetic_corpus(&SynthConfig {
        docs: args.docs,
        min_tokens: args.min_tokens,
        max_tokens: args.max_tokens,
        seed: args.seed,
        ..SynthConfig::default()
    });
    write_corpus(&args.out, &docs)
}

#[derive(Serialize)]
struct FoldIds<'a> {
    fold: usize,
    train: Vec<&'a str>,
    dev: Vec<&'a str>,
    test: Vec<&'a str>,
}

fn folds(input: &std::path::Path, k: usize, seed: u64) -> Result<()> {
    let docs = read_corpus(input)?;
    let ids = |idx: &[usize]| idx.iter().map(|&i| docs[i].doc_id()).collect::<Vec<_>>();
    let folds = make_folds(docs.len(), k, seed)?;
    let out: Vec<FoldIds> = folds
        .iter()
        .enumerate()
        .map(|(fold, f)| FoldIds {
            fold,
            train: ids(&f.train),
            dev: ids(&f.dev),
            test: ids(&f.test),
        })
        .collect();
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn factory(args: &RunArgs) -> Box<dyn PredictorFactory> {
    match &args.predictor {
        PredictorSpec::Oracle => Box::new(OracleFactory),
        PredictorSpec::Random(seed) => Box::new(RandomFactory { seed: *seed }),
        PredictorSpec::External(endpoint) => Box::new(ExternalFactory {
            config: ExternalConfig {
                endpoint: endpoint.clone(),
                timeout: Duration::from_millis(args.timeout_ms),
            },
        }),
    }
}

fn run_document(
    doc: &Document,
    config: &PipelineConfig,
    factory: &dyn PredictorFactory,
    ner: Option<&[&str]>,
) -> Result<RunOutput> {
    let mut predictor = factory.session(doc)?;
    let hook = ner.map(|cats| ner_forced_starts(doc, cats)).transpose()?;
    let hooks: Vec<&dyn DecodeHook> = hook.iter().map(|h| h as &dyn DecodeHook).collect();
    Ok(run_incremental(doc, config, predictor.as_mut(), &hooks)?)
}

fn run(args: RunArgs) -> Result<()> {
    let mode: Mode = args.mode.into();
    if mode == Mode::FullPrefix && args.context.is_some() {
        log::warn!("--context has no effect in full-prefix mode");
    }
    if args.chunk == 0 || args.jobs == 0 {
        return Err(usage("--chunk and --jobs must be positive"));
    }
    let config = PipelineConfig {
        mode,
        chunk_budget: args.chunk,
        context_budget: args.context.unwrap_or(100),
        ordering: args.ordering.into(),
        context_unit: args.context_unit.into(),
        max_nesting: args.max_nesting,
    };
    let docs = read_corpus(&args.input)?;
    let factory = factory(&args);
    let categories: Vec<&str> = args.ner_categories.iter().map(String::as_str).collect();
    let ner = args.force_ner_starts.then_some(categories.as_slice());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build()?;
    let outputs: Vec<RunOutput> = pool.install(|| {
        docs.par_iter()
            .map(|doc| {
                run_document(doc, &config, factory.as_ref(), ner).with_context(|| format!("document {}", doc.doc_id()))
            })
            .collect::<Result<_>>()
    })?;

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let predictions: Vec<Document> = outputs.iter().map(|o| o.prediction.clone()).collect();
    write_corpus(&args.out.join("predictions.jsonl"), &predictions)?;
    let mut annotated = String::new();
    for (doc, out) in docs.iter().zip(&outputs) {
        annotated.push_str(&format!("# {}\n", doc.doc_id()));
        for chunk in &out.annotated {
            annotated.push_str(&chunk.render(doc));
            annotated.push('\n');
        }
    }
    write_text(&args.out.join("annotated.txt"), &annotated)?;
    let logs: Vec<DocRunLog> = docs
        .iter()
        .zip(&outputs)
        .map(|(doc, out)| DocRunLog {
            doc_id: doc.doc_id().to_string(),
            mode,
            chunks: out.chunks.clone(),
        })
        .collect();
    write_jsonl(&args.out.join("runlog.jsonl"), &logs)?;
    if mode == Mode::EntityCentric {
        let states: Vec<_> = docs
            .iter()
            .zip(&outputs)
            .filter_map(|(doc, out)| out.state.as_ref().map(|s| s.snapshot(doc)))
            .collect();
        write_jsonl(&args.out.join("states.jsonl"), &states)?;
    }
    log::info!("annotated {} documents into {}", docs.len(), args.out.display());
    Ok(())
}

fn score(args: ScoreArgs) -> Result<()> {
    let gold = read_corpus(&args.gold)?;
    let pred = read_corpus(&args.pred)?;
    let scores = score_corpus(&gold, &pred)?;
    if !args.fractions {
        print!("{}", scores.report(args.mentions));
        return Ok(());
    }
    let mut rows: Vec<(&str, &Counts)> = vec![("MUC", &scores.muc), ("B3", &scores.b_cubed), ("CEAFe", &scores.ceaf_e)];
    if args.mentions {
        rows.insert(0, ("MENTIONS", &scores.mentions));
    }
    for (name, counts) in rows {
        let prf = counts.prf();
        println!(
            "{name} {} {} {}",
            fixed(&prf.precision, 4),
            fixed(&prf.recall, 4),
            fixed(&prf.f1, 4)
        );
    }
    println!("CONLL {}", fixed(&scores.conll(), 4));
    Ok(())
}

fn by_id(docs: &[Document]) -> HashMap<&str, &Document> {
    docs.iter().map(|d| (d.doc_id(), d)).collect()
}

fn restore(gold: &[Document], pred: &[Document], steps: &[RestoreStep]) -> Result<Vec<Document>> {
    let gold_by_id = by_id(gold);
    pred.iter()
        .map(|p| {
            let g = gold_by_id
                .get(p.doc_id())
                .ok_or_else(|| anyhow!("document {} has no gold annotation", p.doc_id()))?;
            Ok(restore_gold_links(p, g, steps)?)
        })
        .collect()
}

fn analyze(analysis: Analysis) -> Result<()> {
    match analysis {
        Analysis::Breakdown {
            gold,
            baseline,
            system,
            out,
        } => {
            let table =
                missed_mention_breakdown(&read_corpus(&gold)?, &read_corpus(&baseline)?, &read_corpus(&system)?)?;
            table.write_csv(output(out.as_deref())?)?;
        }
        Analysis::Restore { gold, pred, steps, out } => {
            let gold = read_corpus(&gold)?;
            let pred = read_corpus(&pred)?;
            let mut w = output(None)?;
            writeln!(w, "step,muc,b3,ceafe,conll")?;
            let mut restored = Vec::new();
            for n in 0..=steps.len() {
                restored = restore(&gold, &pred, &steps[..n])?;
                let s: Scores = score_corpus(&gold, &restored)?;
                let label = if n == 0 {
                    "baseline".to_string()
                } else {
                    format!("+{}", steps[n - 1])
                };
                writeln!(
                    w,
                    "{label},{},{},{},{}",
                    percent(&s.muc.prf().f1),
                    percent(&s.b_cubed.prf().f1),
                    percent(&s.ceaf_e.prf().f1),
                    percent(&s.conll())
                )?;
            }
            if let Some(path) = out {
                write_corpus(&path, &restored)?;
            }
        }
        Analysis::NerAugment { pred, categories, out } => {
            let cats: Vec<&str> = categories.iter().map(String::as_str).collect();
            let docs = read_corpus(&pred)?;
            let augmented = docs
                .iter()
                .map(|d| ner_exact_match_augment(d, &cats))
                .collect::<Result<Vec<_>, _>>()?;
            let added: usize = augmented.iter().map(|d| d.mentions().len()).sum::<usize>()
                - docs.iter().map(|d| d.mentions().len()).sum::<usize>();
            write_corpus(&out, &augmented)?;
            println!("added {added} mentions");
        }
        Analysis::Pseudosingletons { corpus, spans, out } => {
            let sidecar: Vec<SingletonSpans> = read_jsonl(&spans)?;
            let (docs, report) = add_pseudosingletons(&read_corpus(&corpus)?, &sidecar)?;
            write_corpus(&out, &docs)?;
            println!("accepted {}", report.accepted);
            println!("rejected {}", report.rejected.len());
            for (doc_id, (start, end), reason) in &report.rejected {
                println!("{doc_id}\t{start}\t{end}\t{reason:?}");
            }
        }
    }
    Ok(())
}

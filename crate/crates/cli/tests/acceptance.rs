//! End-to-end acceptance checks. Prints one PASS/FAIL line per check and
//! exits nonzero if any fails. Set INCRECO_GOLD to a gold corpus (.conll or
//! docjson) to include it in the oracle check.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use increco_core::analysis::{
    categorize_mention, missed_mention_breakdown, restore_gold_links, BreakdownRow, Category, Relation, RestoreStep,
};
use increco_core::annotation::{check_nesting, linearize_chunk, parse_annotated, scan};
use increco_core::corpus::{
    read_conll, read_conll_str, read_docjson, read_docjson_str, write_conll_string, write_docjson_string, Document,
    Mention,
};
use increco_core::decode::{decode_chunk, Action, ChooseRequest, ChunkTask, DecoderState, Predictor, PredictorError};
use increco_core::metrics::{assignment_max, b_cubed, ceaf_e, muc, phi4_matrix, score_corpus, Clustering};
use increco_core::synth::mention_density;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;
type Labels = BTreeMap<(usize, usize), (BreakdownRow, Relation)>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
}

fn increco(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_increco"))
        .args(args)
        .env("INCRECO_LOG", "error")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

// ---------------------------------------------------------------------------

fn oracle_grid(input: &Path, work: &Path) -> Result<usize, String> {
    let mut runs = 0;
    for mode in ["full-prefix", "entity-centric"] {
        for context in ["0", "50", "100", "200"] {
            for ordering in ["recency", "document"] {
                let out = work.join(format!("{mode}-{context}-{ordering}"));
                increco(&[
                    "run",
                    s(input),
                    "--out",
                    s(&out),
                    "--mode",
                    mode,
                    "--context",
                    context,
                    "--ordering",
                    ordering,
                ])?;
                let report = increco(&["score", s(input), s(&out.join("predictions.jsonl"))])?;
                let lines: Vec<&str> = report.lines().collect();
                ensure!(lines.len() == 4, "unexpected report {report:?}");
                for line in lines {
                    ensure!(line.ends_with(" 100.00"), "{mode} context {context} {ordering}: {line}");
                }
                runs += 1;
            }
        }
    }
    Ok(runs)
}

fn oracle_end_to_end() -> Outcome {
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let started = Instant::now();
    let runs = oracle_grid(&data("synthetic.jsonl"), work.path())?;
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "bundled grid took {elapsed:?}");
    let mut detail = format!("{runs} configurations at 100.00 in {:.2}s", elapsed.as_secs_f64());
    oracle_grid(&data("synthetic.conll"), &work.path().join("conll"))?;
    detail.push_str("; CoNLL copy also 100.00");
    if let Ok(user) = std::env::var("INCRECO_GOLD") {
        oracle_grid(Path::new(&user), &work.path().join("user"))?;
        detail.push_str(&format!("; {user} also 100.00"));
    }
    Ok(detail)
}

// ---------------------------------------------------------------------------

fn metric_fixtures() -> Outcome {
    // gold {a,b,c}; pred {a,b},{c}. By hand:
    //   MUC   R = (3-2)/(3-1) = 1/2, P = 1 -> F = 2/3
    //   B3    R = (2/3+2/3+1/3)/3 = 5/9, P = 1 -> F = 5/7
    //   CEAFe phi({abc},{ab}) = 4/5 beats 2/4; R = 4/5, P = 2/5 -> F = 8/15
    let (a, b, c) = ((0, 1), (2, 3), (4, 5));
    let gold = Clustering::new(vec![vec![a, b, c]]).map_err(|e| e.to_string())?;
    let pred = Clustering::new(vec![vec![a, b], vec![c]]).map_err(|e| e.to_string())?;
    let expected = [
        ("MUC", muc(&gold, &pred), q(1, 1), q(1, 2), q(2, 3)),
        ("B3", b_cubed(&gold, &pred), q(1, 1), q(5, 9), q(5, 7)),
        ("CEAFe", ceaf_e(&gold, &pred), q(2, 5), q(4, 5), q(8, 15)),
    ];
    for (name, got, p, r, f) in expected {
        ensure!(
            got.precision == p && got.recall == r && got.f1 == f,
            "{name}: got P={} R={} F={}",
            got.precision,
            got.recall,
            got.f1
        );
    }
    Ok("MUC 2/3, B3 5/7, CEAFe 8/15".into())
}

// ---------------------------------------------------------------------------

fn random_clustering(rng: &mut ChaCha8Rng) -> Clustering {
    let k = rng.gen_range(0..=6);
    let mut groups = vec![Vec::new(); k];
    if k > 0 {
        for pos in 0..14 {
            if rng.gen_bool(0.7) {
                groups[rng.gen_range(0..k)].push((pos, pos + 1));
            }
        }
    }
    Clustering::new(groups).expect("unit spans never overlap")
}

fn phi4(k: &[(usize, usize)], r: &[(usize, usize)]) -> BigRational {
    let shared = k.iter().filter(|s| r.contains(s)).count();
    q(2 * shared as i64, (k.len() + r.len()) as i64)
}

fn best_by_permutation(m: &[Vec<BigRational>], row: usize, used: &mut Vec<bool>) -> BigRational {
    if row == m.len() {
        return q(0, 1);
    }
    // a row may also stay unmatched when there are more rows than columns
    let mut best = if m.len() > used.len() {
        best_by_permutation(m, row + 1, used)
    } else {
        q(-1, 1)
    };
    for c in 0..used.len() {
        if !used[c] {
            used[c] = true;
            let total = &m[row][c] + best_by_permutation(m, row + 1, used);
            used[c] = false;
            if total > best {
                best = total;
            }
        }
    }
    if best < q(0, 1) {
        q(0, 1)
    } else {
        best
    }
}

fn ceaf_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..500 {
        let (g, p) = (random_clustering(&mut rng), random_clustering(&mut rng));
        let m = phi4_matrix(&g, &p);
        for (i, k) in g.clusters().iter().enumerate() {
            for (j, r) in p.clusters().iter().enumerate() {
                ensure!(m[i][j] == phi4(k, r), "trial {trial}: similarity ({i},{j})");
            }
        }
        let cols = p.clusters().len();
        let brute = if g.clusters().is_empty() || cols == 0 {
            q(0, 1)
        } else {
            best_by_permutation(&m, 0, &mut vec![false; cols])
        };
        let got = assignment_max(&m).total;
        ensure!(got == brute, "trial {trial}: assignment {got} vs brute force {brute}");
    }
    Ok("500 pairs match brute force".into())
}

// ---------------------------------------------------------------------------

/// Uniform over the mask, but every so often proposes an arbitrary action
/// (never twice at the same step).
struct Adversary {
    rng: ChaCha8Rng,
    refused_at: Option<usize>,
    dead_ends: usize,
}

impl Predictor for Adversary {
    fn choose(&mut self, request: &ChooseRequest<'_>) -> Result<Action, PredictorError> {
        if request.allowed.is_empty() {
            self.dead_ends += 1;
            return Err(PredictorError::Protocol("empty mask".into()));
        }
        if self.refused_at != Some(request.step) && self.rng.gen_bool(0.3) {
            let id = self.rng.gen_range(0..=request.state.next_id() + 2);
            let wild = *[Action::Copy, Action::Open, Action::Close(id)]
                .choose(&mut self.rng)
                .unwrap();
            if !request.allowed.contains(&wild) {
                self.refused_at = Some(request.step);
            }
            return Ok(wild);
        }
        Ok(*request.allowed.choose(&mut self.rng).unwrap())
    }
}

fn depth_ok(mentions: &[Mention], max: usize) -> bool {
    mentions
        .iter()
        .all(|m| mentions.iter().filter(|o| o.start <= m.start && m.end <= o.end).count() <= max)
}

fn explore(state: &DecoderState, leaves: &mut u64) -> Result<(), String> {
    if state.is_done() {
        let seq = state.clone().into_sequence();
        parse_annotated(&seq.items).map_err(|e| format!("leaf does not parse: {e}"))?;
        *leaves += 1;
        return Ok(());
    }
    let allowed = state.allowed_actions().map_err(|e| e.to_string())?;
    ensure!(!allowed.is_empty(), "dead end after {:?}", state.emitted());
    for a in allowed {
        explore(&state.step(a).map_err(|e| e.to_string())?, leaves)?;
    }
    Ok(())
}

fn grammar_safety() -> Outcome {
    let doc =
        Document::new("fuzz", vec!["w".to_string(); 40], vec![(0, 40)], None, None, None).map_err(|e| e.to_string())?;
    let input = Default::default();
    let mut refusals = 0;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = rng.gen_range(1..=30);
        let offset = rng.gen_range(0..=40 - len);
        let max_nesting = rng.gen_range(1..=4);
        let next_id = rng.gen_range(0..=5);
        let mut adversary = Adversary {
            rng,
            refused_at: None,
            dead_ends: 0,
        };
        let task = ChunkTask {
            doc: &doc,
            chunk_index: 0,
            input: &input,
            target: offset..offset + len,
            next_id,
            max_nesting,
        };
        let out = decode_chunk(&mut adversary, &task, &[]);
        ensure!(adversary.dead_ends == 0, "seed {seed}: dead end");
        let out = out.map_err(|e| format!("seed {seed}: {e}"))?;
        refusals += usize::from(adversary.refused_at.is_some());
        let mentions = parse_annotated(&out.annotated.items).map_err(|e| format!("seed {seed}: unparsable: {e}"))?;
        check_nesting(&mentions).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure!(out.annotated.token_count() == len, "seed {seed}: token count");
        ensure!(
            depth_ok(&mentions, max_nesting),
            "seed {seed}: nesting over {max_nesting}"
        );
        let spans: HashSet<(usize, usize)> = mentions.iter().map(|m| m.span()).collect();
        ensure!(spans.len() == mentions.len(), "seed {seed}: duplicate span");
        ensure!(
            mentions
                .iter()
                .all(|m| m.cluster_id <= out.next_id && m.start >= offset && m.end <= offset + len),
            "seed {seed}: mention out of range"
        );
    }
    let mut leaves = 0;
    for len in 1..=6 {
        for nesting in 1..=2 {
            for next_id in [0, 1] {
                explore(&DecoderState::new(0..len, next_id, nesting), &mut leaves)?;
            }
        }
    }
    Ok(format!(
        "1000 decodes clean ({refusals} with refused actions); {leaves} exhaustive outputs, no dead ends"
    ))
}

// ---------------------------------------------------------------------------

fn random_mentions(rng: &mut ChaCha8Rng, offset: usize, len: usize) -> Vec<Mention> {
    let mut kept: Vec<Mention> = Vec::new();
    for _ in 0..rng.gen_range(0..12) {
        let s = rng.gen_range(offset..offset + len);
        let e = rng.gen_range(s + 1..=offset + len);
        let crosses = |k: &Mention| {
            (k.start, k.end) == (s, e)
                || (k.start < s && s < k.end && k.end < e)
                || (s < k.start && k.start < e && e < k.end)
        };
        if !kept.iter().any(crosses) {
            kept.push(Mention::new(s, e, rng.gen_range(0..8)));
        }
    }
    kept
}

fn round_trips() -> Outcome {
    // exact marker spellings are ambiguous once rendered, lookalikes are not
    let words = ["the", "|", "12", "</m>x", "a|b", "<e", "x"];
    let tokens: Vec<String> = (0..80).map(|i| words[i % words.len()].to_string()).collect();
    let doc = Document::new("rt", tokens, vec![(0, 80)], None, None, None).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for pair in 0..10_000 {
        let len = rng.gen_range(1..=30);
        let offset = rng.gen_range(0..=80 - len);
        let mut mentions = random_mentions(&mut rng, offset, len);
        let seq = linearize_chunk(offset..offset + len, &mentions).map_err(|e| format!("pair {pair}: {e}"))?;
        let mut back = parse_annotated(&seq.items).map_err(|e| format!("pair {pair}: {e}"))?;
        mentions.sort();
        back.sort();
        ensure!(back == mentions, "pair {pair}: parse(linearize) differs");
        let rescanned = scan(&seq.render(&doc), &doc, offset).map_err(|e| format!("pair {pair}: {e}"))?;
        ensure!(rescanned.items == seq.items, "pair {pair}: scan(render) differs");
    }

    let mut files = 0;
    for (name, docs) in [
        ("synthetic.jsonl", read_docjson(data("synthetic.jsonl"))),
        ("synthetic.conll", read_conll(data("synthetic.conll"))),
    ] {
        let docs = docs.map_err(|e| format!("{name}: {e}"))?;
        let via_conll = read_conll_str(&write_conll_string(&docs)).map_err(|e| format!("{name}: {e}"))?;
        let via_json = read_docjson_str(&write_docjson_string(&via_conll)).map_err(|e| format!("{name}: {e}"))?;
        for (a, b) in docs.iter().zip(&via_json) {
            ensure!(
                sorted_clusters(a) == sorted_clusters(b) && a.tokens() == b.tokens(),
                "{name}: {} changed in conversion",
                a.doc_id()
            );
        }
        ensure!(docs.len() == via_json.len(), "{name}: document count changed");
        files += 1;
    }
    Ok(format!(
        "10000 chunk round trips; {files} bundled files keep their clusters"
    ))
}

fn sorted_clusters(doc: &Document) -> Vec<Vec<(usize, usize)>> {
    let mut c = Clustering::from_document(doc).clusters().to_vec();
    c.iter_mut().for_each(|x| x.sort_unstable());
    c.sort();
    c
}

// ---------------------------------------------------------------------------

fn compression() -> Outcome {
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = data("synthetic.jsonl");
    let (fp, ec) = (work.path().join("fp"), work.path().join("ec"));
    increco(&["run", s(&input), "--out", s(&fp), "--mode", "full-prefix"])?;
    increco(&["run", s(&input), "--out", s(&ec), "--context", "100"])?;

    let docs = read_docjson(&input).map_err(|e| e.to_string())?;
    let density = mention_density(&docs);
    ensure!((0.15..=0.3).contains(&density), "mention density {density:.3} is off");
    let log = fs::read_to_string(ec.join("runlog.jsonl")).map_err(|e| e.to_string())?;
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let chunks = v["chunks"].as_array().map_or(0, Vec::len);
        ensure!(chunks >= 4, "{} has {chunks} chunks", v["doc_id"]);
    }

    let csv = increco(&[
        "compress-stats",
        "--full-prefix",
        s(&fp.join("runlog.jsonl")),
        "--entity-centric",
        s(&ec.join("runlog.jsonl")),
    ])?;
    let mean: f64 = csv
        .lines()
        .last()
        .and_then(|l| l.strip_prefix("MEAN,,,"))
        .and_then(|v| v.parse().ok())
        .ok_or("no MEAN row")?;
    ensure!((1.3..=2.5).contains(&mean), "CR {mean:.4} outside [1.3, 2.5]");
    Ok(format!("CR {mean:.4} at context 100 (density {density:.3})"))
}

// ---------------------------------------------------------------------------

fn in_steps(category: Category, relation: Relation) -> bool {
    matches!(category, Category::NamedEntity | Category::DefiniteNp)
        && matches!(relation, Relation::ExactMatch | Relation::PartialMatch)
}

fn restore_recovery() -> Outcome {
    let gold = read_docjson(data("synthetic.jsonl")).map_err(|e| e.to_string())?;
    let mut removed: BTreeMap<(Category, Relation), usize> = BTreeMap::new();
    let mut preds = Vec::new();
    for g in &gold {
        let mut kept = Vec::new();
        for cluster in Clustering::from_document(g).clusters() {
            let mut sorted = cluster.clone();
            sorted.sort_unstable();
            let mut keep = vec![sorted[0]];
            for w in sorted.windows(2) {
                let (prev, span) = (w[0], w[1]);
                let same = g
                    .token_slice(span.0, span.1)
                    .iter()
                    .map(|t| t.to_lowercase())
                    .collect::<Vec<_>>();
                let ante = g
                    .token_slice(prev.0, prev.1)
                    .iter()
                    .map(|t| t.to_lowercase())
                    .collect::<Vec<_>>();
                let relation = if same == ante {
                    Relation::ExactMatch
                } else if same.windows(ante.len()).any(|x| x == ante.as_slice())
                    || ante.windows(same.len()).any(|x| x == same.as_slice())
                {
                    Relation::PartialMatch
                } else {
                    Relation::NoOverlap
                };
                let category = categorize_mention(g, span).map_err(|e| e.to_string())?;
                if in_steps(category, relation) {
                    *removed.entry((category, relation)).or_default() += 1;
                } else {
                    keep.push(span);
                }
            }
            kept.push(keep);
        }
        preds.push(g.with_clusters(kept).map_err(|e| e.to_string())?);
    }
    ensure!(removed.len() == 4, "construction only exercises {:?}", removed.keys());
    let before = score_corpus(&gold, &preds).map_err(|e| e.to_string())?.conll();
    ensure!(before < q(1, 1), "construction removed nothing that matters");
    let restored: Vec<Document> = preds
        .iter()
        .zip(&gold)
        .map(|(p, g)| restore_gold_links(p, g, &RestoreStep::ALL))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let after = score_corpus(&gold, &restored).map_err(|e| e.to_string())?;
    let report = after.report(false).to_string();
    ensure!(
        report.lines().all(|l| l.ends_with(" 100.00")),
        "after restore:\n{report}"
    );
    let total: usize = removed.values().sum();
    Ok(format!(
        "{total} removed mentions restored; CoNLL {:.2} -> 100.00",
        increco_core::metrics::to_f64(&before) * 100.0
    ))
}

// ---------------------------------------------------------------------------

/// Document assembled from (words, tags) pieces with expected labels.
#[derive(Default)]
struct Builder {
    tokens: Vec<String>,
    tags: Vec<String>,
    clusters: Vec<Vec<(usize, usize)>>,
    labels: Labels,
}

impl Builder {
    fn piece(&mut self, words: &str, tags: &str) -> (usize, usize) {
        let start = self.tokens.len();
        self.tokens.extend(words.split(' ').map(str::to_string));
        self.tags.extend(tags.split(' ').map(str::to_string));
        assert_eq!(self.tokens.len(), self.tags.len(), "{words}");
        (start, self.tokens.len())
    }

    /// An antecedent followed by a mention labelled `(category, relation)`.
    fn pair(&mut self, antecedent: (&str, &str), mention: (&str, &str), category: Category, relation: Relation) {
        let a = self.piece(antecedent.0, antecedent.1);
        self.piece("and", "CC");
        let m = self.piece(mention.0, mention.1);
        self.piece(".", ".");
        self.labels
            .insert(a, (BreakdownRow::FirstMention, Relation::FirstMention));
        self.labels.insert(m, (BreakdownRow::Category(category), relation));
        self.clusters.push(vec![a, m]);
    }

    fn build(self, id: &str) -> Result<(Document, Labels), String> {
        let n = self.tokens.len();
        let doc = Document::new(
            id,
            self.tokens,
            vec![(0, n)],
            Some(self.tags),
            None,
            Some(self.clusters),
        )
        .map_err(|e| e.to_string())?;
        Ok((doc, self.labels))
    }
}

fn taxonomy_doc(id: &str) -> Result<(Document, Labels), String> {
    use Category::*;
    use Relation::*;
    let mut b = Builder::default();
    b.pair(
        ("John Smith", "NNP NNP"),
        ("John Smith", "NNP NNP"),
        NamedEntity,
        ExactMatch,
    );
    b.pair(("Mary Jones", "NNP NNP"), ("Jones", "NNP"), NamedEntity, PartialMatch);
    b.pair(("the chairman", "DT NN"), ("Acme", "NNP"), NamedEntity, NoOverlap);
    b.pair(("he", "PRP"), ("He", "PRP"), Pronoun, ExactMatch);
    b.pair(("she herself", "PRP PRP"), ("she", "PRP"), Pronoun, PartialMatch);
    b.pair(("Bob", "NNP"), ("him", "PRP"), Pronoun, NoOverlap);
    b.pair(("the dog", "DT NN"), ("the dog", "DT NN"), DefiniteNp, ExactMatch);
    b.pair(
        ("the cat", "DT NN"),
        ("the cat of Ann", "DT NN IN NNP"),
        DefiniteNp,
        PartialMatch,
    );
    b.pair(("a town", "DT NN"), ("this place", "DT NN"), DefiniteNp, NoOverlap);
    b.pair(("a lake", "DT NN"), ("a lake", "DT NN"), IndefiniteNp, ExactMatch);
    b.pair(("boats", "NNS"), ("some boats", "DT NNS"), IndefiniteNp, PartialMatch);
    b.pair(("it", "PRP"), ("a problem", "DT NN"), IndefiniteNp, NoOverlap);
    b.build(id)
}

fn taxonomy_partition() -> Outcome {
    let mut gold = Vec::new();
    let mut baseline = Vec::new();
    let mut system = Vec::new();
    let mut expected: BTreeMap<(BreakdownRow, Relation), usize> = BTreeMap::new();
    let mut missed = 0;
    for (d, (b_skip, s_keep)) in [(3usize, 4usize), (5, 2), (7, 2)].into_iter().enumerate() {
        let (doc, labels) = taxonomy_doc(&format!("tax{d}"))?;
        let spans: Vec<(usize, usize)> = labels.keys().copied().collect();
        // the baseline misses every b_skip-th span; the system keeps every s_keep-th
        let base: Vec<(usize, usize)> = spans
            .iter()
            .enumerate()
            .filter(|(i, _)| i % b_skip != 0)
            .map(|x| *x.1)
            .collect();
        let sys: Vec<(usize, usize)> = spans
            .iter()
            .enumerate()
            .filter(|(i, _)| i % s_keep == 0)
            .map(|x| *x.1)
            .collect();
        for span in &base {
            if !sys.contains(span) {
                *expected.entry(labels[span]).or_default() += 1;
                missed += 1;
            }
        }
        let singletons = |v: &[(usize, usize)]| v.iter().map(|&sp| vec![sp]).collect::<Vec<_>>();
        baseline.push(doc.with_clusters(singletons(&base)).map_err(|e| e.to_string())?);
        system.push(doc.with_clusters(singletons(&sys)).map_err(|e| e.to_string())?);
        gold.push(doc);
    }
    ensure!(expected.len() == 13, "construction leaves cells empty: {expected:?}");
    let table = missed_mention_breakdown(&gold, &baseline, &system).map_err(|e| e.to_string())?;
    let row_sum: usize = table.rows().iter().map(|r| r.2).sum();
    ensure!(
        row_sum == missed && table.total == missed,
        "rows sum to {row_sum}, missed {missed}"
    );
    for (row, relation, count) in table.rows() {
        let want = expected.get(&(row, relation)).copied().unwrap_or(0);
        ensure!(count == want, "{row} {relation}: {count} vs {want}");
        ensure!(count > 0, "{row} {relation} is empty");
    }
    Ok(format!("13 cells populated, rows sum to |missed| = {missed}"))
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let checks: [(&str, Check); 8] = [
        ("oracle end-to-end", oracle_end_to_end),
        ("metric fixtures", metric_fixtures),
        ("CEAFe optimality", ceaf_optimality),
        ("grammar safety", grammar_safety),
        ("round trips", round_trips),
        ("compression ratio", compression),
        ("gold link restoration", restore_recovery),
        ("error taxonomy partition", taxonomy_partition),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in checks {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Document model, ingestion and sentence-aware chunking.
//!
//! Token indices always refer to word tokens (CoNLL words or whitespace
//! tokens of the native format). Spans are half-open `[start, end)`.

mod conll;
mod docjson;

use std::collections::{BTreeMap, HashSet};
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use conll::{read_conll, read_conll_str, write_conll, write_conll_string};
pub use docjson::{read_docjson, read_docjson_str, write_docjson, write_docjson_string, SingletonSpans};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("document {doc_id}: unbalanced coreference bracket for cluster {cluster}")]
    UnbalancedBracket { doc_id: String, cluster: String },
    #[error("document {doc_id}: {message}")]
    Invalid { doc_id: String, message: String },
    #[error("invalid fold request: {0}")]
    Folds(String),
}

impl CorpusError {
    fn invalid(doc_id: &str, message: impl Into<String>) -> Self {
        CorpusError::Invalid {
            doc_id: doc_id.to_string(),
            message: message.into(),
        }
    }
}

/// A mention span together with the cluster it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mention {
    pub start: usize,
    pub end: usize,
    pub cluster_id: u32,
}

impl Mention {
    pub fn new(start: usize, end: usize, cluster_id: u32) -> Self {
        Mention { start, end, cluster_id }
    }

    pub fn span(&self) -> (usize, usize) {
        (self.start, self.end)
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub cluster_id: u32,
    pub mentions: Vec<Mention>,
}

impl Cluster {
    pub fn spans(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.mentions.iter().map(Mention::span)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NerSpan {
    pub start: usize,
    pub end: usize,
    pub category: String,
}

/// Sentence-aligned slice of a document. Both ranges are half-open except
/// `sentences`, which names the first and last sentence inclusively.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chunk {
    pub index: usize,
    pub first_sentence: usize,
    pub last_sentence: usize,
    pub start: usize,
    pub end: usize,
}

impl Chunk {
    pub fn token_range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// A tokenized document with optional annotation layers.
///
/// Construct through [`Document::new`], which validates every layer and
/// normalizes gold clusters: mentions sorted by span, clusters ordered by
/// first mention and renumbered densely from 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    doc_id: String,
    tokens: Vec<String>,
    sentences: Vec<(usize, usize)>,
    pos: Option<Vec<String>>,
    ner: Option<Vec<NerSpan>>,
    clusters: Option<Vec<Cluster>>,
}

impl Document {
    /// `clusters` holds raw span groups; the group index is not kept.
    pub fn new(
        doc_id: impl Into<String>,
        tokens: Vec<String>,
        sentences: Vec<(usize, usize)>,
        pos: Option<Vec<String>>,
        ner: Option<Vec<NerSpan>>,
        clusters: Option<Vec<Vec<(usize, usize)>>>,
    ) -> Result<Self, CorpusError> {
        let doc_id = doc_id.into();
        let n = tokens.len();
        if n == 0 {
            return Err(CorpusError::invalid(&doc_id, "document has no tokens"));
        }
        if let Some(i) = tokens
            .iter()
            .position(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(CorpusError::invalid(
                &doc_id,
                format!("token {i} is empty or contains whitespace"),
            ));
        }
        let mut expected = 0;
        for (i, &(s, e)) in sentences.iter().enumerate() {
            if s != expected || e <= s {
                return Err(CorpusError::invalid(
                    &doc_id,
                    format!("sentence {i} [{s},{e}) does not continue at token {expected}"),
                ));
            }
            expected = e;
        }
        if expected != n {
            return Err(CorpusError::invalid(
                &doc_id,
                format!("sentences cover {expected} of {n} tokens"),
            ));
        }
        if let Some(pos) = &pos {
            if pos.len() != n {
                return Err(CorpusError::invalid(
                    &doc_id,
                    format!("POS layer has {} tags for {n} tokens", pos.len()),
                ));
            }
        }
        if let Some(ner) = &ner {
            for span in ner {
                check_span(&doc_id, span.start, span.end, n)?;
            }
        }
        let clusters = clusters.map(|raw| normalize_clusters(&doc_id, raw, n)).transpose()?;
        Ok(Document {
            doc_id,
            tokens,
            sentences,
            pos,
            ner,
            clusters,
        })
    }

    /// Convenience constructor from whitespace-separated sentences.
    pub fn from_sentences(doc_id: impl Into<String>, sentences: &[&str]) -> Result<Self, CorpusError> {
        let mut tokens = Vec::new();
        let mut bounds = Vec::new();
        for s in sentences {
            let start = tokens.len();
            tokens.extend(s.split_whitespace().map(str::to_string));
            bounds.push((start, tokens.len()));
        }
        Document::new(doc_id, tokens, bounds, None, None, None)
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn sentences(&self) -> &[(usize, usize)] {
        &self.sentences
    }

    pub fn pos(&self) -> Option<&[String]> {
        self.pos.as_deref()
    }

    pub fn ner(&self) -> Option<&[NerSpan]> {
        self.ner.as_deref()
    }

    pub fn clusters(&self) -> Option<&[Cluster]> {
        self.clusters.as_deref()
    }

    /// All gold mentions sorted by span; empty when the document is unannotated.
    pub fn mentions(&self) -> Vec<Mention> {
        let mut out: Vec<Mention> = self
            .clusters
            .iter()
            .flatten()
            .flat_map(|c| c.mentions.iter().copied())
            .collect();
        out.sort();
        out
    }

    pub fn token_slice(&self, start: usize, end: usize) -> &[String] {
        &self.tokens[start..end]
    }

    pub fn text(&self, start: usize, end: usize) -> String {
        self.tokens[start..end].join(" ")
    }

    /// Index of the sentence containing `token`.
    pub fn sentence_of(&self, token: usize) -> Option<usize> {
        let i = self.sentences.partition_point(|&(_, e)| e <= token);
        (i < self.sentences.len()).then_some(i)
    }

    /// Returns a copy carrying the given clusters (raw span groups).
    pub fn with_clusters(&self, clusters: Vec<Vec<(usize, usize)>>) -> Result<Self, CorpusError> {
        Document::new(
            self.doc_id.clone(),
            self.tokens.clone(),
            self.sentences.clone(),
            self.pos.clone(),
            self.ner.clone(),
            Some(clusters),
        )
    }

    pub fn without_clusters(&self) -> Self {
        Document {
            clusters: None,
            ..self.clone()
        }
    }
}

fn check_span(doc_id: &str, start: usize, end: usize, n: usize) -> Result<(), CorpusError> {
    if start >= end || end > n {
        return Err(CorpusError::invalid(
            doc_id,
            format!("span [{start},{end}) out of bounds for {n} tokens"),
        ));
    }
    Ok(())
}

fn normalize_clusters(doc_id: &str, raw: Vec<Vec<(usize, usize)>>, n: usize) -> Result<Vec<Cluster>, CorpusError> {
    let mut seen = HashSet::new();
    let mut groups: Vec<Vec<(usize, usize)>> = Vec::with_capacity(raw.len());
    for group in raw {
        if group.is_empty() {
            continue;
        }
        let mut spans = group;
        for &(s, e) in &spans {
            check_span(doc_id, s, e, n)?;
            if !seen.insert((s, e)) {
                return Err(CorpusError::invalid(
                    doc_id,
                    format!("span [{s},{e}) annotated more than once"),
                ));
            }
        }
        spans.sort_unstable();
        groups.push(spans);
    }
    groups.sort_by_key(|g| g[0]);
    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(id, spans)| {
            let id = id as u32;
            Cluster {
                cluster_id: id,
                mentions: spans.into_iter().map(|(s, e)| Mention::new(s, e, id)).collect(),
            }
        })
        .collect())
}

/// Groups mentions by cluster id into raw span groups, ordered by id.
pub fn group_mentions(mentions: &[Mention]) -> Vec<Vec<(usize, usize)>> {
    let mut by_id: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
    for m in mentions {
        by_id.entry(m.cluster_id).or_default().push(m.span());
    }
    by_id.into_values().collect()
}

/// Greedy sentence-aligned chunking: sentences accumulate until the open
/// chunk holds at least `budget` tokens, then the chunk closes.
pub fn chunk_document(doc: &Document, budget: usize) -> Vec<Chunk> {
    let budget = budget.max(1);
    let mut chunks = Vec::new();
    let mut first = 0;
    let mut start = 0;
    for (i, &(_, end)) in doc.sentences().iter().enumerate() {
        if end - start >= budget {
            chunks.push(Chunk {
                index: chunks.len(),
                first_sentence: first,
                last_sentence: i,
                start,
                end,
            });
            first = i + 1;
            start = end;
        }
    }
    if start < doc.len() {
        chunks.push(Chunk {
            index: chunks.len(),
            first_sentence: first,
            last_sentence: doc.sentences().len() - 1,
            start,
            end: doc.len(),
        });
    }
    chunks
}

/// Index-based train/dev/test split for one fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
}

/// k-fold cross-validation over `corpus_len` documents. Fold `i` tests on
/// part `i`, validates on part `i + 1` and trains on the rest, which gives
/// 80/10/10 splits for k = 10.
pub fn make_folds(corpus_len: usize, k: usize, seed: u64) -> Result<Vec<Fold>, CorpusError> {
    if k < 2 {
        return Err(CorpusError::Folds(format!("k must be at least 2, got {k}")));
    }
    if k > corpus_len {
        return Err(CorpusError::Folds(format!("k = {k} exceeds corpus size {corpus_len}")));
    }
    let mut order: Vec<usize> = (0..corpus_len).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let parts: Vec<Vec<usize>> = (0..k)
        .map(|p| {
            let lo = p * corpus_len / k;
            let hi = (p + 1) * corpus_len / k;
            let mut part = order[lo..hi].to_vec();
            part.sort_unstable();
            part
        })
        .collect();
    Ok((0..k)
        .map(|i| {
            let dev_part = (i + 1) % k;
            let mut train: Vec<usize> = parts
                .iter()
                .enumerate()
                .filter(|&(p, _)| p != i && p != dev_part)
                .flat_map(|(_, part)| part.iter().copied())
                .collect();
            train.sort_unstable();
            Fold {
                train,
                dev: parts[dev_part].clone(),
                test: parts[i].clone(),
            }
        })
        .collect())
}

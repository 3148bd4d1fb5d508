//! Post-hoc analyses: input compression, missed-mention profiling, gold
//! link restoration, NER-driven augmentation and pseudosingletons.

mod compression;
mod ner;
mod pseudo;
mod restore;
mod taxonomy;

use std::collections::HashMap;

use thiserror::Error;

use crate::corpus::{CorpusError, Document};

pub use compression::{compression_ratio, CompressionReport, CompressionRow, DocRunLog};
pub use ner::{
    ner_exact_match_augment, ner_forced_starts, NerForcedStarts, EXACT_MATCH_CATEGORIES, FORCED_START_CATEGORIES,
};
pub use pseudo::{add_pseudosingletons, PseudoReport, Rejection};
pub use restore::{restore_gold_links, RestoreStep};
pub use taxonomy::{
    antecedent_relation, categorize_mention, missed_mention_breakdown, Breakdown, BreakdownRow, Category,
    MentionProfile, Relation,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("document {doc_id} has no {layer} layer")]
    MissingLayer { doc_id: String, layer: &'static str },
    #[error("document {0} has no clusters")]
    MissingClusters(String),
    #[error("document {0} appears in only one of the inputs")]
    DocumentMismatch(String),
    #[error("run logs for {doc_id} disagree: {message}")]
    LogMismatch { doc_id: String, message: String },
    #[error("span [{start}, {end}) is not a mention of the given cluster")]
    NotInCluster { start: usize, end: usize },
    #[error("span [{start}, {end}) is outside document {doc_id}")]
    OutOfBounds { doc_id: String, start: usize, end: usize },
    #[error("unknown category or step {0:?}")]
    Unknown(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("writing report: {0}")]
    Report(String),
}

impl From<csv::Error> for AnalysisError {
    fn from(e: csv::Error) -> Self {
        AnalysisError::Report(e.to_string())
    }
}

fn require_pos(doc: &Document) -> Result<&[String], AnalysisError> {
    doc.pos().ok_or_else(|| AnalysisError::MissingLayer {
        doc_id: doc.doc_id().to_string(),
        layer: "POS",
    })
}

fn require_clusters(doc: &Document) -> Result<Vec<Vec<(usize, usize)>>, AnalysisError> {
    doc.clusters()
        .map(|cs| cs.iter().map(|c| c.spans().collect()).collect())
        .ok_or_else(|| AnalysisError::MissingClusters(doc.doc_id().to_string()))
}

/// Pairs each document of `left` with the one in `right` sharing its id.
fn pair_by_id<'a>(
    left: &'a [Document],
    right: &'a [Document],
) -> Result<Vec<(&'a Document, &'a Document)>, AnalysisError> {
    let by_id: HashMap<&str, &Document> = right.iter().map(|d| (d.doc_id(), d)).collect();
    let pairs = left
        .iter()
        .map(|l| {
            by_id
                .get(l.doc_id())
                .map(|r| (l, *r))
                .ok_or_else(|| AnalysisError::DocumentMismatch(l.doc_id().to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(extra) = right.iter().find(|r| !left.iter().any(|l| l.doc_id() == r.doc_id())) {
        return Err(AnalysisError::DocumentMismatch(extra.doc_id().to_string()));
    }
    Ok(pairs)
}

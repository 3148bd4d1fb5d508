use std::collections::{BTreeMap, HashSet};

use super::AnalysisError;
use crate::corpus::{Document, NerSpan};
use crate::decode::{Action, DecodeHook, DecoderState};

/// Categories whose left bounds force a mention opening.
pub const FORCED_START_CATEGORIES: &[&str] = &["GPE", "PERSON", "ORG"];

/// Categories eligible for post-hoc exact-match linking.
pub const EXACT_MATCH_CATEGORIES: &[&str] = &[
    "GPE",
    "ORG",
    "PERSON",
    "LAW",
    "FAC",
    "LANGUAGE",
    "EVENT",
    "PRODUCT",
    "LOC",
    "DATE",
    "WORK_OF_ART",
];

fn ner_layer(doc: &Document) -> Result<&[NerSpan], AnalysisError> {
    doc.ner().ok_or_else(|| AnalysisError::MissingLayer {
        doc_id: doc.doc_id().to_string(),
        layer: "NER",
    })
}

fn selected<'a>(doc: &'a Document, categories: &[&str]) -> Result<Vec<&'a NerSpan>, AnalysisError> {
    Ok(ner_layer(doc)?
        .iter()
        .filter(|s| categories.contains(&s.category.as_str()))
        .collect())
}

/// Decode hook that opens a mention at the start of every selected entity.
#[derive(Debug, Clone, Default)]
pub struct NerForcedStarts {
    starts: HashSet<usize>,
}

impl NerForcedStarts {
    pub fn starts(&self) -> &HashSet<usize> {
        &self.starts
    }
}

impl DecodeHook for NerForcedStarts {
    /// Drops `copy` at a forced position until a mention opens there.
    /// Closes stay allowed so earlier mentions can end first. Does nothing
    /// when `open` is masked.
    fn restrict(&self, state: &DecoderState, allowed: &mut Vec<Action>) {
        if state.opens_at_cursor() == 0 && self.starts.contains(&state.cursor()) && allowed.contains(&Action::Open) {
            allowed.retain(|a| *a != Action::Copy);
        }
    }
}

pub fn ner_forced_starts(doc: &Document, categories: &[&str]) -> Result<NerForcedStarts, AnalysisError> {
    Ok(NerForcedStarts {
        starts: selected(doc, categories)?.iter().map(|s| s.start).collect(),
    })
}

/// Links NER spans to the prediction by case-sensitive string identity.
///
/// A span whose text equals a predicted mention's text joins the cluster of
/// the latest such mention (preferring mentions before the span). Remaining
/// spans sharing a text form new clusters when there are at least two.
/// Spans already predicted are left where they are.
pub fn ner_exact_match_augment(pred: &Document, categories: &[&str]) -> Result<Document, AnalysisError> {
    let spans = selected(pred, categories)?;
    let mut clusters: Vec<Vec<(usize, usize)>> = pred
        .clusters()
        .map(|cs| cs.iter().map(|c| c.spans().collect()).collect())
        .unwrap_or_default();
    let predicted: Vec<((usize, usize), usize, String)> = clusters
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |&s| (s, i)))
        .map(|(s, i)| (s, i, pred.text(s.0, s.1)))
        .collect();
    let taken: HashSet<(usize, usize)> = predicted.iter().map(|p| p.0).collect();

    let mut candidates: Vec<(usize, usize)> = spans
        .iter()
        .map(|s| (s.start, s.end))
        .filter(|s| !taken.contains(s))
        .collect();
    candidates.sort_unstable();
    candidates.dedup();

    let mut additions: Vec<((usize, usize), usize)> = Vec::new();
    let mut unmatched: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    for span in candidates {
        let text = pred.text(span.0, span.1);
        let best = predicted
            .iter()
            .filter(|p| p.2 == text)
            .max_by_key(|p| (p.0 < span, p.0));
        match best {
            Some(&(_, ci, _)) => additions.push((span, ci)),
            None => unmatched.entry(text).or_default().push(span),
        }
    }
    for (span, ci) in additions {
        clusters[ci].push(span);
    }
    clusters.extend(unmatched.into_values().filter(|group| group.len() > 1));
    Ok(pred.with_clusters(clusters)?)
}

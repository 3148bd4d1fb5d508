use std::collections::{HashMap, HashSet};

use super::{require_clusters, AnalysisError};
use crate::corpus::{Document, SingletonSpans};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    /// Same span as a gold mention.
    GoldMention,
    /// Partially overlaps a gold mention.
    CrossesGold,
    /// Listed more than once for the document.
    Duplicate,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PseudoReport {
    pub accepted: usize,
    pub rejected: Vec<(String, (usize, usize), Rejection)>,
}

fn crosses(a: (usize, usize), b: (usize, usize)) -> bool {
    (a.0 < b.0 && b.0 < a.1 && a.1 < b.1) || (b.0 < a.0 && a.0 < b.1 && b.1 < a.1)
}

/// Adds externally detected spans to the gold annotation as singleton
/// clusters. Spans that coincide with or cross a gold mention are reported
/// and skipped.
pub fn add_pseudosingletons(
    corpus: &[Document],
    sidecar: &[SingletonSpans],
) -> Result<(Vec<Document>, PseudoReport), AnalysisError> {
    let mut by_doc: HashMap<&str, Vec<(usize, usize)>> = HashMap::new();
    for record in sidecar {
        if !corpus.iter().any(|d| d.doc_id() == record.doc_id) {
            return Err(AnalysisError::DocumentMismatch(record.doc_id.clone()));
        }
        by_doc.entry(record.doc_id.as_str()).or_default().extend(&record.spans);
    }
    let mut report = PseudoReport::default();
    let mut out = Vec::with_capacity(corpus.len());
    for doc in corpus {
        let Some(spans) = by_doc.get(doc.doc_id()) else {
            out.push(doc.clone());
            continue;
        };
        let mut clusters = require_clusters(doc)?;
        let gold: HashSet<(usize, usize)> = clusters.iter().flatten().copied().collect();
        let mut seen = HashSet::new();
        for &span in spans {
            if span.0 >= span.1 || span.1 > doc.len() {
                return Err(AnalysisError::OutOfBounds {
                    doc_id: doc.doc_id().to_string(),
                    start: span.0,
                    end: span.1,
                });
            }
            let reason = if gold.contains(&span) {
                Some(Rejection::GoldMention)
            } else if !seen.insert(span) {
                Some(Rejection::Duplicate)
            } else if gold.iter().any(|&g| crosses(g, span)) {
                Some(Rejection::CrossesGold)
            } else {
                None
            };
            match reason {
                Some(r) => report.rejected.push((doc.doc_id().to_string(), span, r)),
                None => {
                    clusters.push(vec![span]);
                    report.accepted += 1;
                }
            }
        }
        out.push(doc.with_clusters(clusters)?);
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<Document> {
        vec![Document::from_sentences("p", &["the big dog saw a cat"])
            .unwrap()
            .with_clusters(vec![vec![(0, 3)]])
            .unwrap()]
    }

    fn sidecar(spans: &[(usize, usize)]) -> Vec<SingletonSpans> {
        vec![SingletonSpans {
            doc_id: "p".into(),
            spans: spans.to_vec(),
        }]
    }

    #[test]
    fn empty_sidecar_changes_nothing() {
        let (out, report) = add_pseudosingletons(&corpus(), &[]).unwrap();
        assert_eq!(out, corpus());
        assert_eq!(report.accepted, 0);
    }

    #[test]
    fn accepted_spans_become_singletons() {
        let (out, report) =
            add_pseudosingletons(&corpus(), &sidecar(&[(4, 6), (1, 3), (0, 3), (2, 4), (4, 6)])).unwrap();
        assert_eq!(report.accepted, 2);
        assert_eq!(out[0].clusters().unwrap().len(), 3);
        let reasons: Vec<Rejection> = report.rejected.iter().map(|r| r.2).collect();
        assert_eq!(
            reasons,
            vec![Rejection::GoldMention, Rejection::CrossesGold, Rejection::Duplicate]
        );
    }

    #[test]
    fn bad_spans_and_unknown_documents() {
        assert!(matches!(
            add_pseudosingletons(&corpus(), &sidecar(&[(5, 9)])),
            Err(AnalysisError::OutOfBounds { .. })
        ));
        let stray = vec![SingletonSpans {
            doc_id: "q".into(),
            spans: vec![],
        }];
        assert!(add_pseudosingletons(&corpus(), &stray).is_err());
    }
}

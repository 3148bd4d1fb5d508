use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;

use super::{pair_by_id, require_clusters, require_pos, AnalysisError};
use crate::corpus::Document;

type Span = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    NamedEntity,
    Pronoun,
    IndefiniteNp,
    DefiniteNp,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::NamedEntity,
        Category::Pronoun,
        Category::IndefiniteNp,
        Category::DefiniteNp,
    ];
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::NamedEntity => "NAMED_ENTITY",
            Category::Pronoun => "PRONOUN",
            Category::IndefiniteNp => "INDEFINITE_NP",
            Category::DefiniteNp => "DEFINITE_NP",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    FirstMention,
    ExactMatch,
    PartialMatch,
    NoOverlap,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::FirstMention => "FIRST_MENTION",
            Relation::ExactMatch => "EXACT_MATCH",
            Relation::PartialMatch => "PARTIAL_MATCH",
            Relation::NoOverlap => "NO_OVERLAP",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MentionProfile {
    pub category: Category,
    pub relation: Relation,
}

const PRONOMINAL: &[&str] = &["PRP", "PRP$", "WP", "WP$"];
const DEFINITE_DETERMINERS: &[&str] = &["the", "this", "that", "these", "those"];

fn is_nominal(tag: &str) -> bool {
    tag.starts_with("NN") || PRONOMINAL.contains(&tag)
}

/// Tags that end the head region: punctuation, prepositions, relativizers
/// and verbs. Only checked after the first token.
fn is_boundary(tag: &str) -> bool {
    matches!(tag, "," | ":" | "IN" | "TO" | "WDT" | "WP" | "WP$" | "-LRB-") || tag.starts_with("VB")
}

/// Index of the head token: the rightmost nominal before the first clause
/// boundary, or the last token before it when there is no nominal.
fn head_index(pos: &[String], start: usize, end: usize) -> usize {
    let stop = (start + 1..end).find(|&i| is_boundary(&pos[i])).unwrap_or(end);
    (start..stop).rev().find(|&i| is_nominal(&pos[i])).unwrap_or(stop - 1)
}

/// Syntactic class of a mention from its POS tags.
///
/// A lone demonstrative or relative token ("that", "this") counts as a
/// pronoun.
pub fn categorize_mention(doc: &Document, span: Span) -> Result<Category, AnalysisError> {
    let pos = require_pos(doc)?;
    let (start, end) = span;
    if start >= end || end > doc.len() {
        return Err(AnalysisError::OutOfBounds {
            doc_id: doc.doc_id().to_string(),
            start,
            end,
        });
    }
    let head = head_index(pos, start, end);
    let head_tag = pos[head].as_str();
    if PRONOMINAL.contains(&head_tag) || (end - start == 1 && matches!(head_tag, "DT" | "WDT")) {
        return Ok(Category::Pronoun);
    }
    if head_tag == "NNP" || head_tag == "NNPS" {
        return Ok(Category::NamedEntity);
    }
    let first = doc.tokens()[start].to_lowercase();
    let possessive = pos[start] == "PRP$" || (start..head).any(|i| pos[i] == "POS");
    if possessive || DEFINITE_DETERMINERS.contains(&first.as_str()) {
        return Ok(Category::DefiniteNp);
    }
    Ok(Category::IndefiniteNp)
}

fn lower_tokens(doc: &Document, span: Span) -> Vec<String> {
    doc.token_slice(span.0, span.1)
        .iter()
        .map(|t| t.to_lowercase())
        .collect()
}

fn contains(hay: &[String], needle: &[String]) -> bool {
    needle.len() <= hay.len() && hay.windows(needle.len()).any(|w| w == needle)
}

/// How a mention's surface string relates to its nearest earlier mate.
pub fn antecedent_relation(doc: &Document, span: Span, cluster: &[Span]) -> Result<Relation, AnalysisError> {
    if !cluster.contains(&span) {
        return Err(AnalysisError::NotInCluster {
            start: span.0,
            end: span.1,
        });
    }
    let Some(&antecedent) = cluster.iter().filter(|&&s| s < span).max() else {
        return Ok(Relation::FirstMention);
    };
    let (a, b) = (lower_tokens(doc, span), lower_tokens(doc, antecedent));
    Ok(if a == b {
        Relation::ExactMatch
    } else if contains(&a, &b) || contains(&b, &a) {
        Relation::PartialMatch
    } else {
        Relation::NoOverlap
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BreakdownRow {
    Category(Category),
    FirstMention,
}

impl fmt::Display for BreakdownRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BreakdownRow::Category(c) => c.fmt(f),
            BreakdownRow::FirstMention => f.write_str("FIRST_MENTION"),
        }
    }
}

/// Counts of missed mentions by category and antecedent relation. First
/// mentions form their own row.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Breakdown {
    pub cells: BTreeMap<(BreakdownRow, Relation), usize>,
    pub total: usize,
}

impl Breakdown {
    fn record(&mut self, profile: MentionProfile) {
        let row = if profile.relation == Relation::FirstMention {
            BreakdownRow::FirstMention
        } else {
            BreakdownRow::Category(profile.category)
        };
        *self.cells.entry((row, profile.relation)).or_default() += 1;
        self.total += 1;
    }

    /// Every cell of the table, including empty ones, in display order.
    pub fn rows(&self) -> Vec<(BreakdownRow, Relation, usize)> {
        let mut out = Vec::new();
        for c in Category::ALL {
            for r in [Relation::ExactMatch, Relation::PartialMatch, Relation::NoOverlap] {
                let row = BreakdownRow::Category(c);
                out.push((row, r, self.count(row, r)));
            }
        }
        let first = (BreakdownRow::FirstMention, Relation::FirstMention);
        out.push((first.0, first.1, self.count(first.0, first.1)));
        out
    }

    pub fn count(&self, row: BreakdownRow, relation: Relation) -> usize {
        self.cells.get(&(row, relation)).copied().unwrap_or(0)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), AnalysisError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["category", "relation", "count", "percent"])?;
        for (row, relation, count) in self.rows() {
            let percent = if self.total == 0 {
                0.0
            } else {
                100.0 * count as f64 / self.total as f64
            };
            w.write_record([
                row.to_string(),
                relation.to_string(),
                count.to_string(),
                format!("{percent:.2}"),
            ])?;
        }
        w.flush().map_err(|e| AnalysisError::Report(e.to_string()))
    }
}

/// Profiles gold mentions that `pred_a` detects but `pred_b` misses.
pub fn missed_mention_breakdown(
    gold: &[Document],
    pred_a: &[Document],
    pred_b: &[Document],
) -> Result<Breakdown, AnalysisError> {
    let a_pairs = pair_by_id(gold, pred_a)?;
    let b_by_doc: HashMap<&str, &Document> = pair_by_id(gold, pred_b)?
        .into_iter()
        .map(|(g, b)| (g.doc_id(), b))
        .collect();
    let mut table = Breakdown::default();
    for (g, a) in a_pairs {
        let clusters = require_clusters(g)?;
        let b_spans: HashSet<Span> = b_by_doc[g.doc_id()].mentions().iter().map(|m| m.span()).collect();
        let a_spans: HashSet<Span> = a.mentions().iter().map(|m| m.span()).collect();
        for cluster in &clusters {
            for &span in cluster {
                if a_spans.contains(&span) && !b_spans.contains(&span) {
                    table.record(MentionProfile {
                        category: categorize_mention(g, span)?,
                        relation: antecedent_relation(g, span, cluster)?,
                    });
                }
            }
        }
    }
    Ok(table)
}

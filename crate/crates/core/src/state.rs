//! Incremental document state.
//!
//! Two input layouts are supported. Full-prefix inputs replay every
//! previously annotated chunk before the target. Entity-centric inputs keep
//! only the mentions of each entity seen so far, a short window of annotated
//! sentences, and the target.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{AnnotatedSequence, Control, Item};
use crate::corpus::{Document, Mention};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    FullPrefix,
    EntityCentric,
}

/// How entities are ordered in the compressed memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntityOrder {
    /// Entities mentioned in the latest chunk move to the right end.
    Recency,
    /// Entities stay in order of creation.
    Document,
}

/// What the context budget counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextUnit {
    /// Document tokens plus control tokens.
    Annotated,
    /// Document tokens only.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub chunk_budget: usize,
    /// Ignored in full-prefix mode.
    pub context_budget: usize,
    pub ordering: EntityOrder,
    pub context_unit: ContextUnit,
    pub max_nesting: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::EntityCentric,
            chunk_budget: 100,
            context_budget: 100,
            ordering: EntityOrder::Recency,
            context_unit: ContextUnit::Annotated,
            max_nesting: 4,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StateError {
    #[error("cluster id {id} skips ahead of next unused id {next_id}")]
    IdGap { id: u32, next_id: u32 },
    #[error("history chunk {index} does not continue the previous chunk")]
    HistoryOrder { index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub cluster_id: u32,
    /// Mention spans in order of occurrence; the surface text is read from
    /// the document.
    pub mentions: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EntityState {
    entities: Vec<Entity>,
    next_id: u32,
}

/// Order in which a decoder completes mentions: by end, inner before outer.
pub fn close_order(mentions: &[Mention]) -> Vec<Mention> {
    let mut sorted = mentions.to_vec();
    sorted.sort_by(|a, b| a.end.cmp(&b.end).then(b.start.cmp(&a.start)));
    sorted
}

impl EntityState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn next_id(&self) -> u32 {
        self.next_id
    }

    pub fn order(&self) -> Vec<u32> {
        self.entities.iter().map(|e| e.cluster_id).collect()
    }

    /// Folds one chunk's mentions into the state. Ids are checked in close
    /// order; an id equal to the next unused id opens a new entity.
    pub fn update(&self, mentions: &[Mention], ordering: EntityOrder) -> Result<EntityState, StateError> {
        let mentions = close_order(mentions);
        let mut next_id = self.next_id;
        for m in &mentions {
            if m.cluster_id > next_id {
                return Err(StateError::IdGap {
                    id: m.cluster_id,
                    next_id,
                });
            }
            if m.cluster_id == next_id {
                next_id += 1;
            }
        }

        let mut entities = self.entities.clone();
        let mut position: HashMap<u32, usize> = entities.iter().enumerate().map(|(i, e)| (e.cluster_id, i)).collect();
        let mut last_seen: HashMap<u32, usize> = HashMap::new();
        for (k, m) in mentions.iter().enumerate() {
            let idx = *position.entry(m.cluster_id).or_insert_with(|| {
                entities.push(Entity {
                    cluster_id: m.cluster_id,
                    mentions: Vec::new(),
                });
                entities.len() - 1
            });
            entities[idx].mentions.push(m.span());
            last_seen.insert(m.cluster_id, k);
        }
        for e in &mut entities {
            e.mentions.sort_unstable();
        }

        if ordering == EntityOrder::Recency && !last_seen.is_empty() {
            let (mut promoted, mut kept): (Vec<Entity>, Vec<Entity>) = entities
                .into_iter()
                .partition(|e| last_seen.contains_key(&e.cluster_id));
            promoted.sort_by_key(|e| last_seen[&e.cluster_id]);
            kept.extend(promoted);
            entities = kept;
        }
        Ok(EntityState { entities, next_id })
    }

    /// `<e> <m> tokens </m> ... | id </e>` for each entity in state order.
    pub fn linearize(&self) -> AnnotatedSequence {
        let mut items = Vec::new();
        for e in &self.entities {
            items.push(Control::EntityOpen.into());
            for &(s, end) in &e.mentions {
                items.push(Control::MentionOpen.into());
                items.extend((s..end).map(Item::Token));
                items.push(Control::MentionClose.into());
            }
            items.push(Control::Sep.into());
            items.push(Control::ClusterId(e.cluster_id).into());
            items.push(Control::EntityClose.into());
        }
        AnnotatedSequence::new(items)
    }

    pub fn snapshot(&self, doc: &Document) -> StateSnapshot {
        StateSnapshot {
            doc_id: doc.doc_id().to_string(),
            entities: self
                .entities
                .iter()
                .map(|e| EntitySnapshot {
                    id: e.cluster_id,
                    mentions: e.mentions.iter().map(|&(s, end)| doc.text(s, end)).collect(),
                })
                .collect(),
        }
    }
}

/// Debug sidecar record for an entity state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub doc_id: String,
    pub entities: Vec<EntitySnapshot>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySnapshot {
    pub id: u32,
    pub mentions: Vec<String>,
}

/// Splits an annotated stream at sentence boundaries. Mention openers travel
/// with the token that follows them, closers with the token before them.
pub fn split_sentences(seq: &AnnotatedSequence, doc: &Document) -> Vec<AnnotatedSequence> {
    let mut out = Vec::new();
    let mut current: Vec<Item> = Vec::new();
    let mut current_sentence: Option<usize> = None;
    let mut pending: Vec<Item> = Vec::new();
    for item in &seq.items {
        match item {
            Item::Token(t) => {
                let s = doc.sentence_of(*t);
                if current_sentence.is_some() && s != current_sentence && !current.is_empty() {
                    out.push(sentence_sequence(std::mem::take(&mut current)));
                }
                current_sentence = s;
                current.append(&mut pending);
                current.push(*item);
            }
            Item::Control(Control::MentionOpen) => pending.push(*item),
            Item::Control(_) => {
                current.append(&mut pending);
                current.push(*item);
            }
        }
    }
    current.append(&mut pending);
    if !current.is_empty() {
        out.push(sentence_sequence(current));
    }
    out
}

fn sentence_sequence(items: Vec<Item>) -> AnnotatedSequence {
    let mut tokens = items.iter().filter_map(|i| match i {
        Item::Token(t) => Some(*t),
        Item::Control(_) => None,
    });
    let first = tokens.next();
    let last = tokens.next_back().or(first);
    AnnotatedSequence {
        origin: first.zip(last).map(|(a, b)| (a, b + 1)),
        items,
    }
}

/// Annotated sentences immediately preceding the target.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ContextWindow {
    pub sentences: Vec<AnnotatedSequence>,
    pub budget: usize,
}

impl ContextWindow {
    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn items(&self) -> impl Iterator<Item = &Item> {
        self.sentences.iter().flat_map(|s| s.items.iter())
    }
}

pub fn measure(seq: &AnnotatedSequence, unit: ContextUnit) -> usize {
    match unit {
        ContextUnit::Annotated => seq.len(),
        ContextUnit::Raw => seq.token_count(),
    }
}

/// Longest suffix of whole sentences whose total length fits in `budget`.
pub fn take_context(history: &[AnnotatedSequence], budget: usize, unit: ContextUnit) -> ContextWindow {
    let mut used = 0;
    let mut first = history.len();
    for (i, s) in history.iter().enumerate().rev() {
        let len = measure(s, unit);
        if used + len > budget {
            break;
        }
        used += len;
        first = i;
    }
    ContextWindow {
        sentences: history[first..].to_vec(),
        budget,
    }
}

fn target_items(target: Range<usize>) -> impl Iterator<Item = Item> {
    std::iter::once(Control::TargetOpen.into())
        .chain(target.map(Item::Token))
        .chain(std::iter::once(Control::TargetClose.into()))
}

/// Previously annotated chunks followed by the raw target chunk.
pub fn build_full_prefix_input(
    history: &[AnnotatedSequence],
    target: Range<usize>,
) -> Result<AnnotatedSequence, StateError> {
    let mut expected = history.first().and_then(|h| h.origin).map_or(target.start, |(s, _)| s);
    for (index, chunk) in history.iter().enumerate() {
        match chunk.origin {
            Some((s, e)) if s == expected => expected = e,
            _ => return Err(StateError::HistoryOrder { index }),
        }
    }
    if expected != target.start {
        return Err(StateError::HistoryOrder { index: history.len() });
    }
    let mut items: Vec<Item> = history.iter().flat_map(|h| h.items.iter().copied()).collect();
    items.extend(target_items(target));
    Ok(AnnotatedSequence::new(items))
}

/// Entity memory, then the context window (omitted when empty), then the
/// raw target chunk.
pub fn build_entity_centric_input(
    state: &EntityState,
    context: &ContextWindow,
    target: Range<usize>,
) -> AnnotatedSequence {
    let mut items = state.linearize().items;
    if !context.is_empty() {
        items.push(Control::ContextOpen.into());
        items.extend(context.items().copied());
        items.push(Control::ContextClose.into());
    }
    items.extend(target_items(target));
    AnnotatedSequence::new(items)
}

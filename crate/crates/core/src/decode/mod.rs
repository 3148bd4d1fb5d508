//! Constrained decoding.
//!
//! [`DecoderState`] is a finite-state machine over the annotation grammar.
//! At every step it exposes the set of legal [`Action`]s; a [`Predictor`]
//! picks one and the engine re-validates it. Any sequence of legal actions
//! ends in a grammar-valid annotation of the target chunk.
//!
//! Beyond the grammar, the mask also removes actions that would make two
//! mentions share a span, and actions after which no legal completion
//! exists, so every reachable state can still finish.

mod external;
mod oracle;

use std::collections::VecDeque;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{parse_annotated, AnnotatedSequence, AnnotationError, Control, Item};
use crate::corpus::{chunk_document, group_mentions, CorpusError, Document, Mention};
use crate::state::{
    build_entity_centric_input, build_full_prefix_input, split_sentences, take_context, EntityState, Mode,
    PipelineConfig, StateError,
};

pub use external::{Endpoint, ExternalConfig, ExternalFactory, ExternalPredictor, WireMessage, PROTOCOL_VERSION};
pub use oracle::{OracleFactory, OraclePredictor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Copy,
    Open,
    /// Emits `| id </m>` in one step.
    Close(u32),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Copy => f.write_str("copy"),
            Action::Open => f.write_str("open"),
            Action::Close(n) => write!(f, "close:{n}"),
        }
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "copy" => Ok(Action::Copy),
            "open" => Ok(Action::Open),
            _ => s
                .strip_prefix("close:")
                .and_then(|n| n.parse().ok())
                .map(Action::Close)
                .ok_or_else(|| format!("unknown action {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Copying target tokens or placing markup. A separate "await id" phase
    /// never shows up because closing is atomic.
    Copy,
    Done,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IllegalAction {
    #[error("decoding is finished")]
    Finished,
    #[error("cursor is at the end of the target")]
    PastEnd,
    #[error("nesting depth {0} reached")]
    TooDeep(usize),
    #[error("no open mention to close")]
    NothingOpen,
    #[error("open mention covers no token")]
    EmptyMention,
    #[error("span [{0}, {1}) was just closed")]
    DuplicateSpan(usize, usize),
    #[error("cluster id {id} not in 0..={next}")]
    IdOutOfRange { id: u32, next: u32 },
    #[error("{0} leaves no legal way to finish the chunk")]
    DeadEnd(Action),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoderState {
    emitted: Vec<Item>,
    start: usize,
    end: usize,
    cursor: usize,
    open: Vec<usize>,
    next_id: u32,
    max_nesting: usize,
    last_closed: Option<(usize, usize)>,
    opens_at_cursor: usize,
}

impl DecoderState {
    /// `next_id` is the number of cluster ids already in use.
    pub fn new(target: Range<usize>, next_id: u32, max_nesting: usize) -> Self {
        DecoderState {
            emitted: Vec::new(),
            start: target.start,
            end: target.end,
            cursor: target.start,
            open: Vec::new(),
            next_id,
            max_nesting,
            last_closed: None,
            opens_at_cursor: 0,
        }
    }

    pub fn emitted(&self) -> &[Item] {
        &self.emitted
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn target(&self) -> Range<usize> {
        self.start..self.end
    }

    /// Start positions of the open mentions, outermost first.
    pub fn open_mentions(&self) -> &[usize] {
        &self.open
    }

    pub fn next_id(&self) -> u32 {
        self.next_id
    }

    /// Number of mentions opened at the current cursor position.
    pub fn opens_at_cursor(&self) -> usize {
        self.opens_at_cursor
    }

    pub fn phase(&self) -> Phase {
        if self.cursor == self.end && self.open.is_empty() {
            Phase::Done
        } else {
            Phase::Copy
        }
    }

    pub fn is_done(&self) -> bool {
        self.phase() == Phase::Done
    }

    fn grammar_check(&self, action: Action) -> Result<(), IllegalAction> {
        if self.is_done() {
            return Err(IllegalAction::Finished);
        }
        match action {
            Action::Copy => {
                if self.cursor >= self.end {
                    return Err(IllegalAction::PastEnd);
                }
            }
            Action::Open => {
                if self.cursor >= self.end {
                    return Err(IllegalAction::PastEnd);
                }
                if self.open.len() >= self.max_nesting {
                    return Err(IllegalAction::TooDeep(self.max_nesting));
                }
            }
            Action::Close(id) => {
                let &top = self.open.last().ok_or(IllegalAction::NothingOpen)?;
                if top >= self.cursor {
                    return Err(IllegalAction::EmptyMention);
                }
                if self.last_closed == Some((top, self.cursor)) {
                    return Err(IllegalAction::DuplicateSpan(top, self.cursor));
                }
                if id > self.next_id {
                    return Err(IllegalAction::IdOutOfRange { id, next: self.next_id });
                }
            }
        }
        Ok(())
    }

    /// Whether the open mentions can all still be closed with distinct spans
    /// before the target ends. Mentions sharing a start need distinct ends,
    /// so each group of equal starts is closed as early as possible.
    fn can_finish(&self) -> bool {
        let mut pos = self.cursor;
        let mut i = self.open.len();
        let mut first_group = true;
        while i > 0 {
            let s = self.open[i - 1];
            let mut j = i;
            while j > 0 && self.open[j - 1] == s {
                j -= 1;
            }
            let size = i - j;
            let mut lo = pos.max(s + 1);
            if first_group && self.last_closed == Some((s, self.cursor)) {
                lo = lo.max(self.cursor + 1);
            }
            let last = lo + size - 1;
            if last > self.end {
                return false;
            }
            pos = last;
            first_group = false;
            i = j;
        }
        true
    }

    fn apply(&mut self, action: Action) {
        match action {
            Action::Copy => {
                self.emitted.push(Item::Token(self.cursor));
                self.cursor += 1;
                self.opens_at_cursor = 0;
            }
            Action::Open => {
                self.emitted.push(Control::MentionOpen.into());
                self.open.push(self.cursor);
                self.opens_at_cursor += 1;
            }
            Action::Close(id) => {
                let start = self.open.pop().expect("checked by grammar");
                self.emitted.push(Control::Sep.into());
                self.emitted.push(Control::ClusterId(id).into());
                self.emitted.push(Control::MentionClose.into());
                self.last_closed = Some((start, self.cursor));
                if id == self.next_id {
                    self.next_id += 1;
                }
            }
        }
    }

    pub fn check(&self, action: Action) -> Result<(), IllegalAction> {
        self.grammar_check(action)?;
        let mut next = self.clone();
        next.apply(action);
        if !next.can_finish() {
            return Err(IllegalAction::DeadEnd(action));
        }
        Ok(())
    }

    pub fn allowed_actions(&self) -> Result<Vec<Action>, IllegalAction> {
        if self.is_done() {
            return Err(IllegalAction::Finished);
        }
        let mut out = Vec::new();
        for a in [Action::Copy, Action::Open] {
            if self.check(a).is_ok() {
                out.push(a);
            }
        }
        // legality of a close does not depend on which valid id it carries
        if self.check(Action::Close(0)).is_ok() {
            out.extend((0..=self.next_id).map(Action::Close));
        }
        Ok(out)
    }

    pub fn step(&self, action: Action) -> Result<DecoderState, IllegalAction> {
        self.check(action)?;
        let mut next = self.clone();
        next.apply(action);
        Ok(next)
    }

    pub fn into_sequence(self) -> AnnotatedSequence {
        AnnotatedSequence {
            items: self.emitted,
            origin: Some((self.start, self.end)),
        }
    }
}

/// Narrows the action mask at selected decode steps.
pub trait DecodeHook: Send + Sync {
    fn restrict(&self, state: &DecoderState, allowed: &mut Vec<Action>);
}

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("timed out waiting for the predictor")]
    Timeout,
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("oracle: {0}")]
    Oracle(String),
}

pub struct ChooseRequest<'a> {
    pub doc: &'a Document,
    pub chunk_index: usize,
    pub step: usize,
    pub input: &'a AnnotatedSequence,
    pub state: &'a DecoderState,
    pub allowed: &'a [Action],
}

/// Anything that picks the next action: the oracle, a replayed trace, or a
/// remote model.
pub trait Predictor {
    fn choose(&mut self, request: &ChooseRequest<'_>) -> Result<Action, PredictorError>;

    /// Called once the document is finished.
    fn finish(&mut self) -> Result<(), PredictorError> {
        Ok(())
    }
}

/// Opens one predictor session per document.
pub trait PredictorFactory: Sync {
    fn session(&self, doc: &Document) -> Result<Box<dyn Predictor>, PredictorError>;
}

/// Uniform choice over the allowed set. Used for fuzzing.
pub struct RandomPredictor {
    rng: ChaCha8Rng,
}

impl RandomPredictor {
    pub fn new(seed: u64) -> Self {
        RandomPredictor {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Predictor for RandomPredictor {
    fn choose(&mut self, request: &ChooseRequest<'_>) -> Result<Action, PredictorError> {
        request
            .allowed
            .choose(&mut self.rng)
            .copied()
            .ok_or_else(|| PredictorError::Protocol("empty action mask".into()))
    }
}

pub struct RandomFactory {
    pub seed: u64,
}

impl PredictorFactory for RandomFactory {
    fn session(&self, doc: &Document) -> Result<Box<dyn Predictor>, PredictorError> {
        // stable per-document stream regardless of processing order
        let salt = doc.doc_id().bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
        });
        Ok(Box::new(RandomPredictor::new(self.seed ^ salt)))
    }
}

/// Replays a fixed action trace.
#[derive(Debug, Clone, Default)]
pub struct ReplayPredictor {
    actions: VecDeque<Action>,
}

impl ReplayPredictor {
    pub fn new(actions: impl IntoIterator<Item = Action>) -> Self {
        ReplayPredictor {
            actions: actions.into_iter().collect(),
        }
    }

    pub fn remaining(&self) -> usize {
        self.actions.len()
    }
}

impl Predictor for ReplayPredictor {
    fn choose(&mut self, _request: &ChooseRequest<'_>) -> Result<Action, PredictorError> {
        self.actions
            .pop_front()
            .ok_or_else(|| PredictorError::Protocol("replay trace exhausted".into()))
    }
}

/// Action trace that reproduces an annotated chunk.
pub fn trace_of(items: &[Item]) -> Vec<Action> {
    items
        .iter()
        .filter_map(|item| match item {
            Item::Token(_) => Some(Action::Copy),
            Item::Control(Control::MentionOpen) => Some(Action::Open),
            Item::Control(Control::ClusterId(n)) => Some(Action::Close(*n)),
            Item::Control(_) => None,
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("chunk {chunk}, step {step}: predictor failed: {source}")]
    Predictor {
        chunk: usize,
        step: usize,
        #[source]
        source: PredictorError,
    },
    #[error("chunk {chunk}, step {step}: predictor chose illegal action {action} twice ({reason})")]
    IllegalAction {
        chunk: usize,
        step: usize,
        action: Action,
        reason: IllegalAction,
    },
    #[error("chunk {chunk}: step budget of {budget} actions exceeded")]
    StepBudget { chunk: usize, budget: usize },
    #[error("chunk {chunk}: {source}")]
    Annotation {
        chunk: usize,
        #[source]
        source: AnnotationError,
    },
    #[error("chunk {chunk}: {source}")]
    State {
        chunk: usize,
        #[source]
        source: StateError,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("session for {doc_id}: {source}")]
    Session {
        doc_id: String,
        #[source]
        source: PredictorError,
    },
}

#[derive(Debug, Clone)]
pub struct DecodedChunk {
    pub annotated: AnnotatedSequence,
    pub next_id: u32,
    pub steps: usize,
}

pub struct ChunkTask<'a> {
    pub doc: &'a Document,
    pub chunk_index: usize,
    pub input: &'a AnnotatedSequence,
    pub target: Range<usize>,
    pub next_id: u32,
    pub max_nesting: usize,
}

/// Runs the allowed → choose → step loop until the target is annotated.
/// An illegal choice is re-requested once before failing.
pub fn decode_chunk(
    predictor: &mut dyn Predictor,
    task: &ChunkTask<'_>,
    hooks: &[&dyn DecodeHook],
) -> Result<DecodedChunk, DecodeError> {
    let chunk = task.chunk_index;
    let budget = 10 * task.target.len();
    let mut state = DecoderState::new(task.target.clone(), task.next_id, task.max_nesting);
    let mut step = 0;
    while !state.is_done() {
        if step >= budget {
            return Err(DecodeError::StepBudget { chunk, budget });
        }
        let mut allowed = state
            .allowed_actions()
            .expect("state is not done, and every live state has a legal action");
        for hook in hooks {
            hook.restrict(&state, &mut allowed);
        }
        let mut attempt = 0;
        let action = loop {
            let request = ChooseRequest {
                doc: task.doc,
                chunk_index: chunk,
                step,
                input: task.input,
                state: &state,
                allowed: &allowed,
            };
            let action = predictor
                .choose(&request)
                .map_err(|source| DecodeError::Predictor { chunk, step, source })?;
            if allowed.contains(&action) {
                break action;
            }
            attempt += 1;
            if attempt > 1 {
                let reason = state.check(action).err().unwrap_or(IllegalAction::Finished);
                return Err(DecodeError::IllegalAction {
                    chunk,
                    step,
                    action,
                    reason,
                });
            }
            log::warn!("chunk {chunk}, step {step}: {action} is outside the mask, asking again");
        };
        state = state.step(action).expect("action is in the mask");
        step += 1;
    }
    let next_id = state.next_id();
    Ok(DecodedChunk {
        annotated: state.into_sequence(),
        next_id,
        steps: step,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub index: usize,
    pub input_len: usize,
    pub output_len: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// The input document carrying predicted clusters.
    pub prediction: Document,
    pub chunks: Vec<ChunkRecord>,
    pub annotated: Vec<AnnotatedSequence>,
    /// Final entity memory (entity-centric mode only).
    pub state: Option<EntityState>,
}

/// Annotates a document chunk by chunk, feeding each prediction back into
/// the next input.
pub fn run_incremental(
    doc: &Document,
    config: &PipelineConfig,
    predictor: &mut dyn Predictor,
    hooks: &[&dyn DecodeHook],
) -> Result<RunOutput, DecodeError> {
    let chunks = chunk_document(doc, config.chunk_budget);
    let mut annotated: Vec<AnnotatedSequence> = Vec::with_capacity(chunks.len());
    let mut sentences: Vec<AnnotatedSequence> = Vec::new();
    let mut state = EntityState::new();
    let mut next_id = 0;
    let mut mentions: Vec<Mention> = Vec::new();
    let mut records = Vec::with_capacity(chunks.len());
    for chunk in &chunks {
        let target = chunk.token_range();
        let input = match config.mode {
            Mode::FullPrefix => {
                build_full_prefix_input(&annotated, target.clone()).map_err(|source| DecodeError::State {
                    chunk: chunk.index,
                    source,
                })?
            }
            Mode::EntityCentric => {
                let window = take_context(&sentences, config.context_budget, config.context_unit);
                build_entity_centric_input(&state, &window, target.clone())
            }
        };
        let task = ChunkTask {
            doc,
            chunk_index: chunk.index,
            input: &input,
            target,
            next_id,
            max_nesting: config.max_nesting,
        };
        let decoded = decode_chunk(predictor, &task, hooks)?;
        let chunk_mentions = parse_annotated(&decoded.annotated.items).map_err(|source| DecodeError::Annotation {
            chunk: chunk.index,
            source,
        })?;
        if config.mode == Mode::EntityCentric {
            state = state
                .update(&chunk_mentions, config.ordering)
                .map_err(|source| DecodeError::State {
                    chunk: chunk.index,
                    source,
                })?;
            debug_assert_eq!(state.next_id(), decoded.next_id);
            sentences.extend(split_sentences(&decoded.annotated, doc));
        }
        next_id = decoded.next_id;
        records.push(ChunkRecord {
            index: chunk.index,
            input_len: input.len(),
            output_len: decoded.annotated.len(),
        });
        log::debug!(
            "{} chunk {}: input {} items, output {} items, {} mentions",
            doc.doc_id(),
            chunk.index,
            input.len(),
            decoded.annotated.len(),
            chunk_mentions.len()
        );
        mentions.extend(chunk_mentions);
        annotated.push(decoded.annotated);
    }
    predictor.finish().map_err(|source| DecodeError::Session {
        doc_id: doc.doc_id().to_string(),
        source,
    })?;
    let prediction = doc.with_clusters(group_mentions(&mentions))?;
    Ok(RunOutput {
        prediction,
        chunks: records,
        annotated,
        state: (config.mode == Mode::EntityCentric).then_some(state),
    })
}

use std::collections::HashMap;

use super::{Action, ChooseRequest, Predictor, PredictorError, PredictorFactory};
use crate::annotation::check_nesting;
use crate::corpus::{Document, Mention};

struct Frame {
    /// Gold mention this frame was opened for; `None` when a hook forced
    /// the opening where gold has no mention.
    target: Option<Mention>,
}

/// Predictor that replays the gold annotation.
///
/// Gold cluster ids are mapped onto the pipeline's running ids: a gold
/// cluster gets the next unused id the first time one of its mentions
/// closes.
pub struct OraclePredictor {
    gold: Vec<Mention>,
    id_map: HashMap<u32, u32>,
    chunk: Option<usize>,
    pending: Vec<Mention>,
    next_pending: usize,
    frames: Vec<Frame>,
}

impl OraclePredictor {
    pub fn new(doc: &Document) -> Result<Self, PredictorError> {
        let gold = doc.mentions();
        if doc.clusters().is_none() {
            return Err(PredictorError::Oracle(format!(
                "document {} has no gold clusters",
                doc.doc_id()
            )));
        }
        check_nesting(&gold).map_err(|e| PredictorError::Oracle(format!("document {}: {e}", doc.doc_id())))?;
        Ok(OraclePredictor {
            gold,
            id_map: HashMap::new(),
            chunk: None,
            pending: Vec::new(),
            next_pending: 0,
            frames: Vec::new(),
        })
    }

    fn begin_chunk(&mut self, request: &ChooseRequest<'_>) -> Result<(), PredictorError> {
        let target = request.state.target();
        if let Some(m) = self
            .gold
            .iter()
            .find(|m| m.start < target.end && m.end > target.start && (m.start < target.start || m.end > target.end))
        {
            return Err(PredictorError::Oracle(format!(
                "gold mention [{}, {}) crosses the boundary of chunk {}",
                m.start, m.end, request.chunk_index
            )));
        }
        self.pending = self
            .gold
            .iter()
            .filter(|m| m.start >= target.start && m.end <= target.end)
            .copied()
            .collect();
        // outer mentions open first
        self.pending
            .sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
        self.next_pending = 0;
        self.frames.clear();
        self.chunk = Some(request.chunk_index);
        Ok(())
    }

    fn pipeline_id(&self, gold_id: u32, next_id: u32) -> u32 {
        self.id_map.get(&gold_id).copied().unwrap_or(next_id)
    }

    fn desired(&self, request: &ChooseRequest<'_>) -> Action {
        let cursor = request.state.cursor();
        let next_id = request.state.next_id();
        if let Some(top) = self.frames.last() {
            match top.target {
                Some(m) if m.end == cursor => {
                    return Action::Close(self.pipeline_id(m.cluster_id, next_id));
                }
                None if request.state.open_mentions().last().is_some_and(|&s| s < cursor) => {
                    return Action::Close(next_id);
                }
                _ => {}
            }
        }
        if self.pending.get(self.next_pending).is_some_and(|m| m.start == cursor) {
            return Action::Open;
        }
        Action::Copy
    }

    fn commit(&mut self, action: Action, targeted: bool) {
        match action {
            Action::Copy => {}
            Action::Open if targeted => {
                let m = self.pending[self.next_pending];
                self.next_pending += 1;
                self.frames.push(Frame { target: Some(m) });
            }
            Action::Open => self.frames.push(Frame { target: None }),
            Action::Close(id) => {
                if let Some(Frame { target: Some(m) }) = self.frames.pop() {
                    self.id_map.entry(m.cluster_id).or_insert(id);
                }
            }
        }
    }
}

impl Predictor for OraclePredictor {
    fn choose(&mut self, request: &ChooseRequest<'_>) -> Result<Action, PredictorError> {
        if self.chunk != Some(request.chunk_index) {
            self.begin_chunk(request)?;
        }
        let want = self.desired(request);
        if request.allowed.contains(&want) {
            self.commit(want, true);
            return Ok(want);
        }
        let allows = |a: Action| request.allowed.contains(&a);
        // a hook forced a mention open where gold has none
        if allows(Action::Open) && !allows(Action::Copy) {
            self.commit(Action::Open, false);
            return Ok(Action::Open);
        }
        // an untargeted mention that may not close yet keeps copying
        if matches!(self.frames.last(), Some(Frame { target: None })) && allows(Action::Copy) {
            return Ok(Action::Copy);
        }
        Err(PredictorError::Oracle(format!(
            "gold annotation needs {want} at token {}, mask allows {:?}",
            request.state.cursor(),
            request.allowed.iter().map(ToString::to_string).collect::<Vec<_>>()
        )))
    }
}

pub struct OracleFactory;

impl PredictorFactory for OracleFactory {
    fn session(&self, doc: &Document) -> Result<Box<dyn Predictor>, PredictorError> {
        Ok(Box::new(OraclePredictor::new(doc)?))
    }
}

//! Token Action annotation grammar.
//!
//! A mention over tokens `x_i .. x_j` belonging to cluster `l` is written
//! `<m> x_i .. x_j | l </m>`. Nested mentions open outermost first and close
//! innermost first, which makes the linearization of a non-crossing mention
//! set unique.

use std::collections::HashSet;
use std::fmt;
use std::ops::Range;

use thiserror::Error;

use crate::corpus::{Document, Mention};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Control {
    MentionOpen,
    MentionClose,
    Sep,
    ClusterId(u32),
    EntityOpen,
    EntityClose,
    TargetOpen,
    TargetClose,
    ContextOpen,
    ContextClose,
}

impl Control {
    /// Markers with a fixed surface form (everything except cluster ids).
    const MARKERS: [(Control, &'static str); 9] = [
        (Control::MentionOpen, "<m>"),
        (Control::MentionClose, "</m>"),
        (Control::Sep, "|"),
        (Control::EntityOpen, "<e>"),
        (Control::EntityClose, "</e>"),
        (Control::TargetOpen, "<target>"),
        (Control::TargetClose, "</target>"),
        (Control::ContextOpen, "<context>"),
        (Control::ContextClose, "</context>"),
    ];

    fn from_marker(s: &str) -> Option<Control> {
        Self::MARKERS.iter().find(|(_, lit)| *lit == s).map(|(c, _)| *c)
    }
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Control::ClusterId(n) => write!(f, "{n}"),
            other => {
                let lit = Self::MARKERS
                    .iter()
                    .find(|(c, _)| c == other)
                    .map(|(_, lit)| *lit)
                    .expect("every marker has a literal");
                f.write_str(lit)
            }
        }
    }
}

/// One element of an annotated stream: a reference to a document token or a
/// control symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Item {
    Token(usize),
    Control(Control),
}

impl Item {
    pub fn is_token(&self) -> bool {
        matches!(self, Item::Token(_))
    }
}

impl From<Control> for Item {
    fn from(c: Control) -> Self {
        Item::Control(c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnnotatedSequence {
    pub items: Vec<Item>,
    /// Document token range this sequence annotates, when it annotates one
    /// contiguous range in order.
    pub origin: Option<(usize, usize)>,
}

impl AnnotatedSequence {
    pub fn new(items: Vec<Item>) -> Self {
        AnnotatedSequence { items, origin: None }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.items.iter().filter(|i| i.is_token()).count()
    }

    pub fn tokens(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().filter_map(|i| match i {
            Item::Token(t) => Some(*t),
            Item::Control(_) => None,
        })
    }

    pub fn render(&self, doc: &Document) -> String {
        render_items(&self.items, doc)
    }
}

pub fn render_items(items: &[Item], doc: &Document) -> String {
    let mut out = String::new();
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        match item {
            Item::Token(t) => out.push_str(&doc.tokens()[*t]),
            Item::Control(c) => out.push_str(&c.to_string()),
        }
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnnotationError {
    #[error("mentions [{}, {}) and [{}, {}) cross", .0.start, .0.end, .1.start, .1.end)]
    Crossing(Mention, Mention),
    #[error("span [{start}, {end}) occurs more than once")]
    Duplicate { start: usize, end: usize },
    #[error("mention [{start}, {end}) lies outside chunk [{chunk_start}, {chunk_end})")]
    OutsideChunk {
        start: usize,
        end: usize,
        chunk_start: usize,
        chunk_end: usize,
    },
    #[error("item {index}: {message}")]
    Parse { index: usize, message: String },
    #[error("position {position}: {message}")]
    Scan { position: usize, message: String },
}

fn parse_err(index: usize, message: impl Into<String>) -> AnnotationError {
    AnnotationError::Parse {
        index,
        message: message.into(),
    }
}

/// Rejects crossing and duplicate spans.
pub fn check_nesting(mentions: &[Mention]) -> Result<(), AnnotationError> {
    let mut sorted = mentions.to_vec();
    sorted.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
    let mut stack: Vec<Mention> = Vec::new();
    for m in sorted {
        while stack.last().is_some_and(|top| top.end <= m.start) {
            stack.pop();
        }
        if let Some(top) = stack.last() {
            if top.span() == m.span() {
                return Err(AnnotationError::Duplicate {
                    start: m.start,
                    end: m.end,
                });
            }
            if m.end > top.end {
                return Err(AnnotationError::Crossing(*top, m));
            }
        }
        stack.push(m);
    }
    Ok(())
}

/// Writes the chunk tokens interleaved with mention markup.
pub fn linearize_chunk(chunk: Range<usize>, mentions: &[Mention]) -> Result<AnnotatedSequence, AnnotationError> {
    for m in mentions {
        if m.start < chunk.start || m.end > chunk.end || m.start >= m.end {
            return Err(AnnotationError::OutsideChunk {
                start: m.start,
                end: m.end,
                chunk_start: chunk.start,
                chunk_end: chunk.end,
            });
        }
    }
    check_nesting(mentions)?;
    let width = chunk.len();
    let mut opens: Vec<Vec<&Mention>> = vec![Vec::new(); width];
    let mut closes: Vec<Vec<&Mention>> = vec![Vec::new(); width];
    for m in mentions {
        opens[m.start - chunk.start].push(m);
        closes[m.end - 1 - chunk.start].push(m);
    }
    let mut items = Vec::with_capacity(width + 4 * mentions.len());
    for (offset, pos) in chunk.clone().enumerate() {
        opens[offset].sort_by_key(|m| std::cmp::Reverse(m.end));
        items.extend(opens[offset].iter().map(|_| Item::Control(Control::MentionOpen)));
        items.push(Item::Token(pos));
        closes[offset].sort_by_key(|m| std::cmp::Reverse(m.start));
        for m in &closes[offset] {
            items.push(Control::Sep.into());
            items.push(Control::ClusterId(m.cluster_id).into());
            items.push(Control::MentionClose.into());
        }
    }
    Ok(AnnotatedSequence {
        items,
        origin: Some((chunk.start, chunk.end)),
    })
}

/// Recovers the mention set from an annotated chunk, resolving nesting with
/// a stack. Output is sorted by span.
pub fn parse_annotated(items: &[Item]) -> Result<Vec<Mention>, AnnotationError> {
    struct Frame {
        open_index: usize,
        start: Option<usize>,
    }
    let mut stack: Vec<Frame> = Vec::new();
    let mut mentions = Vec::new();
    let mut spans = HashSet::new();
    let mut last_token: Option<usize> = None;
    let mut k = 0;
    while k < items.len() {
        match items[k] {
            Item::Token(t) => {
                if last_token.is_some_and(|prev| t <= prev) {
                    return Err(parse_err(k, format!("token {t} out of document order")));
                }
                last_token = Some(t);
                for f in stack.iter_mut().filter(|f| f.start.is_none()) {
                    f.start = Some(t);
                }
                k += 1;
            }
            Item::Control(Control::MentionOpen) => {
                stack.push(Frame {
                    open_index: k,
                    start: None,
                });
                k += 1;
            }
            Item::Control(Control::Sep) => {
                let id = match items.get(k + 1) {
                    Some(Item::Control(Control::ClusterId(id))) => *id,
                    _ => return Err(parse_err(k + 1, "separator must be followed by a cluster id")),
                };
                if items.get(k + 2) != Some(&Item::Control(Control::MentionClose)) {
                    return Err(parse_err(k + 2, "cluster id must be followed by </m>"));
                }
                let frame = stack
                    .pop()
                    .ok_or_else(|| parse_err(k, "separator with no open mention"))?;
                let start = frame
                    .start
                    .ok_or_else(|| parse_err(k, "mention closes without covering a token"))?;
                let end = last_token.expect("a frame with a start implies a token") + 1;
                if !spans.insert((start, end)) {
                    return Err(parse_err(k, format!("span [{start}, {end}) annotated twice")));
                }
                mentions.push(Mention::new(start, end, id));
                k += 3;
            }
            Item::Control(Control::ClusterId(_)) => {
                return Err(parse_err(k, "cluster id without preceding separator"));
            }
            Item::Control(Control::MentionClose) => {
                return Err(if stack.is_empty() {
                    parse_err(k, "</m> with no open mention")
                } else {
                    parse_err(k, "</m> must be preceded by `| id`")
                });
            }
            Item::Control(other) => {
                return Err(parse_err(k, format!("unexpected control token {other}")));
            }
        }
    }
    if let Some(f) = stack.last() {
        return Err(parse_err(f.open_index, "mention never closes"));
    }
    mentions.sort();
    Ok(mentions)
}

/// Reads a rendered sequence back against `doc`, aligning plain tokens to the
/// document starting at token `start`.
///
/// `|` counts as a separator only when followed by `<id> </m>`; any other
/// piece that is not a marker must equal the next document token.
pub fn scan(text: &str, doc: &Document, start: usize) -> Result<AnnotatedSequence, AnnotationError> {
    let pieces: Vec<&str> = text.split_whitespace().collect();
    let mut items = Vec::with_capacity(pieces.len());
    let mut cursor = start;
    for (k, piece) in pieces.iter().enumerate() {
        if items.last() == Some(&Item::Control(Control::Sep)) {
            let id = piece.parse::<u32>().map_err(|_| AnnotationError::Scan {
                position: k,
                message: format!("expected cluster id after `|`, found {piece:?}"),
            })?;
            items.push(Control::ClusterId(id).into());
            continue;
        }
        if *piece == "|" {
            let is_sep =
                pieces.get(k + 1).is_some_and(|n| n.parse::<u32>().is_ok()) && pieces.get(k + 2) == Some(&"</m>");
            if is_sep {
                items.push(Control::Sep.into());
                continue;
            }
        } else if let Some(c) = Control::from_marker(piece) {
            items.push(c.into());
            continue;
        }
        match doc.tokens().get(cursor) {
            Some(tok) if tok == piece => {
                items.push(Item::Token(cursor));
                cursor += 1;
            }
            _ if piece.starts_with('<') && piece.ends_with('>') && piece.len() > 2 => {
                return Err(AnnotationError::Scan {
                    position: k,
                    message: format!("unknown control token {piece:?}"),
                })
            }
            Some(tok) => {
                return Err(AnnotationError::Scan {
                    position: k,
                    message: format!("expected document token {tok:?} (index {cursor}), found {piece:?}"),
                })
            }
            None => {
                return Err(AnnotationError::Scan {
                    position: k,
                    message: format!("{piece:?} runs past the end of the document"),
                })
            }
        }
    }
    Ok(AnnotatedSequence {
        items,
        origin: Some((start, cursor)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> Document {
        Document::from_sentences("t", &[text]).unwrap()
    }

    #[test]
    fn single_mention() {
        let d = doc("They will complete");
        let seq = linearize_chunk(0..3, &[Mention::new(0, 1, 1)]).unwrap();
        assert_eq!(seq.render(&d), "<m> They | 1 </m> will complete");
        assert_eq!(parse_annotated(&seq.items).unwrap(), vec![Mention::new(0, 1, 1)]);
    }

    #[test]
    fn nested_mentions_open_outermost_first() {
        let d = doc("Wetland Park workers");
        let ms = [Mention::new(0, 2, 0), Mention::new(0, 3, 1)];
        let seq = linearize_chunk(0..3, &ms).unwrap();
        assert_eq!(seq.render(&d), "<m> <m> Wetland Park | 0 </m> workers | 1 </m>");
        assert_eq!(parse_annotated(&seq.items).unwrap(), ms.to_vec());
    }

    #[test]
    fn coinciding_ends_close_innermost_first() {
        let d = doc("Hong Kong 's software");
        let ms = [Mention::new(0, 4, 6), Mention::new(2, 4, 7)];
        let seq = linearize_chunk(0..4, &ms).unwrap();
        assert_eq!(seq.render(&d), "<m> Hong Kong <m> 's software | 7 </m> | 6 </m>");
    }

    #[test]
    fn no_mentions_is_plain_text() {
        let d = doc("a b c");
        assert_eq!(linearize_chunk(0..3, &[]).unwrap().render(&d), "a b c");
    }

    #[test]
    fn crossing_and_duplicate_rejected() {
        let a = Mention::new(0, 2, 0);
        let b = Mention::new(1, 3, 1);
        assert_eq!(
            linearize_chunk(0..3, &[a, b]).unwrap_err(),
            AnnotationError::Crossing(a, b)
        );
        assert!(matches!(
            linearize_chunk(0..3, &[a, Mention::new(0, 2, 1)]).unwrap_err(),
            AnnotationError::Duplicate { start: 0, end: 2 }
        ));
        assert!(matches!(
            linearize_chunk(1..3, &[a]).unwrap_err(),
            AnnotationError::OutsideChunk { .. }
        ));
    }

    #[test]
    fn missing_id_is_reported_at_close() {
        let items = vec![
            Control::MentionOpen.into(),
            Item::Token(0),
            Item::Token(1),
            Control::MentionClose.into(),
        ];
        assert_eq!(
            parse_annotated(&items).unwrap_err(),
            parse_err(3, "</m> must be preceded by `| id`")
        );
    }

    #[test]
    fn parse_errors_name_index() {
        let cases: Vec<(Vec<Item>, usize)> = vec![
            (vec![Control::MentionClose.into()], 0),
            (vec![Item::Token(0), Control::ClusterId(2).into()], 1),
            (vec![Control::MentionOpen.into(), Item::Token(0)], 0),
            (
                vec![
                    Control::MentionOpen.into(),
                    Control::Sep.into(),
                    Control::ClusterId(0).into(),
                    Control::MentionClose.into(),
                ],
                1,
            ),
            (vec![Item::Token(1), Item::Token(0)], 1),
        ];
        for (items, index) in cases {
            match parse_annotated(&items) {
                Err(AnnotationError::Parse { index: got, .. }) => assert_eq!(got, index, "{items:?}"),
                other => panic!("{items:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn scan_round_trip_and_ambiguous_tokens() {
        // a literal "|" and a number as document tokens
        let d = doc("x | 2006 y");
        let ms = [Mention::new(2, 3, 2), Mention::new(0, 4, 0)];
        let seq = linearize_chunk(0..4, &ms).unwrap();
        let text = seq.render(&d);
        assert_eq!(text, "<m> x | <m> 2006 | 2 </m> y | 0 </m>");
        assert_eq!(scan(&text, &d, 0).unwrap(), seq);
    }

    #[test]
    fn scan_errors() {
        let d = doc("a b c");
        assert!(matches!(
            scan("a x c", &d, 0),
            Err(AnnotationError::Scan { position: 1, .. })
        ));
        assert!(matches!(
            scan("a <q> b", &d, 0),
            Err(AnnotationError::Scan { position: 1, .. })
        ));
        assert!(matches!(
            scan("a b c d", &d, 0),
            Err(AnnotationError::Scan { position: 3, .. })
        ));
    }
}

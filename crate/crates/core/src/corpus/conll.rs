//! CoNLL-2012 column format.
//!
//! Two row layouts are accepted: the full shared-task layout (12 or more
//! columns; word in column 3, POS in 4, NER in 10, coreference last) and a
//! compact four-column `word POS NER coref` layout. The writer always emits
//! the 12-column layout so the output feeds the reference scorer directly.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{CorpusError, Document, NerSpan};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Layout {
    Full(usize),
    Compact,
}

impl Layout {
    fn of(columns: usize) -> Option<Layout> {
        match columns {
            4 => Some(Layout::Compact),
            n if n >= 12 => Some(Layout::Full(n)),
            _ => None,
        }
    }

    fn fields<'a>(&self, cols: &[&'a str]) -> (&'a str, &'a str, &'a str, &'a str) {
        match self {
            Layout::Compact => (cols[0], cols[1], cols[2], cols[3]),
            Layout::Full(n) => (cols[3], cols[4], cols[10], cols[n - 1]),
        }
    }
}

struct Builder {
    doc_id: String,
    tokens: Vec<String>,
    sentences: Vec<(usize, usize)>,
    sentence_start: usize,
    pos: Vec<String>,
    ner_fields: Vec<String>,
    coref_fields: Vec<String>,
    layout: Option<Layout>,
}

impl Builder {
    fn new(doc_id: String) -> Self {
        Builder {
            doc_id,
            tokens: Vec::new(),
            sentences: Vec::new(),
            sentence_start: 0,
            pos: Vec::new(),
            ner_fields: Vec::new(),
            coref_fields: Vec::new(),
            layout: None,
        }
    }

    fn close_sentence(&mut self) {
        if self.tokens.len() > self.sentence_start {
            self.sentences.push((self.sentence_start, self.tokens.len()));
            self.sentence_start = self.tokens.len();
        }
    }

    fn finish(mut self, line: usize) -> Result<Document, CorpusError> {
        self.close_sentence();
        let pos = if self.pos.iter().all(|p| p == "-") {
            None
        } else {
            Some(self.pos)
        };
        let ner = if self.ner_fields.iter().any(|f| f == "-") {
            None
        } else {
            Some(parse_ner(&self.doc_id, &self.ner_fields, line)?)
        };
        let clusters = parse_coref(&self.doc_id, &self.coref_fields, line)?;
        Document::new(self.doc_id, self.tokens, self.sentences, pos, ner, Some(clusters))
    }
}

fn parse_ner(doc_id: &str, fields: &[String], line: usize) -> Result<Vec<NerSpan>, CorpusError> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, String)> = None;
    for (i, field) in fields.iter().enumerate() {
        if let Some(rest) = field.strip_prefix('(') {
            if open.is_some() {
                return Err(CorpusError::invalid(doc_id, format!("nested NER span at token {i}")));
            }
            let category = rest.trim_end_matches(')').trim_end_matches('*').to_string();
            open = Some((i, category));
        }
        if field.ends_with(')') {
            let (start, category) = open.take().ok_or_else(|| CorpusError::Parse {
                line,
                message: format!("document {doc_id}: NER span closes at token {i} without opening"),
            })?;
            spans.push(NerSpan {
                start,
                end: i + 1,
                category,
            });
        }
    }
    if let Some((start, category)) = open {
        return Err(CorpusError::invalid(
            doc_id,
            format!("NER span {category} opened at token {start} never closes"),
        ));
    }
    Ok(spans)
}

fn parse_coref(doc_id: &str, fields: &[String], line: usize) -> Result<Vec<Vec<(usize, usize)>>, CorpusError> {
    let mut open: HashMap<String, Vec<usize>> = HashMap::new();
    let mut groups: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut record = |id: &str, span: (usize, usize), groups: &mut HashMap<String, Vec<(usize, usize)>>| {
        if !groups.contains_key(id) {
            order.push(id.to_string());
        }
        groups.entry(id.to_string()).or_default().push(span);
    };
    for (i, field) in fields.iter().enumerate() {
        if field == "-" || field == "_" {
            continue;
        }
        for part in field.split('|') {
            let opens = part.starts_with('(');
            let closes = part.ends_with(')');
            let id = part.trim_start_matches('(').trim_end_matches(')');
            if id.is_empty() || !id.chars().all(|c| c.is_ascii_digit()) {
                return Err(CorpusError::Parse {
                    line,
                    message: format!("document {doc_id}: bad coreference field {field:?} at token {i}"),
                });
            }
            match (opens, closes) {
                (true, true) => record(id, (i, i + 1), &mut groups),
                (true, false) => open.entry(id.to_string()).or_default().push(i),
                (false, true) => {
                    let start = open
                        .get_mut(id)
                        .and_then(Vec::pop)
                        .ok_or_else(|| CorpusError::UnbalancedBracket {
                            doc_id: doc_id.to_string(),
                            cluster: id.to_string(),
                        })?;
                    record(id, (start, i + 1), &mut groups);
                }
                (false, false) => {
                    return Err(CorpusError::Parse {
                        line,
                        message: format!("document {doc_id}: coreference entry {part:?} at token {i} has no bracket"),
                    })
                }
            }
        }
    }
    if let Some((id, _)) = open.iter().find(|(_, starts)| !starts.is_empty()) {
        return Err(CorpusError::UnbalancedBracket {
            doc_id: doc_id.to_string(),
            cluster: id.clone(),
        });
    }
    Ok(order
        .into_iter()
        .map(|id| groups.remove(&id).unwrap_or_default())
        .collect())
}

fn parse_begin(line: &str) -> String {
    // "#begin document (name); part 000"
    let rest = line.trim_start_matches("#begin document").trim();
    let (name, part) = match rest.split_once(';') {
        Some((n, p)) => (n.trim(), p.trim().trim_start_matches("part").trim()),
        None => (rest, "000"),
    };
    let name = name.trim_start_matches('(').trim_end_matches(')');
    format!("{name}_{part}")
}

pub fn read_conll_str(text: &str) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    let mut current: Option<Builder> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.starts_with("#begin document") {
            if current.is_some() {
                return Err(CorpusError::Parse {
                    line: line_no,
                    message: "#begin document before previous #end document".into(),
                });
            }
            current = Some(Builder::new(parse_begin(line)));
            continue;
        }
        if line.starts_with("#end document") {
            let b = current.take().ok_or_else(|| CorpusError::Parse {
                line: line_no,
                message: "#end document without #begin document".into(),
            })?;
            docs.push(b.finish(line_no)?);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let Some(b) = current.as_mut() else {
            if line.is_empty() {
                continue;
            }
            return Err(CorpusError::Parse {
                line: line_no,
                message: "token row outside of a document".into(),
            });
        };
        if line.is_empty() {
            b.close_sentence();
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let layout = Layout::of(cols.len()).ok_or_else(|| CorpusError::Parse {
            line: line_no,
            message: format!("expected 4 or at least 12 columns, found {}", cols.len()),
        })?;
        match b.layout {
            None => b.layout = Some(layout),
            Some(l) if l != layout => {
                return Err(CorpusError::Parse {
                    line: line_no,
                    message: format!("column count {} differs from earlier rows", cols.len()),
                })
            }
            Some(_) => {}
        }
        let (word, pos, ner, coref) = layout.fields(&cols);
        b.tokens.push(word.to_string());
        b.pos.push(pos.to_string());
        b.ner_fields.push(ner.to_string());
        b.coref_fields.push(coref.to_string());
    }
    if let Some(b) = current {
        return Err(CorpusError::Parse {
            line: text.lines().count(),
            message: format!("document {} is missing #end document", b.doc_id),
        });
    }
    Ok(docs)
}

pub fn read_conll(path: impl AsRef<Path>) -> Result<Vec<Document>, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_conll_str(&text)
}

fn split_doc_id(doc_id: &str) -> (&str, &str) {
    match doc_id.rsplit_once('_') {
        Some((name, part)) if !part.is_empty() && part.chars().all(|c| c.is_ascii_digit()) => (name, part),
        _ => (doc_id, "000"),
    }
}

fn coref_fields(doc: &Document) -> Vec<String> {
    let n = doc.len();
    let mut opens: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n];
    let mut singles: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut closes: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n];
    for m in doc.mentions() {
        if m.len() == 1 {
            singles[m.start].push(m.cluster_id);
        } else {
            opens[m.start].push((m.end, m.cluster_id));
            closes[m.end - 1].push((m.start, m.cluster_id));
        }
    }
    (0..n)
        .map(|i| {
            // outer mentions open first, inner mentions close first
            opens[i].sort_by(|a, b| b.cmp(a));
            closes[i].sort_by(|a, b| b.cmp(a));
            let parts: Vec<String> = opens[i]
                .iter()
                .map(|&(_, id)| format!("({id}"))
                .chain(singles[i].iter().map(|id| format!("({id})")))
                .chain(closes[i].iter().map(|&(_, id)| format!("{id})")))
                .collect();
            if parts.is_empty() {
                "-".to_string()
            } else {
                parts.join("|")
            }
        })
        .collect()
}

fn ner_fields(doc: &Document) -> Vec<String> {
    let n = doc.len();
    let Some(spans) = doc.ner() else {
        return vec!["-".to_string(); n];
    };
    let mut fields = vec!["*".to_string(); n];
    for s in spans {
        if s.end - s.start == 1 {
            fields[s.start] = format!("({})", s.category);
        } else {
            fields[s.start] = format!("({}*", s.category);
            fields[s.end - 1] = "*)".to_string();
        }
    }
    fields
}

pub fn write_conll_string(docs: &[Document]) -> String {
    let mut out = String::new();
    for doc in docs {
        let (name, part) = split_doc_id(doc.doc_id());
        let coref = coref_fields(doc);
        let ner = ner_fields(doc);
        let _ = writeln!(out, "#begin document ({name}); part {part}");
        for &(s, e) in doc.sentences() {
            for i in s..e {
                let pos = doc.pos().map_or("-", |p| p[i].as_str());
                let _ = writeln!(
                    out,
                    "{name}\t{part}\t{}\t{}\t{pos}\t-\t-\t-\t-\t-\t{}\t{}",
                    i - s,
                    doc.tokens()[i],
                    ner[i],
                    coref[i]
                );
            }
            out.push('\n');
        }
        out.push_str("#end document\n");
    }
    out
}

pub fn write_conll(docs: &[Document], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    std::fs::write(path, write_conll_string(docs)).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

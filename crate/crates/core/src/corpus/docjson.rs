//! Native one-object-per-line JSON document format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, Document, NerSpan};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocRecord {
    doc_id: String,
    tokens: Vec<String>,
    sentences: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pos: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ner: Option<Vec<(usize, usize, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clusters: Option<Vec<Vec<(usize, usize)>>>,
}

impl From<&Document> for DocRecord {
    fn from(doc: &Document) -> Self {
        DocRecord {
            doc_id: doc.doc_id().to_string(),
            tokens: doc.tokens().to_vec(),
            sentences: doc.sentences().to_vec(),
            pos: doc.pos().map(<[String]>::to_vec),
            ner: doc
                .ner()
                .map(|spans| spans.iter().map(|s| (s.start, s.end, s.category.clone())).collect()),
            clusters: doc
                .clusters()
                .map(|cs| cs.iter().map(|c| c.spans().collect()).collect()),
        }
    }
}

impl DocRecord {
    fn into_document(self) -> Result<Document, CorpusError> {
        let ner = self.ner.map(|spans| {
            spans
                .into_iter()
                .map(|(start, end, category)| NerSpan { start, end, category })
                .collect()
        });
        Document::new(self.doc_id, self.tokens, self.sentences, self.pos, ner, self.clusters)
    }
}

/// Sidecar record listing candidate singleton spans for one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingletonSpans {
    pub doc_id: String,
    pub spans: Vec<(usize, usize)>,
}

pub fn read_docjson_str(text: &str) -> Result<Vec<Document>, CorpusError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let record: DocRecord = serde_json::from_str(line).map_err(|e| CorpusError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            record.into_document()
        })
        .collect()
}

pub fn read_docjson(path: impl AsRef<Path>) -> Result<Vec<Document>, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_docjson_str(&text)
}

pub fn write_docjson_string(docs: &[Document]) -> String {
    let mut out = String::new();
    for doc in docs {
        out.push_str(&serde_json::to_string(&DocRecord::from(doc)).expect("document serializes"));
        out.push('\n');
    }
    out
}

pub fn write_docjson(docs: &[Document], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    std::fs::write(path, write_docjson_string(docs)).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sentence_round_trip() {
        let line = r#"{"doc_id":"d1","tokens":["John","left",".","He","slept"],"sentences":[[0,3],[3,5]],"pos":["NNP","VBD",".","PRP","VBD"],"ner":[[0,1,"PERSON"]],"clusters":[[[0,1],[3,4]]]}"#;
        let docs = read_docjson_str(line).unwrap();
        assert_eq!(docs[0].mentions().len(), 2);
        let written = write_docjson_string(&docs);
        assert_eq!(written.trim(), line);
        assert_eq!(read_docjson_str(&written).unwrap(), docs);
    }

    #[test]
    fn optional_layers_may_be_absent() {
        let docs = read_docjson_str(r#"{"doc_id":"d","tokens":["a"],"sentences":[[0,1]]}"#).unwrap();
        assert!(docs[0].pos().is_none());
        assert!(docs[0].clusters().is_none());
    }

    #[test]
    fn errors() {
        let missing = r#"{"doc_id":"d","sentences":[[0,1]]}"#;
        assert!(matches!(
            read_docjson_str(missing),
            Err(CorpusError::Parse { line: 1, .. })
        ));
        let oob = r#"{"doc_id":"d","tokens":["a","b"],"sentences":[[0,2]],"clusters":[[[1,3]]]}"#;
        assert!(matches!(read_docjson_str(oob), Err(CorpusError::Invalid { .. })));
    }
}

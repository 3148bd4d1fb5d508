use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use increco_core::corpus::{read_conll, read_docjson, write_conll, write_docjson, Document};
use serde::de::DeserializeOwned;
use serde::Serialize;

fn is_conll(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.ends_with("conll"))
}

/// Reads CoNLL (`*.conll`, `*.gold_conll`) or docjson (anything else).
pub fn read_corpus(path: &Path) -> Result<Vec<Document>> {
    let docs = if is_conll(path) {
        read_conll(path)
    } else {
        read_docjson(path)
    };
    docs.with_context(|| format!("reading {}", path.display()))
}

pub fn write_corpus(path: &Path, docs: &[Document]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let written = if is_conll(path) {
        write_conll(docs, path)
    } else {
        write_docjson(docs, path)
    };
    written.with_context(|| format!("writing {}", path.display()))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Opens `path` for writing, or stdout when absent.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    })
}

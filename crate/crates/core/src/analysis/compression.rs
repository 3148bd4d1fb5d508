use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::decode::ChunkRecord;
use crate::state::Mode;

/// Per-chunk input and output lengths of one document's run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocRunLog {
    pub doc_id: String,
    pub mode: Mode,
    pub chunks: Vec<ChunkRecord>,
}

impl DocRunLog {
    fn check(&self) -> Result<(), AnalysisError> {
        for (i, c) in self.chunks.iter().enumerate() {
            if c.index != i {
                return Err(AnalysisError::LogMismatch {
                    doc_id: self.doc_id.clone(),
                    message: format!("chunk {i} is recorded as chunk {}", c.index),
                });
            }
        }
        Ok(())
    }

    fn last_input(&self) -> Result<usize, AnalysisError> {
        self.chunks
            .last()
            .map(|c| c.input_len)
            .ok_or_else(|| AnalysisError::LogMismatch {
                doc_id: self.doc_id.clone(),
                message: "no chunks recorded".into(),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionRow {
    pub doc_id: String,
    pub full_prefix_len: usize,
    pub entity_centric_len: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionReport {
    pub rows: Vec<CompressionRow>,
    pub mean: f64,
}

impl CompressionReport {
    /// One CSV row per document, then a `MEAN` row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), AnalysisError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["doc_id", "full_prefix_len", "entity_centric_len", "ratio"])?;
        for r in &self.rows {
            w.write_record([
                r.doc_id.as_str(),
                &r.full_prefix_len.to_string(),
                &r.entity_centric_len.to_string(),
                &format!("{:.4}", r.ratio),
            ])?;
        }
        w.write_record(["MEAN", "", "", &format!("{:.4}", self.mean)])?;
        w.flush().map_err(|e| AnalysisError::Report(e.to_string()))
    }
}

/// Ratio of last-chunk input lengths, full-prefix over entity-centric.
pub fn compression_ratio(
    full_prefix: &[DocRunLog],
    entity_centric: &[DocRunLog],
) -> Result<CompressionReport, AnalysisError> {
    let by_id: HashMap<&str, &DocRunLog> = entity_centric.iter().map(|l| (l.doc_id.as_str(), l)).collect();
    if let Some(extra) = entity_centric
        .iter()
        .find(|e| !full_prefix.iter().any(|f| f.doc_id == e.doc_id))
    {
        return Err(AnalysisError::DocumentMismatch(extra.doc_id.clone()));
    }
    let mut rows = Vec::with_capacity(full_prefix.len());
    for fp in full_prefix {
        let ec = by_id
            .get(fp.doc_id.as_str())
            .ok_or_else(|| AnalysisError::DocumentMismatch(fp.doc_id.clone()))?;
        for (log, mode) in [(fp, Mode::FullPrefix), (*ec, Mode::EntityCentric)] {
            log.check()?;
            if log.mode != mode {
                return Err(AnalysisError::LogMismatch {
                    doc_id: log.doc_id.clone(),
                    message: format!("expected a {mode:?} run, found {:?}", log.mode),
                });
            }
        }
        if fp.chunks.len() != ec.chunks.len() {
            return Err(AnalysisError::LogMismatch {
                doc_id: fp.doc_id.clone(),
                message: format!("{} chunks against {}", fp.chunks.len(), ec.chunks.len()),
            });
        }
        let (full_prefix_len, entity_centric_len) = (fp.last_input()?, ec.last_input()?);
        rows.push(CompressionRow {
            doc_id: fp.doc_id.clone(),
            full_prefix_len,
            entity_centric_len,
            ratio: full_prefix_len as f64 / entity_centric_len as f64,
        });
    }
    let mean = if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(|r| r.ratio).sum::<f64>() / rows.len() as f64
    };
    Ok(CompressionReport { rows, mean })
}

// SPDX-License-Identifier: Apache-2.0

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{CorpusError, ModuleRecord};
use crate::tokenizer::{encode_fragmented, TokenId, Vocab};
use crate::verilog::fragment_source;

/// One instruction-tuning record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub instruction: String,
    /// Set when no description was available and `instruction` is empty.
    pub needs_description: bool,
    pub output: String,
    pub fragment_spans: Vec<(usize, usize)>,
    pub token_ids_with_frag: Vec<TokenId>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmitStats {
    pub records: usize,
    pub bytes: usize,
}

pub fn to_dataset_record(rec: &ModuleRecord, vocab: &Vocab) -> Result<DatasetRecord, CorpusError> {
    let fc = fragment_source(&rec.code).map_err(|e| CorpusError::Record {
        id: rec.id(),
        message: e.to_string(),
    })?;
    let seq = encode_fragmented(&fc, vocab);
    Ok(DatasetRecord {
        id: rec.id(),
        instruction: rec.description.clone().unwrap_or_default(),
        needs_description: rec.description.is_none(),
        output: rec.code.clone(),
        fragment_spans: fc.iter().map(|f| (f.span.start, f.span.end)).collect(),
        token_ids_with_frag: seq.ids,
    })
}

/// Writes one JSON line per record.
pub fn emit_dataset(
    records: &[ModuleRecord],
    vocab: &Vocab,
    mut out: impl Write,
) -> Result<EmitStats, CorpusError> {
    let mut stats = EmitStats::default();
    for rec in records {
        let mut line = serde_json::to_vec(&to_dataset_record(rec, vocab)?)?;
        line.push(b'\n');
        out.write_all(&line)?;
        stats.records += 1;
        stats.bytes += line.len();
    }
    out.flush()?;
    Ok(stats)
}

pub fn load_dataset(r: impl BufRead) -> Result<Vec<DatasetRecord>, CorpusError> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

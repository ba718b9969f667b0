// SPDX-License-Identifier: Apache-2.0

//! Verilog corpus preparation: module extraction, near-duplicate removal,
//! quality filtering and dataset emission.

mod emit;
mod extract;
mod minhash;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::{train_bpe, TokenizerError, Vocab};
use crate::verilog::{fragment_source, lex, syntax_check, TokenKind};

pub use emit::{emit_dataset, load_dataset, to_dataset_record, DatasetRecord, EmitStats};
pub use extract::extract_modules;
pub use minhash::{
    dedup_signatures, lsh_bands, minhash, shingle_jaccard, shingles, MinHashConfig,
    MinHashSignature,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no .v files found under {0}")]
    NoInput(PathBuf),
    #[error("record {id}: {message}")]
    Record { id: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    LocalDir,
    Archive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFile {
    /// Path relative to the ingested root.
    pub path: PathBuf,
    pub bytes: Vec<u8>,
    pub origin: Origin,
}

impl RawFile {
    pub fn local(path: impl Into<PathBuf>, bytes: Vec<u8>) -> Self {
        Self {
            path: path.into(),
            bytes,
            origin: Origin::LocalDir,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleRecord {
    pub source: PathBuf,
    /// Position of the module within its file.
    pub index: usize,
    pub name: Option<String>,
    pub code: String,
    pub description: Option<String>,
    pub minhash: Option<MinHashSignature>,
}

impl ModuleRecord {
    pub fn id(&self) -> String {
        format!("{}#{}", self.source.display(), self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusConfig {
    pub minhash: MinHashConfig,
    pub dedup_threshold: f64,
    pub comment_ratio_max: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            minhash: MinHashConfig::default(),
            dedup_threshold: 0.85,
            comment_ratio_max: 0.8,
        }
    }
}

/// Counts per stage.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub files: usize,
    pub undecodable_files: usize,
    pub files_without_modules: usize,
    pub modules_extracted: usize,
    pub dropped_duplicates: usize,
    pub dropped_comment_heavy: usize,
    pub dropped_syntax: usize,
    pub kept: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emitted: Option<EmitStats>,
}

/// Reads every `.v` file below `root`, sorted by relative path.
pub fn ingest_dir(root: &Path) -> Result<Vec<RawFile>, CorpusError> {
    let mut paths = Vec::new();
    collect_v_files(root, &mut paths)?;
    paths.sort();
    if paths.is_empty() {
        return Err(CorpusError::NoInput(root.to_path_buf()));
    }
    paths
        .into_iter()
        .map(|p| {
            let bytes = std::fs::read(&p)?;
            let rel = p.strip_prefix(root).unwrap_or(&p).to_path_buf();
            Ok(RawFile::local(rel, bytes))
        })
        .collect()
}

fn collect_v_files(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_v_files(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "v") {
            out.push(path);
        }
    }
    Ok(())
}

/// Reads `<stem>.desc.json` next to a source file: module name → text.
pub fn load_descriptions(root: &Path, file: &RawFile) -> Result<BTreeMap<String, String>, CorpusError> {
    let path = root.join(file.path.with_extension("desc.json"));
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Fraction of the text's bytes that sit in comments.
pub fn comment_ratio(code: &str) -> Option<f64> {
    if code.is_empty() {
        return Some(0.0);
    }
    let tokens = lex(code).ok()?;
    let comment: usize = tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Comment)
        .map(|t| t.span.len())
        .sum();
    Some(comment as f64 / code.len() as f64)
}

/// Near-duplicate removal; records without a signature get one under `cfg`.
pub fn dedup(records: Vec<ModuleRecord>, threshold: f64, cfg: &MinHashConfig) -> Vec<ModuleRecord> {
    let sigs: Vec<MinHashSignature> = records
        .par_iter()
        .map(|r| {
            r.minhash
                .clone()
                .unwrap_or_else(|| minhash(r.code.as_bytes(), cfg))
        })
        .collect();
    let keep = dedup_signatures(&sigs, threshold);
    let mut slots: Vec<Option<ModuleRecord>> = records.into_iter().map(Some).collect();
    keep.into_iter()
        .map(|i| {
            let mut r = slots[i].take().expect("kept once");
            r.minhash = Some(sigs[i].clone());
            r
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QualityOutcome {
    pub kept: Vec<ModuleRecord>,
    pub dropped_comment_heavy: usize,
    pub dropped_syntax: usize,
}

/// Drops comment-dominated records, then records that fail the syntax check.
pub fn filter_quality(records: Vec<ModuleRecord>, comment_ratio_max: f64) -> QualityOutcome {
    let verdicts: Vec<Option<bool>> = records
        .par_iter()
        .map(|r| match comment_ratio(&r.code) {
            Some(ratio) if ratio > comment_ratio_max => Some(false),
            Some(_) if syntax_check(&r.code).ok => None,
            _ => Some(true),
        })
        .collect();
    let mut out = QualityOutcome::default();
    for (rec, verdict) in records.into_iter().zip(verdicts) {
        match verdict {
            None => out.kept.push(rec),
            Some(false) => out.dropped_comment_heavy += 1,
            Some(true) => out.dropped_syntax += 1,
        }
    }
    out
}

/// Ingest → extract → dedup → filter. Emission is left to the caller, who
/// may first need a vocabulary trained on the survivors.
pub fn prepare_corpus(
    root: &Path,
    cfg: &CorpusConfig,
) -> Result<(Vec<ModuleRecord>, PipelineReport), CorpusError> {
    let files = ingest_dir(root)?;
    let mut report = PipelineReport {
        files: files.len(),
        ..PipelineReport::default()
    };
    let per_file: Vec<Result<(bool, Vec<ModuleRecord>), CorpusError>> = files
        .par_iter()
        .map(|f| {
            if std::str::from_utf8(&f.bytes).is_err() {
                return Ok((false, Vec::new()));
            }
            let desc = load_descriptions(root, f)?;
            let mut recs = extract_modules(f);
            for r in &mut recs {
                r.description = r.name.as_ref().and_then(|n| desc.get(n).cloned());
                r.minhash = Some(minhash(r.code.as_bytes(), &cfg.minhash));
            }
            Ok((true, recs))
        })
        .collect();

    let mut records = Vec::new();
    for item in per_file {
        let (decodable, recs) = item?;
        if !decodable {
            report.undecodable_files += 1;
        } else if recs.is_empty() {
            report.files_without_modules += 1;
        }
        records.extend(recs);
    }
    report.modules_extracted = records.len();

    let deduped = dedup(records, cfg.dedup_threshold, &cfg.minhash);
    report.dropped_duplicates = report.modules_extracted - deduped.len();

    let q = filter_quality(deduped, cfg.comment_ratio_max);
    report.dropped_comment_heavy = q.dropped_comment_heavy;
    report.dropped_syntax = q.dropped_syntax;
    report.kept = q.kept.len();
    Ok((q.kept, report))
}

/// Trains a vocabulary on the fragment texts of the given records.
pub fn train_vocab_on_records(records: &[ModuleRecord], vocab_size: usize) -> Result<Vocab, CorpusError> {
    let mut texts = Vec::new();
    for r in records {
        let fc = fragment_source(&r.code).map_err(|e| CorpusError::Record {
            id: r.id(),
            message: e.to_string(),
        })?;
        texts.extend(fc.fragments.into_iter().map(|f| f.text));
    }
    Ok(train_bpe(texts, vocab_size)?)
}

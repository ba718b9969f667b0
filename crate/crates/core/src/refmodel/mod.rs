// SPDX-License-Identifier: Apache-2.0

//! Reference models: a trainable multi-head n-gram, a scripted mock and an
//! oracle that replays a target.

mod ngram;
mod oracle;
mod scripted;

use thiserror::Error;

use crate::specdec::ModelError;

pub use ngram::{train_ngram, NGramHeader, NGramMultiHead};
pub use oracle::{oracle_mock, Lookahead, OracleMock};
pub use scripted::{ScriptEntry, ScriptedMock};

#[derive(Debug, Error)]
pub enum RefModelError {
    #[error("cannot train on an empty corpus")]
    EmptyCorpus,
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("invalid model file: {0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

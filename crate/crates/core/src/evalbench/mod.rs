// SPDX-License-Identifier: Apache-2.0

//! Speed, speedup, pass@k and pass-rate metrics plus a benchmark harness.

mod bench;
mod checker;
mod metrics;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specdec::{DecodeError, DecodeTrace};
use crate::tokenizer::TokenizerError;

pub use bench::{
    load_prompts, run_benchmark, BenchConfig, BenchOutcome, JobKey, MethodMetrics, MethodSpec,
    MetricReport, ModelFactory, ModelHandle, Prompt, TimingMode,
};
pub use checker::{CheckOutcome, CheckerConfig};
pub use metrics::{mean_accepted_length, pass_at_k, pass_rate, speed, speedup};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("nothing to aggregate: {0}")]
    Empty(&'static str),
    #[error("run for prompt {0} took no time")]
    ZeroTime(String),
    #[error("{0}")]
    Domain(String),
    #[error("external checker failed: {0}")]
    Checker(String),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ours,
    MedusaStyle,
    Ntp,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ours => "ours",
            Method::MedusaStyle => "medusa-style",
            Method::Ntp => "ntp",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checks {
    pub syntax_ok: bool,
    /// Present only when an external checker ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional_ok: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Checks {
    /// Functional verdict when available, syntax otherwise.
    pub fn correct(&self) -> bool {
        self.functional_ok.unwrap_or(self.syntax_ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub prompt_id: String,
    pub method: Method,
    pub sample: usize,
    pub output_text: String,
    pub trace: DecodeTrace,
    /// Seconds charged to this run under the configured timing mode.
    pub time_s: f64,
    pub checks: Checks,
}

// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use verispec::corpus::CorpusConfig;
use verispec::evalbench::BenchConfig;
use verispec::specdec::AcceptanceParams;

use crate::fail::{usage, CmdResult, OrFail, EXIT_USAGE};

/// Everything a run needs. Loaded from TOML, then overridden by flags.
/// The top-level `seed` and `workers` win over their copies in sections.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    /// Thread budget; 0 uses every core.
    pub workers: usize,
    pub paths: Paths,
    pub tokenizer: TokenizerParams,
    pub labels: LabelParams,
    pub refmodel: RefModelParams,
    pub acceptance: AcceptanceParams,
    pub corpus: CorpusConfig,
    pub bench: BenchConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vocab: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TokenizerParams {
    pub vocab_size: usize,
}

impl Default for TokenizerParams {
    fn default() -> Self {
        Self { vocab_size: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelParams {
    pub heads: usize,
}

impl Default for LabelParams {
    fn default() -> Self {
        Self { heads: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefModelParams {
    pub n: usize,
    pub heads: usize,
    pub alpha: f64,
}

impl Default for RefModelParams {
    fn default() -> Self {
        Self {
            n: 3,
            heads: 4,
            alpha: 1.0,
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> CmdResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .or_code(EXIT_USAGE, format!("reading config {}", path.display()))?;
        toml::from_str(&text).or_code(EXIT_USAGE, format!("parsing config {}", path.display()))
    }

    /// Pushes the top-level seed and worker budget into the sections.
    pub fn propagate(&mut self) {
        self.acceptance.seed = self.seed;
        self.bench.seed = self.seed;
        self.bench.workers = self.workers;
    }
}

pub fn set<T>(slot: &mut T, flag: &Option<T>)
where
    T: Clone,
{
    if let Some(v) = flag {
        *slot = v.clone();
    }
}

pub fn set_path(slot: &mut Option<PathBuf>, flag: &Option<PathBuf>) {
    if flag.is_some() {
        slot.clone_from(flag);
    }
}

pub fn require<'a>(slot: &'a Option<PathBuf>, flag: &str) -> CmdResult<&'a Path> {
    slot.as_deref()
        .ok_or_else(|| usage(format!("missing {flag} (or its config entry)")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_toml() {
        let cfg = Config::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<Config>(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<Config>("sede = 3").is_err());
        assert!(toml::from_str::<Config>("[acceptance]\nepsilom = 0.1").is_err());
        let cfg: Config = toml::from_str("seed = 3\n[labels]\nheads = 4").unwrap();
        assert_eq!((cfg.seed, cfg.labels.heads), (3, 4));
    }
}

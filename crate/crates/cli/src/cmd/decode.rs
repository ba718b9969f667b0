// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::ValueEnum;
use verispec::refmodel::{NGramMultiHead, OracleMock};
use verispec::specdec::{decode, ntp_decode, DecodeResult, SpeculativeModel, StopCondition, Truncation, WithLatency};
use verispec::tokenizer::{decode_to_string, encode, encode_fragmented, Vocab};
use verispec::verilog::fragment_source;

use super::{load_vocab, read_text};
use crate::config::{require, set, set_path, Config};
use crate::fail::{data, usage, CmdResult, OrFail};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Speculative decoding with fragment-aligned acceptance.
    Spec,
    /// One token per model call.
    Ntp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TruncationArg {
    Strict,
    Lenient,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Trained n-gram model.
    #[arg(long, conflicts_with = "oracle")]
    model: Option<PathBuf>,
    /// Replay the fragment-encoded text of this Verilog file instead of a
    /// trained model.
    #[arg(long)]
    oracle: Option<PathBuf>,
    #[arg(long, conflicts_with = "prompt_file")]
    prompt: Option<String>,
    #[arg(long)]
    prompt_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Spec)]
    mode: Mode,
    /// Heads used per step; 0 proposes base tokens only.
    #[arg(long)]
    heads: Option<usize>,
    /// Budget in generated ids, [FRAG] included.
    #[arg(long)]
    max_tokens: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum)]
    truncation: Option<TruncationArg>,
    /// Write the per-step trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Delay added to every model call.
    #[arg(long, default_value_t = 0.0)]
    latency_ms: f64,
}

impl Args {
    pub fn apply(&self, cfg: &mut Config) {
        set_path(&mut cfg.paths.vocab, &self.vocab);
        set_path(&mut cfg.paths.model, &self.model);
        let p = &mut cfg.acceptance;
        set(&mut p.temperature, &self.temperature);
        set(&mut p.epsilon, &self.epsilon);
        set(&mut p.delta, &self.delta);
        if let Some(h) = self.heads {
            p.top_k_per_head.resize(h + 1, 1);
        }
        if let Some(t) = self.truncation {
            p.fragment_truncation = match t {
                TruncationArg::Strict => Truncation::Strict,
                TruncationArg::Lenient => Truncation::Lenient,
            };
        }
        set(&mut cfg.bench.max_tokens, &self.max_tokens);
    }

    fn model(&self, cfg: &Config, vocab: &Vocab, prompt_len: usize) -> CmdResult<Box<dyn SpeculativeModel>> {
        if let Some(path) = &self.oracle {
            let src = read_text(path)?;
            let fc = fragment_source(&src).or_data(format!("fragmenting {}", path.display()))?;
            let heads = cfg.acceptance.top_k_per_head.len().saturating_sub(1);
            let oracle = OracleMock::new(encode_fragmented(&fc, vocab).ids, heads)
                .with_prompt_len(prompt_len)
                .with_vocab_size(vocab.len());
            return Ok(Box::new(oracle));
        }
        let path = require(&cfg.paths.model, "--model or --oracle")?;
        let model = NGramMultiHead::load(path).or_data(format!("loading {}", path.display()))?;
        if model.header().vocab_hash != vocab.fingerprint() {
            return Err(data(format!("{} was trained with a different vocabulary", path.display())));
        }
        Ok(Box::new(model))
    }

    pub fn run(&self, cfg: &Config) -> CmdResult {
        let vocab = load_vocab(require(&cfg.paths.vocab, "--vocab")?)?;
        let prompt = match (&self.prompt, &self.prompt_file) {
            (Some(p), _) => p.clone(),
            (None, Some(path)) => read_text(path)?,
            (None, None) => String::new(),
        };
        let prompt_ids = encode(prompt.as_bytes(), &vocab).ids;
        let model = self.model(cfg, &vocab, prompt_ids.len())?;
        if self.latency_ms < 0.0 || !self.latency_ms.is_finite() {
            return Err(usage("--latency-ms must be a nonnegative number"));
        }
        let model = WithLatency::from_ms(model.as_ref(), self.latency_ms);
        let stop = StopCondition::new(cfg.bench.max_tokens);
        let p = &cfg.acceptance;
        let result: DecodeResult = match self.mode {
            Mode::Spec => decode(&model, &prompt_ids, p, stop),
            Mode::Ntp => ntp_decode(&model, &prompt_ids, p.temperature, p.seed, stop),
        }
        .map_err(|e| match e {
            verispec::specdec::DecodeError::InvalidParams(_) => usage(e),
            other => data(other),
        })?;

        let text = decode_to_string(&result.output.ids, &vocab).or_data("decoding output")?;
        let mut out = std::io::stdout().lock();
        writeln!(out, "{text}").or_data("writing stdout")?;

        let t = &result.trace;
        eprintln!(
            "steps {} tokens {} calls {} wall {:.3}s mean accepted {:.3} fragment violations {}",
            t.steps.len(),
            t.total_tokens,
            t.model_calls,
            t.wall_time,
            t.mean_accepted_length(),
            t.fragment_violations()
        );
        if let Some(path) = &self.trace {
            let file = File::create(path).or_data(format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            t.write_jsonl(&mut w)
                .and_then(|_| w.flush())
                .or_data(format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

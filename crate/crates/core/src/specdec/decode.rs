// SPDX-License-Identifier: Apache-2.0

use std::io::{BufRead, Write};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::accept::{accepted_prefix, sample_base, select_winner};
use super::{
    propose_candidates, truncate_to_fragment, AcceptanceParams, DecodeError, Distribution,
    ModelError, SpeculativeModel, StepOutput,
};
use crate::tokenizer::{strip_frag, TokenId, TokenSequence, EOS, FRAG};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopCondition {
    /// Bound on emitted ids, `[FRAG]` included.
    pub max_tokens: usize,
    pub eos: Option<TokenId>,
}

impl StopCondition {
    pub fn new(max_tokens: usize) -> Self {
        Self {
            max_tokens,
            eos: Some(EOS),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeStep {
    pub proposed: Vec<Vec<TokenId>>,
    pub accepted_len: usize,
    pub emitted: Vec<TokenId>,
    pub candidate_index: usize,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecodeTrace {
    pub steps: Vec<DecodeStep>,
    /// Content tokens emitted, `[FRAG]` excluded.
    pub total_tokens: usize,
    pub wall_time: f64,
    pub model_calls: usize,
}

impl DecodeTrace {
    /// Emitted ids per step, `[FRAG]` included.
    pub fn mean_accepted_length(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        let n: usize = self.steps.iter().map(|s| s.emitted.len()).sum();
        n as f64 / self.steps.len() as f64
    }

    /// Steps whose emission is longer than one id yet does not end in `[FRAG]`.
    pub fn fragment_violations(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.emitted.len() > 1 && s.emitted.last() != Some(&FRAG))
            .count()
    }

    pub fn emitted_ids(&self) -> Vec<TokenId> {
        self.steps.iter().flat_map(|s| s.emitted.iter().copied()).collect()
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        for step in &self.steps {
            serde_json::to_writer(&mut w, step)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("json is utf-8")
    }

    /// Rebuilds the step list; counters are recomputed from the steps.
    pub fn read_jsonl(r: impl BufRead) -> Result<Self, serde_json::Error> {
        let mut steps = Vec::new();
        for line in r.lines() {
            let line = line.map_err(serde_json::Error::io)?;
            if !line.trim().is_empty() {
                steps.push(serde_json::from_str::<DecodeStep>(&line)?);
            }
        }
        let total_tokens = steps
            .iter()
            .flat_map(|s| &s.emitted)
            .filter(|&&t| t != FRAG)
            .count();
        Ok(Self {
            steps,
            total_tokens,
            ..Self::default()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Generated content with `[FRAG]` removed.
    pub output: TokenSequence,
    /// Generated ids as emitted, `[FRAG]` kept.
    pub raw: Vec<TokenId>,
    pub trace: DecodeTrace,
}

impl DecodeResult {
    fn finish(raw: Vec<TokenId>, steps: Vec<DecodeStep>, calls: usize, start: Instant) -> Self {
        let output = TokenSequence::new(strip_frag(&raw));
        let trace = DecodeTrace {
            steps,
            total_tokens: output.len(),
            wall_time: start.elapsed().as_secs_f64(),
            model_calls: calls,
        };
        Self { output, raw, trace }
    }
}

fn check_step(out: &StepOutput, vocab: usize) -> Result<(), ModelError> {
    let bad = std::iter::once(&out.base)
        .chain(&out.heads)
        .find(|d| d.vocab_size() != vocab);
    match bad {
        Some(d) => Err(ModelError::Shape(format!(
            "distribution over {} tokens, model vocab is {vocab}",
            d.vocab_size()
        ))),
        None => Ok(()),
    }
}

/// Speculative decoding: one prefill call, then one tree pass per step.
///
/// Each step proposes candidate paths from the current base and head
/// distributions, verifies them all in a single [`SpeculativeModel::tree_step`],
/// keeps the longest accepted prefix and cuts it back to a fragment boundary.
/// The tree pass also yields the distributions for the next step.
pub fn decode<M: SpeculativeModel + ?Sized>(
    model: &M,
    prompt: &[TokenId],
    p: &AcceptanceParams,
    stop: StopCondition,
) -> Result<DecodeResult, DecodeError> {
    p.validate()?;
    let start = Instant::now();
    let vocab = model.vocab_size();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut ctx = prompt.to_vec();
    let mut raw = Vec::new();
    let mut steps = Vec::new();
    let mut calls = 0;
    if stop.max_tokens == 0 {
        return Ok(DecodeResult::finish(raw, steps, calls, start));
    }

    let mut state = model.step(&ctx)?;
    calls += 1;
    check_step(&state, vocab)?;

    while raw.len() < stop.max_tokens {
        let t0 = Instant::now();
        let first = sample_base(&state, p, &mut rng);
        let candidates = propose_candidates(&state, p, first);
        let lead = candidates[0][0];
        if Some(lead) == stop.eos {
            break;
        }

        let tree = model.tree_step(&ctx, &candidates)?;
        calls += 1;
        if tree.len() != candidates.len()
            || tree.iter().zip(&candidates).any(|(t, c)| t.len() != c.len())
        {
            return Err(ModelError::Shape("tree_step output does not match candidates".into()).into());
        }

        let mut lengths = Vec::with_capacity(candidates.len());
        for (cand, outs) in candidates.iter().zip(&tree) {
            let dists: Vec<&Distribution> = std::iter::once(&state.base)
                .chain(outs.iter().map(|o| &o.base))
                .collect();
            lengths.push(accepted_prefix(cand, &dists, lead, p)?);
        }
        let verdict = select_winner(lengths);
        let winner = &candidates[verdict.winner];
        let mut emitted = truncate_to_fragment(&winner[..verdict.accepted_len], p.fragment_truncation);
        if let Some(eos) = stop.eos {
            if let Some(e) = emitted.iter().position(|&t| t == eos) {
                if e == 0 {
                    break;
                }
                emitted = truncate_to_fragment(&emitted[..e], p.fragment_truncation);
            }
        }
        let remaining = stop.max_tokens - raw.len();
        if emitted.len() > remaining {
            emitted = truncate_to_fragment(&emitted[..remaining], p.fragment_truncation);
        }

        state = tree[verdict.winner][emitted.len() - 1].clone();
        check_step(&state, vocab)?;
        ctx.extend_from_slice(&emitted);
        raw.extend_from_slice(&emitted);
        steps.push(DecodeStep {
            proposed: candidates,
            accepted_len: verdict.accepted_len,
            emitted,
            candidate_index: verdict.winner,
            elapsed_s: t0.elapsed().as_secs_f64(),
        });
    }
    Ok(DecodeResult::finish(raw, steps, calls, start))
}

/// Conventional decoding: one model call and one token per step.
pub fn ntp_decode<M: SpeculativeModel + ?Sized>(
    model: &M,
    prompt: &[TokenId],
    temperature: f64,
    seed: u64,
    stop: StopCondition,
) -> Result<DecodeResult, DecodeError> {
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(DecodeError::InvalidParams(
            "temperature must be finite and nonnegative".into(),
        ));
    }
    let start = Instant::now();
    let vocab = model.vocab_size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ctx = prompt.to_vec();
    let mut raw = Vec::new();
    let mut steps = Vec::new();
    let mut calls = 0;
    while raw.len() < stop.max_tokens {
        let t0 = Instant::now();
        let out = model.step(&ctx)?;
        calls += 1;
        check_step(&out, vocab)?;
        let tok = out.base.sample(temperature, &mut rng);
        if Some(tok) == stop.eos {
            break;
        }
        ctx.push(tok);
        raw.push(tok);
        steps.push(DecodeStep {
            proposed: vec![vec![tok]],
            accepted_len: 1,
            emitted: vec![tok],
            candidate_index: 0,
            elapsed_s: t0.elapsed().as_secs_f64(),
        });
    }
    Ok(DecodeResult::finish(raw, steps, calls, start))
}


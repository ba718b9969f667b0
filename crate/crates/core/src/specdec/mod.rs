// SPDX-License-Identifier: Apache-2.0

//! Multi-head speculative decoding with typical acceptance and
//! fragment-boundary truncation.

mod accept;
mod decode;
mod dist;
mod model;

use thiserror::Error;

use crate::tokenizer::TokenId;

pub use accept::{
    accepted_prefix, propose_candidates, select_winner, truncate_to_fragment, typical_accept,
    verify_and_accept, AcceptanceParams, Truncation, Verdict,
};
pub use decode::{decode, ntp_decode, DecodeResult, DecodeStep, DecodeTrace, StopCondition};
pub use dist::{entropy, Distribution, PROB_FLOOR};
pub use model::{SpeculativeModel, StepOutput, WithLatency};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("script exhausted after {calls} calls")]
    ScriptExhausted { calls: usize },
    #[error("script expected a `{expected}` call but got `{found}`")]
    ScriptMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("token {token} outside vocabulary of {vocab}")]
    TokenOutOfRange { token: TokenId, vocab: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid decoding parameters: {0}")]
    InvalidParams(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::{EOS, FRAG};

    /// After token t comes `next(t)`; heads look further along the same chain.
    struct Chain {
        vocab: usize,
        heads: usize,
        next: fn(TokenId) -> TokenId,
    }

    impl SpeculativeModel for Chain {
        fn vocab_size(&self) -> usize {
            self.vocab
        }
        fn num_heads(&self) -> usize {
            self.heads
        }
        fn step(&self, ctx: &[TokenId]) -> Result<StepOutput, ModelError> {
            let mut t = ctx.last().copied().unwrap_or(0);
            let mut dists = Vec::new();
            for _ in 0..=self.heads {
                t = (self.next)(t);
                // mostly the chain token, a little mass elsewhere
                let mut p = vec![0.02 / (self.vocab - 1) as f64; self.vocab];
                p[t as usize] = 0.98;
                dists.push(Distribution::new(p)?);
            }
            let base = dists.remove(0);
            Ok(StepOutput { base, heads: dists })
        }
    }

    fn chain_next(t: TokenId) -> TokenId {
        match t {
            0 => 1,
            1 => 2,
            2 => FRAG,
            FRAG => 3,
            3 => FRAG,
            _ => 0,
        }
    }

    fn chain() -> Chain {
        Chain {
            vocab: EOS as usize + 1,
            heads: 3,
            next: chain_next,
        }
    }

    #[test]
    fn greedy_zero_heads_matches_ntp() {
        let m = chain();
        let stop = StopCondition::new(40);
        let spec = decode(&m, &[0], &AcceptanceParams::greedy(0), stop).unwrap();
        let ntp = ntp_decode(&m, &[0], 0.0, 0, stop).unwrap();
        assert_eq!(spec.raw, ntp.raw);
        assert_eq!(spec.raw.len(), 40);
        assert_eq!(ntp.trace.model_calls, 40);
        assert_eq!(spec.trace.model_calls, 41);
    }

    #[test]
    fn heads_emit_whole_fragments() {
        let m = chain();
        let stop = StopCondition::new(40);
        let res = decode(&m, &[0], &AcceptanceParams::greedy(3), stop).unwrap();
        let ntp = ntp_decode(&m, &[0], 0.0, 0, stop).unwrap();
        assert_eq!(res.raw, ntp.raw);
        assert_eq!(res.trace.fragment_violations(), 0);
        assert!(res.trace.steps.len() < ntp.trace.steps.len());
        for s in &res.trace.steps {
            assert!(s.emitted.len() == 1 || *s.emitted.last().unwrap() == FRAG);
            assert!(s.proposed[s.candidate_index].starts_with(&s.emitted));
        }
    }

    #[test]
    fn max_tokens_zero() {
        let m = chain();
        let res = decode(&m, &[], &AcceptanceParams::default(), StopCondition::new(0)).unwrap();
        assert!(res.raw.is_empty());
        assert_eq!(res.trace.model_calls, 0);
        let res = ntp_decode(&m, &[], 0.0, 0, StopCondition::new(0)).unwrap();
        assert!(res.output.is_empty());
    }

    #[test]
    fn budget_is_respected_at_fragment_edges() {
        let m = chain();
        for max in 1..12 {
            let res = decode(&m, &[0], &AcceptanceParams::greedy(3), StopCondition::new(max)).unwrap();
            assert_eq!(res.raw.len(), max);
            assert_eq!(res.trace.fragment_violations(), 0);
        }
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let m = chain();
        let p = AcceptanceParams {
            temperature: 0.8,
            seed: 11,
            ..AcceptanceParams::default()
        };
        let a = decode(&m, &[0], &p, StopCondition::new(60)).unwrap();
        let b = decode(&m, &[0], &p, StopCondition::new(60)).unwrap();
        assert_eq!(a.raw, b.raw);
        assert_eq!(strip_timing(&a.trace).to_jsonl(), strip_timing(&b.trace).to_jsonl());
    }

    fn strip_timing(t: &DecodeTrace) -> DecodeTrace {
        let mut t = t.clone();
        for s in &mut t.steps {
            s.elapsed_s = 0.0;
        }
        t
    }

    #[test]
    fn jsonl_roundtrip() {
        let m = chain();
        let res = decode(&m, &[0], &AcceptanceParams::greedy(2), StopCondition::new(20)).unwrap();
        let text = res.trace.to_jsonl();
        assert_eq!(text.lines().count(), res.trace.steps.len());
        let back = DecodeTrace::read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back.steps, res.trace.steps);
        assert_eq!(back.total_tokens, res.trace.total_tokens);
    }

    #[test]
    fn eos_stops_generation() {
        fn to_eos(t: TokenId) -> TokenId {
            match t {
                0 => 1,
                1 => FRAG,
                _ => EOS,
            }
        }
        let m = Chain {
            vocab: EOS as usize + 1,
            heads: 4,
            next: to_eos,
        };
        let res = decode(&m, &[0], &AcceptanceParams::greedy(4), StopCondition::new(100)).unwrap();
        assert_eq!(res.raw, vec![1, FRAG]);
        assert_eq!(res.trace.steps.len(), 1);
        let ntp = ntp_decode(&m, &[0], 0.0, 0, StopCondition::new(100)).unwrap();
        assert_eq!(ntp.raw, vec![1, FRAG]);
        assert_eq!(ntp.output.ids, vec![1]);
    }

    #[test]
    fn default_verify_is_consistent_with_step() {
        let m = chain();
        let ctx = [0, 1];
        let proposed = [2, FRAG, 3];
        let v = m.verify(&ctx, &proposed).unwrap();
        for j in 0..proposed.len() {
            let mut c = ctx.to_vec();
            c.extend_from_slice(&proposed[..j]);
            assert_eq!(v[j], m.step(&c).unwrap().base);
        }
    }
}

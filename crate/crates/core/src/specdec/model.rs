// SPDX-License-Identifier: Apache-2.0

use std::thread;
use std::time::Duration;

use super::{Distribution, ModelError};
use crate::tokenizer::TokenId;

/// Base distribution for the next token plus one distribution per head;
/// head `i` (1-based) predicts the token `i` positions after the base one.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub base: Distribution,
    pub heads: Vec<Distribution>,
}

/// A multi-head language model the decoding engine can drive.
///
/// Implementations that are `Sync` may be shared across concurrent decodes;
/// stateful ones (such as scripted mocks) must be used by one decode at a time.
pub trait SpeculativeModel {
    fn vocab_size(&self) -> usize;

    fn num_heads(&self) -> usize;

    fn step(&self, context: &[TokenId]) -> Result<StepOutput, ModelError>;

    /// `result[j] == step(context ⧺ proposed[..j]).base`, computed in one call.
    fn verify(&self, context: &[TokenId], proposed: &[TokenId]) -> Result<Vec<Distribution>, ModelError> {
        let mut ctx = context.to_vec();
        let mut out = Vec::with_capacity(proposed.len());
        for &tok in proposed {
            out.push(self.step(&ctx)?.base);
            ctx.push(tok);
        }
        Ok(out)
    }

    /// One pass over a candidate tree:
    /// `result[c][j] == step(context ⧺ candidates[c][..=j])`.
    ///
    /// This is what a tree-attention forward pass yields; it lets one call
    /// both verify every candidate and prepare the next step.
    fn tree_step(
        &self,
        context: &[TokenId],
        candidates: &[Vec<TokenId>],
    ) -> Result<Vec<Vec<StepOutput>>, ModelError> {
        candidates
            .iter()
            .map(|cand| {
                let mut ctx = context.to_vec();
                cand.iter()
                    .map(|&tok| {
                        ctx.push(tok);
                        self.step(&ctx)
                    })
                    .collect()
            })
            .collect()
    }

    /// Artificial delay charged per call, if any.
    fn latency(&self) -> Option<Duration> {
        None
    }
}

impl<M: SpeculativeModel + ?Sized> SpeculativeModel for &M {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn num_heads(&self) -> usize {
        (**self).num_heads()
    }
    fn step(&self, context: &[TokenId]) -> Result<StepOutput, ModelError> {
        (**self).step(context)
    }
    fn verify(&self, context: &[TokenId], proposed: &[TokenId]) -> Result<Vec<Distribution>, ModelError> {
        (**self).verify(context, proposed)
    }
    fn tree_step(
        &self,
        context: &[TokenId],
        candidates: &[Vec<TokenId>],
    ) -> Result<Vec<Vec<StepOutput>>, ModelError> {
        (**self).tree_step(context, candidates)
    }
    fn latency(&self) -> Option<Duration> {
        (**self).latency()
    }
}

/// Sleeps for a fixed time before every call, standing in for one forward pass.
#[derive(Debug, Clone)]
pub struct WithLatency<M> {
    inner: M,
    delay: Duration,
}

impl<M> WithLatency<M> {
    pub fn new(inner: M, delay: Duration) -> Self {
        Self { inner, delay }
    }

    pub fn from_ms(inner: M, ms: f64) -> Self {
        Self::new(inner, Duration::from_secs_f64(ms / 1000.0))
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }

    fn pause(&self) {
        if !self.delay.is_zero() {
            thread::sleep(self.delay);
        }
    }
}

impl<M: SpeculativeModel> SpeculativeModel for WithLatency<M> {
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }
    fn num_heads(&self) -> usize {
        self.inner.num_heads()
    }
    fn step(&self, context: &[TokenId]) -> Result<StepOutput, ModelError> {
        self.pause();
        self.inner.step(context)
    }
    fn verify(&self, context: &[TokenId], proposed: &[TokenId]) -> Result<Vec<Distribution>, ModelError> {
        self.pause();
        self.inner.verify(context, proposed)
    }
    fn tree_step(
        &self,
        context: &[TokenId],
        candidates: &[Vec<TokenId>],
    ) -> Result<Vec<Vec<StepOutput>>, ModelError> {
        self.pause();
        self.inner.tree_step(context, candidates)
    }
    fn latency(&self) -> Option<Duration> {
        Some(self.delay)
    }
}

// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::specdec::{Distribution, ModelError, SpeculativeModel, StepOutput};
use crate::tokenizer::{TokenId, EOS, FRAG, PAD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lookahead {
    /// Heads replay the target up to the end of the current fragment.
    #[default]
    Fragment,
    /// Heads replay the target as far as they reach.
    Full,
}

/// Model whose base and heads read ahead in a fixed target sequence.
///
/// The position is the context length minus the prompt length. Past the
/// end of the target the base predicts `[EOS]`. Beyond their look-ahead,
/// heads propose a token the base will reject.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleMock {
    target: Vec<TokenId>,
    prompt_len: usize,
    heads: usize,
    vocab: usize,
    lookahead: Lookahead,
}

pub fn oracle_mock(target: &[TokenId], heads: usize) -> OracleMock {
    OracleMock::new(target.to_vec(), heads)
}

impl OracleMock {
    pub fn new(target: Vec<TokenId>, heads: usize) -> Self {
        let vocab = target
            .iter()
            .copied()
            .max()
            .unwrap_or(0)
            .max(EOS) as usize
            + 1;
        Self {
            target,
            prompt_len: 0,
            heads,
            vocab,
            lookahead: Lookahead::Fragment,
        }
    }

    pub fn with_prompt_len(mut self, n: usize) -> Self {
        self.prompt_len = n;
        self
    }

    pub fn with_vocab_size(mut self, v: usize) -> Self {
        self.vocab = self.vocab.max(v);
        self
    }

    pub fn with_lookahead(mut self, l: Lookahead) -> Self {
        self.lookahead = l;
        self
    }

    pub fn target(&self) -> &[TokenId] {
        &self.target
    }

    fn at(&self, q: usize) -> TokenId {
        self.target.get(q).copied().unwrap_or(EOS)
    }

    fn head_token(&self, pos: usize, i: usize) -> TokenId {
        let q = pos + i;
        let visible = match self.lookahead {
            Lookahead::Full => true,
            Lookahead::Fragment => {
                let frag_end = self.target[pos.min(self.target.len())..]
                    .iter()
                    .position(|&t| t == FRAG)
                    .map(|k| pos + k)
                    .unwrap_or(self.target.len().saturating_sub(1));
                q <= frag_end
            }
        };
        match (visible, self.at(q)) {
            (true, t) => t,
            (false, EOS) => PAD,
            (false, _) => EOS,
        }
    }
}

impl SpeculativeModel for OracleMock {
    fn vocab_size(&self) -> usize {
        self.vocab
    }

    fn num_heads(&self) -> usize {
        self.heads
    }

    fn step(&self, context: &[TokenId]) -> Result<StepOutput, ModelError> {
        let pos = context.len().saturating_sub(self.prompt_len);
        Ok(StepOutput {
            base: Distribution::one_hot(self.vocab, self.at(pos)),
            heads: (1..=self.heads)
                .map(|i| Distribution::one_hot(self.vocab, self.head_token(pos, i)))
                .collect(),
        })
    }
}

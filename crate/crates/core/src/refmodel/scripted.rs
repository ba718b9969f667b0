// SPDX-License-Identifier: Apache-2.0

use std::cell::{Cell, RefCell};
use std::collections::VecDeque;

use crate::specdec::{Distribution, ModelError, SpeculativeModel, StepOutput};
use crate::tokenizer::TokenId;

#[derive(Debug, Clone, PartialEq)]
pub enum ScriptEntry {
    Step(StepOutput),
    Verify(Vec<Distribution>),
    Tree(Vec<Vec<StepOutput>>),
}

impl ScriptEntry {
    fn kind(&self) -> &'static str {
        match self {
            ScriptEntry::Step(_) => "step",
            ScriptEntry::Verify(_) => "verify",
            ScriptEntry::Tree(_) => "tree_step",
        }
    }
}

/// Replays canned responses in order, ignoring the context.
///
/// Each call consumes one entry; a call of the wrong kind or past the end
/// of the script is an error. Holds a cursor, so it is not `Sync`.
#[derive(Debug)]
pub struct ScriptedMock {
    vocab: usize,
    heads: usize,
    script: RefCell<VecDeque<ScriptEntry>>,
    calls: Cell<usize>,
}

impl ScriptedMock {
    pub fn new(vocab: usize, heads: usize, script: Vec<ScriptEntry>) -> Self {
        Self {
            vocab,
            heads,
            script: RefCell::new(script.into()),
            calls: Cell::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.get()
    }

    pub fn remaining(&self) -> usize {
        self.script.borrow().len()
    }

    fn next(&self, want: &'static str) -> Result<ScriptEntry, ModelError> {
        let mut script = self.script.borrow_mut();
        let entry = script.pop_front().ok_or(ModelError::ScriptExhausted {
            calls: self.calls.get(),
        })?;
        if entry.kind() != want {
            let scripted = entry.kind();
            script.push_front(entry);
            return Err(ModelError::ScriptMismatch {
                expected: scripted,
                found: want,
            });
        }
        self.calls.set(self.calls.get() + 1);
        Ok(entry)
    }
}

impl SpeculativeModel for ScriptedMock {
    fn vocab_size(&self) -> usize {
        self.vocab
    }

    fn num_heads(&self) -> usize {
        self.heads
    }

    fn step(&self, _context: &[TokenId]) -> Result<StepOutput, ModelError> {
        match self.next("step")? {
            ScriptEntry::Step(s) => Ok(s),
            _ => unreachable!(),
        }
    }

    fn verify(&self, _context: &[TokenId], _proposed: &[TokenId]) -> Result<Vec<Distribution>, ModelError> {
        match self.next("verify")? {
            ScriptEntry::Verify(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    fn tree_step(
        &self,
        _context: &[TokenId],
        _candidates: &[Vec<TokenId>],
    ) -> Result<Vec<Vec<StepOutput>>, ModelError> {
        match self.next("tree_step")? {
            ScriptEntry::Tree(t) => Ok(t),
            _ => unreachable!(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specdec::{propose_candidates, verify_and_accept, AcceptanceParams};

    fn oh(t: TokenId) -> Distribution {
        Distribution::one_hot(8, t)
    }

    #[test]
    fn exhausted_and_mismatched() {
        let m = ScriptedMock::new(8, 0, vec![ScriptEntry::Verify(vec![oh(1)])]);
        assert!(matches!(m.step(&[]), Err(ModelError::ScriptMismatch { .. })));
        assert_eq!(m.verify(&[], &[1]).unwrap(), vec![oh(1)]);
        assert!(matches!(
            m.verify(&[], &[1]),
            Err(ModelError::ScriptExhausted { calls: 1 })
        ));
    }

    #[test]
    fn verify_matching_candidate_zero() {
        let m = ScriptedMock::new(
            8,
            2,
            vec![ScriptEntry::Verify(vec![oh(1), oh(2), oh(3)])],
        );
        let p = AcceptanceParams::greedy(2);
        let v = verify_and_accept(&[], &[vec![1, 2, 3]], &m, &p).unwrap();
        assert_eq!((v.winner, v.accepted_len), (0, 3));
    }

    #[test]
    fn verify_rejecting_all_heads() {
        let m = ScriptedMock::new(8, 2, vec![ScriptEntry::Verify(vec![oh(1), oh(5), oh(5)])]);
        let v = verify_and_accept(&[], &[vec![1, 2, 3]], &m, &AcceptanceParams::greedy(2)).unwrap();
        assert_eq!(v.accepted_len, 1);
    }

    #[test]
    fn longest_candidate_wins() {
        let step = StepOutput {
            base: oh(1),
            heads: vec![
                Distribution::new(vec![0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).unwrap(),
                oh(4),
            ],
        };
        let p = AcceptanceParams {
            top_k_per_head: vec![1, 2, 1],
            max_candidates: 4,
            ..AcceptanceParams::default()
        };
        let cands = propose_candidates(&step, &p, None);
        assert_eq!(cands, vec![vec![1, 2, 4], vec![1, 3, 4]]);
        // candidate 0 loses its last token, candidate 1 keeps all three
        let m = ScriptedMock::new(
            8,
            2,
            vec![
                ScriptEntry::Verify(vec![oh(1), oh(2), oh(6)]),
                ScriptEntry::Verify(vec![oh(1), oh(3), oh(4)]),
            ],
        );
        let v = verify_and_accept(&[], &cands, &m, &p).unwrap();
        assert_eq!(v.per_candidate, vec![2, 3]);
        assert_eq!((v.winner, v.accepted_len), (1, 3));
        assert_eq!(m.remaining(), 0);
    }
}

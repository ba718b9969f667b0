// SPDX-License-Identifier: Apache-2.0

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::Rng;

use super::ModelError;
use crate::tokenizer::TokenId;

/// Probabilities below this are clamped before taking a log.
pub const PROB_FLOOR: f64 = 1e-12;
const SUM_TOLERANCE: f64 = 1e-6;

/// Probability vector over the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, ModelError> {
        if probs.is_empty() {
            return Err(ModelError::InvalidDistribution("empty".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(ModelError::InvalidDistribution(
                "negative or non-finite mass".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(ModelError::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(Self(probs))
    }

    /// Normalizes nonnegative weights; all-zero weights give a uniform distribution.
    pub fn from_weights(weights: Vec<f64>) -> Self {
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Self::uniform(weights.len());
        }
        Self(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(vocab: usize) -> Self {
        Self(vec![1.0 / vocab as f64; vocab])
    }

    pub fn one_hot(vocab: usize, token: TokenId) -> Self {
        let mut p = vec![0.0; vocab];
        p[token as usize] = 1.0;
        Self(p)
    }

    pub fn vocab_size(&self) -> usize {
        self.0.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn prob(&self, token: TokenId) -> Option<f64> {
        self.0.get(token as usize).copied()
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        entropy(&self.0)
    }

    /// Up to `k` tokens with nonzero mass, most probable first, ties to the lower id.
    pub fn top_k(&self, k: usize) -> Vec<TokenId> {
        let mut idx: Vec<usize> = (0..self.0.len()).filter(|&i| self.0[i] > 0.0).collect();
        idx.sort_by(|&a, &b| self.0[b].total_cmp(&self.0[a]).then(a.cmp(&b)));
        idx.truncate(k);
        idx.into_iter().map(|i| i as TokenId).collect()
    }

    pub fn argmax(&self) -> TokenId {
        self.top_k(1)[0]
    }

    /// Samples from `p^(1/T)`; `T = 0` is argmax.
    pub fn sample<R: Rng + ?Sized>(&self, temperature: f64, rng: &mut R) -> TokenId {
        if temperature <= 0.0 {
            return self.argmax();
        }
        let weights: Vec<f64> = self
            .0
            .iter()
            .map(|&p| if p > 0.0 { (p.ln() / temperature).exp() } else { 0.0 })
            .collect();
        match WeightedIndex::new(&weights) {
            Ok(w) => w.sample(rng) as TokenId,
            // every tempered weight underflowed
            Err(_) => self.argmax(),
        }
    }
}

pub fn entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.max(PROB_FLOOR).ln())
        .sum()
}

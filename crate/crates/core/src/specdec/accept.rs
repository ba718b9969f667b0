// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DecodeError, Distribution, ModelError, SpeculativeModel, StepOutput};
use crate::tokenizer::{TokenId, FRAG};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truncation {
    /// Cut at the last `[FRAG]`, or keep only the base token if there is none.
    #[default]
    Strict,
    /// Cut at the last `[FRAG]`, or keep the whole accepted prefix.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcceptanceParams {
    pub epsilon: f64,
    pub delta: f64,
    pub temperature: f64,
    /// Branching per tree level: entry 0 is the base model, entry `i` head `i`.
    /// Its length caps how many heads are used.
    pub top_k_per_head: Vec<usize>,
    pub max_candidates: usize,
    pub fragment_truncation: Truncation,
    pub seed: u64,
}

impl Default for AcceptanceParams {
    fn default() -> Self {
        Self {
            epsilon: 0.09,
            delta: 0.3,
            temperature: 0.0,
            top_k_per_head: vec![3, 2, 2, 1, 1],
            max_candidates: 8,
            fragment_truncation: Truncation::Strict,
            seed: 0,
        }
    }
}

impl AcceptanceParams {
    /// Single greedy path through `heads` heads.
    pub fn greedy(heads: usize) -> Self {
        Self {
            top_k_per_head: vec![1; heads + 1],
            max_candidates: 1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        let bad = |msg: &str| Err(DecodeError::InvalidParams(msg.to_string()));
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad("epsilon must lie in (0, 1]");
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad("delta must lie in (0, 1]");
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be finite and nonnegative");
        }
        if self.top_k_per_head.is_empty() || self.top_k_per_head.contains(&0) {
            return bad("top_k_per_head needs at least one entry, all positive");
        }
        if self.max_candidates == 0 {
            return bad("max_candidates must be positive");
        }
        Ok(())
    }

    /// `min(ε, δ·exp(−H(p)))`.
    pub fn threshold(&self, dist: &Distribution) -> f64 {
        self.epsilon.min(self.delta * (-dist.entropy()).exp())
    }
}

pub fn typical_accept(
    dist: &Distribution,
    token: TokenId,
    p: &AcceptanceParams,
) -> Result<bool, ModelError> {
    let prob = dist.prob(token).ok_or(ModelError::TokenOutOfRange {
        token,
        vocab: dist.vocab_size(),
    })?;
    Ok(prob > p.threshold(dist))
}

/// Builds candidate paths from a static rank tree.
///
/// Level `i` of every path takes a token from distribution `i` (base, then
/// heads) by rank. Paths are the rank tuples `(r0, r1, …)` with `ri < k_i`
/// enumerated in lexicographic order and cut at `max_candidates`.
/// `base_first`, if given, replaces the base argmax as rank 0.
pub fn propose_candidates(
    step: &StepOutput,
    p: &AcceptanceParams,
    base_first: Option<TokenId>,
) -> Vec<Vec<TokenId>> {
    let depth = p.top_k_per_head.len().min(step.heads.len() + 1);
    let mut levels: Vec<Vec<TokenId>> = Vec::with_capacity(depth);
    let mut base = step.base.top_k(p.top_k_per_head[0]);
    if let Some(first) = base_first {
        base.retain(|&t| t != first);
        base.insert(0, first);
        base.truncate(p.top_k_per_head[0]);
    }
    levels.push(base);
    for (head, &k) in step.heads.iter().zip(&p.top_k_per_head[1..depth]) {
        levels.push(head.top_k(k));
    }

    let mut out = Vec::new();
    let mut ranks = vec![0usize; depth];
    loop {
        out.push(ranks.iter().zip(&levels).map(|(&r, lv)| lv[r]).collect());
        if out.len() >= p.max_candidates {
            break;
        }
        // odometer increment, last level fastest
        let mut level = depth;
        loop {
            if level == 0 {
                return out;
            }
            level -= 1;
            ranks[level] += 1;
            if ranks[level] < levels[level].len() {
                break;
            }
            ranks[level] = 0;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub winner: usize,
    pub accepted_len: usize,
    pub per_candidate: Vec<usize>,
}

/// Accepted prefix length of one candidate, where `dists[j]` is the base
/// distribution position `j` is checked against. A first token equal to the
/// base proposal `lead` is taken as is; any other first token, and every
/// later token, must pass typical acceptance.
pub fn accepted_prefix(
    candidate: &[TokenId],
    dists: &[&Distribution],
    lead: TokenId,
    p: &AcceptanceParams,
) -> Result<usize, ModelError> {
    let mut len = 0;
    for (j, &tok) in candidate.iter().enumerate() {
        let auto = j == 0 && tok == lead;
        if !auto && !typical_accept(dists[j], tok, p)? {
            break;
        }
        len += 1;
    }
    Ok(len)
}

/// Longest accepted prefix over candidates, ties to the lowest index.
pub fn select_winner(lengths: Vec<usize>) -> Verdict {
    let mut winner = 0;
    for (i, &len) in lengths.iter().enumerate() {
        if len > lengths[winner] {
            winner = i;
        }
    }
    Verdict {
        winner,
        accepted_len: lengths[winner],
        per_candidate: lengths,
    }
}

/// Verifies each candidate with one `verify` call and picks the winner.
/// Candidate 0 carries the base proposal.
pub fn verify_and_accept<M: SpeculativeModel + ?Sized>(
    context: &[TokenId],
    candidates: &[Vec<TokenId>],
    model: &M,
    p: &AcceptanceParams,
) -> Result<Verdict, DecodeError> {
    if candidates.is_empty() || candidates.iter().any(Vec::is_empty) {
        return Err(DecodeError::InvalidParams("empty candidate list or path".into()));
    }
    let lead = candidates[0][0];
    let mut lengths = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let dists = model.verify(context, cand)?;
        if dists.len() != cand.len() {
            return Err(ModelError::Shape(format!(
                "verify returned {} distributions for {} tokens",
                dists.len(),
                cand.len()
            ))
            .into());
        }
        let refs: Vec<&Distribution> = dists.iter().collect();
        lengths.push(accepted_prefix(cand, &refs, lead, p)?);
    }
    Ok(select_winner(lengths))
}

pub fn truncate_to_fragment(accepted: &[TokenId], mode: Truncation) -> Vec<TokenId> {
    match accepted.iter().rposition(|&t| t == FRAG) {
        Some(i) if i >= 1 => accepted[..=i].to_vec(),
        _ => match mode {
            Truncation::Strict => accepted.iter().take(1).copied().collect(),
            Truncation::Lenient => accepted.to_vec(),
        },
    }
}

pub(crate) fn sample_base<R: Rng>(step: &StepOutput, p: &AcceptanceParams, rng: &mut R) -> Option<TokenId> {
    (p.temperature > 0.0).then(|| step.base.sample(p.temperature, rng))
}

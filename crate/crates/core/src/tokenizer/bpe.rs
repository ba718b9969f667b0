// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap, HashSet};

use super::{TokenId, TokenizerError, Vocab, FIRST_MERGE_ID};

type Pair = (TokenId, TokenId);

/// Trains merges over a corpus of byte strings. Pairs never span two corpus
/// items. Frequency ties go to the lexicographically smallest id pair.
///
/// Training stops early if the corpus runs out of pairs before the merge
/// budget `vocab_size - 261` is spent.
pub fn train_bpe<I, S>(corpus: I, vocab_size: usize) -> Result<Vocab, TokenizerError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    if vocab_size < FIRST_MERGE_ID as usize {
        return Err(TokenizerError::VocabTooSmall(vocab_size));
    }
    let mut counts: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
    for item in corpus {
        let bytes = item.as_ref();
        if !bytes.is_empty() {
            *counts.entry(bytes.to_vec()).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return Err(TokenizerError::EmptyCorpus);
    }

    let mut words: Vec<(Vec<TokenId>, i64)> = counts
        .into_iter()
        .map(|(w, c)| (w.into_iter().map(TokenId::from).collect(), c as i64))
        .collect();

    let mut pair_counts: HashMap<Pair, i64> = HashMap::new();
    let mut pair_words: HashMap<Pair, HashSet<usize>> = HashMap::new();
    for (idx, (word, count)) in words.iter().enumerate() {
        for w in word.windows(2) {
            let p = (w[0], w[1]);
            *pair_counts.entry(p).or_default() += count;
            pair_words.entry(p).or_default().insert(idx);
        }
    }

    let budget = vocab_size - FIRST_MERGE_ID as usize;
    let mut merges = Vec::with_capacity(budget);
    while merges.len() < budget {
        let best = pair_counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then_with(|| pb.cmp(pa)))
            .map(|(&p, _)| p);
        let Some(best) = best else { break };
        let new_id = FIRST_MERGE_ID + merges.len() as TokenId;
        merges.push(best);

        let affected: Vec<usize> = pair_words
            .remove(&best)
            .map(|s| {
                let mut v: Vec<_> = s.into_iter().collect();
                v.sort_unstable();
                v
            })
            .unwrap_or_default();
        for idx in affected {
            let (word, count) = &mut words[idx];
            for w in word.windows(2) {
                if let Some(c) = pair_counts.get_mut(&(w[0], w[1])) {
                    *c -= *count;
                }
            }
            *word = merge_pair(word, best, new_id);
            for w in word.windows(2) {
                let p = (w[0], w[1]);
                *pair_counts.entry(p).or_default() += *count;
                pair_words.entry(p).or_default().insert(idx);
            }
        }
        pair_counts.remove(&best);
    }
    Vocab::from_merges(merges)
}

fn merge_pair(word: &[TokenId], pair: Pair, new_id: TokenId) -> Vec<TokenId> {
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && (word[i], word[i + 1]) == pair {
            out.push(new_id);
            i += 2;
        } else {
            out.push(word[i]);
            i += 1;
        }
    }
    out
}

pub(super) fn encode_word(bytes: &[u8], vocab: &Vocab) -> Vec<TokenId> {
    let mut word: Vec<TokenId> = bytes.iter().map(|&b| TokenId::from(b)).collect();
    loop {
        let best = word
            .windows(2)
            .filter_map(|w| vocab.rank((w[0], w[1])).map(|r| (r, (w[0], w[1]))))
            .min();
        let Some((rank, pair)) = best else { break };
        word = merge_pair(&word, pair, FIRST_MERGE_ID + rank);
    }
    word
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_merge_on_aaaa() {
        let v = train_bpe([b"aaaa"], FIRST_MERGE_ID as usize + 1).unwrap();
        assert_eq!(v.merges(), &[(b'a' as u32, b'a' as u32)]);
        assert_eq!(encode_word(b"aaaa", &v), vec![FIRST_MERGE_ID, FIRST_MERGE_ID]);
    }

    #[test]
    fn zero_budget_is_byte_level() {
        let v = train_bpe([b"hello world"], FIRST_MERGE_ID as usize).unwrap();
        assert!(v.merges().is_empty());
        assert_eq!(v.len(), 261);
    }

    #[test]
    fn too_small_and_empty() {
        assert!(matches!(
            train_bpe([b"x"], 260),
            Err(TokenizerError::VocabTooSmall(260))
        ));
        assert!(matches!(
            train_bpe(Vec::<Vec<u8>>::new(), 300),
            Err(TokenizerError::EmptyCorpus)
        ));
    }

    #[test]
    fn ties_break_to_smallest_pair() {
        // "ab" and "cd" both occur once
        let v = train_bpe([b"ab", b"cd"], FIRST_MERGE_ID as usize + 1).unwrap();
        assert_eq!(v.merges(), &[(b'a' as u32, b'b' as u32)]);
    }

    #[test]
    fn deterministic_across_runs() {
        let corpus = [
            "module m(input a, output y); assign y = a; endmodule",
            "module n(input [3:0] d, output reg [3:0] q); always @* q = d; endmodule",
        ];
        let a = train_bpe(corpus, 320).unwrap();
        let b = train_bpe(corpus, 320).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 320);
    }

    #[test]
    fn incremental_counts_match_naive_recount() {
        // naive trainer: recount all pairs from scratch before every merge
        let corpus: Vec<&[u8]> = vec![b"abababcab", b"bcbcbc", b"aaaa", b"abcabc", b"abab"];
        let budget = 8;
        let mut words: Vec<Vec<u32>> = corpus
            .iter()
            .map(|w| w.iter().map(|&b| b as u32).collect())
            .collect();
        let mut expected = Vec::new();
        for m in 0..budget {
            let mut counts: BTreeMap<Pair, i64> = BTreeMap::new();
            for w in &words {
                for p in w.windows(2) {
                    *counts.entry((p[0], p[1])).or_default() += 1;
                }
            }
            let Some(max) = counts.values().copied().max() else { break };
            let best = *counts.iter().find(|(_, &c)| c == max).unwrap().0;
            expected.push(best);
            for w in &mut words {
                *w = merge_pair(w, best, FIRST_MERGE_ID + m);
            }
        }
        let v = train_bpe(corpus, FIRST_MERGE_ID as usize + budget as usize).unwrap();
        assert_eq!(v.merges(), expected.as_slice());
    }
}

// SPDX-License-Identifier: Apache-2.0

//! Fixtures and brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::HashSet;
use std::path::PathBuf;

use verispec::corpus::{prepare_corpus, train_vocab_on_records, CorpusConfig, ModuleRecord};
use verispec::tokenizer::{encode_fragmented, TokenId, Vocab, FRAG, IGNORE, PAD};
use verispec::verilog::fragment_source;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Records planted to survive the corpus pipeline, in output order.
pub const SURVIVORS: [&str; 15] = [
    "adder.v#0",
    "alu/alu4.v#0",
    "alu/comparator.v#0",
    "alu/shifter.v#0",
    "counter.v#0",
    "debounce.v#0",
    "fifo/gray.v#0",
    "fifo/gray.v#1",
    "fifo/sync_fifo.v#0",
    "fsm.v#0",
    "mux.v#0",
    "parity.v#0",
    "pwm.v#0",
    "regfile.v#0",
    "top.v#0",
];

pub const VOCAB_SIZE: usize = 400;

pub fn corpus_records() -> Vec<ModuleRecord> {
    prepare_corpus(&fixture("corpus"), &CorpusConfig::default())
        .expect("fixture corpus")
        .0
}

pub fn corpus_vocab(records: &[ModuleRecord]) -> Vocab {
    train_vocab_on_records(records, VOCAB_SIZE).expect("vocab trains")
}

pub fn encoded(records: &[ModuleRecord], vocab: &Vocab) -> Vec<Vec<TokenId>> {
    records
        .iter()
        .map(|r| encode_fragmented(&fragment_source(&r.code).unwrap(), vocab).ids)
        .collect()
}

/// Fraction of k-subsets of `n` attempts, the first `c` correct, that hold at
/// least one correct attempt. Counts by walking every subset.
pub fn brute_force_pass_at_k(n: u32, c: u32, k: u32) -> f64 {
    let correct_mask: u32 = (1u32 << c) - 1;
    let (mut hits, mut total) = (0u64, 0u64);
    for subset in 0u32..(1 << n) {
        if subset.count_ones() == k {
            total += 1;
            if subset & correct_mask != 0 {
                hits += 1;
            }
        }
    }
    hits as f64 / total as f64
}

/// Label matrix from its definition: row `i` is `l0` shifted left by `i`
/// and padded, then every column is cut below its deepest `[FRAG]`.
pub fn oracle_labels(l0: &[TokenId], heads: usize) -> Vec<Vec<TokenId>> {
    let len = l0.len();
    let columns: Vec<Vec<TokenId>> = (0..len)
        .map(|s| {
            let column: Vec<TokenId> = (0..=heads).map(|i| l0.get(s + i).copied().unwrap_or(PAD)).collect();
            let keep = column.iter().rposition(|&t| t == FRAG).unwrap_or(0);
            column
                .iter()
                .enumerate()
                .map(|(i, &t)| if i <= keep { t } else { IGNORE })
                .collect()
        })
        .collect();
    (0..=heads).map(|i| columns.iter().map(|c| c[i]).collect()).collect()
}

/// Exact Jaccard similarity of the k-byte window sets.
pub fn window_jaccard(a: &[u8], b: &[u8], k: usize) -> f64 {
    let set = |x: &[u8]| -> HashSet<Vec<u8>> { x.windows(k).map(<[u8]>::to_vec).collect() };
    let (sa, sb) = (set(a), set(b));
    let inter = sa.intersection(&sb).count();
    let union = sa.union(&sb).count();
    inter as f64 / union as f64
}

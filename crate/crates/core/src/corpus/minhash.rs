// SPDX-License-Identifier: Apache-2.0

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinHashConfig {
    pub shingle_k: usize,
    pub num_hashes: usize,
    pub seed: u64,
}

impl Default for MinHashConfig {
    fn default() -> Self {
        Self {
            shingle_k: 8,
            num_hashes: 128,
            seed: 0x5EED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MinHashSignature {
    pub values: Vec<u64>,
    pub shingle_k: usize,
    pub seed: u64,
}

impl MinHashSignature {
    /// Fraction of slots that agree.
    pub fn jaccard(&self, other: &MinHashSignature) -> f64 {
        assert_eq!(self.values.len(), other.values.len(), "signature lengths differ");
        if self.values.is_empty() {
            return 1.0;
        }
        let same = self
            .values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a == b)
            .count();
        same as f64 / self.values.len() as f64
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Distinct `k`-byte windows; a text shorter than `k` is one shingle.
pub fn shingles(text: &[u8], k: usize) -> HashSet<&[u8]> {
    if text.is_empty() {
        return HashSet::new();
    }
    if text.len() < k {
        return std::iter::once(text).collect();
    }
    text.windows(k.max(1)).collect()
}

/// Exact Jaccard of the two shingle sets.
pub fn shingle_jaccard(a: &[u8], b: &[u8], k: usize) -> f64 {
    let (sa, sb) = (shingles(a, k), shingles(b, k));
    let union = sa.union(&sb).count();
    if union == 0 {
        return 1.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

pub fn minhash(text: &[u8], cfg: &MinHashConfig) -> MinHashSignature {
    let seeds: Vec<u64> = (0..cfg.num_hashes as u64)
        .map(|i| splitmix64(cfg.seed.wrapping_add(i)))
        .collect();
    let mut values = vec![u64::MAX; cfg.num_hashes];
    for sh in shingles(text, cfg.shingle_k) {
        let base = fnv1a(sh);
        for (slot, seed) in values.iter_mut().zip(&seeds) {
            let h = splitmix64(base ^ seed);
            if h < *slot {
                *slot = h;
            }
        }
    }
    MinHashSignature {
        values,
        shingle_k: cfg.shingle_k,
        seed: cfg.seed,
    }
}

/// `(bands, rows)` such that any pair whose estimate reaches `threshold`
/// shares at least one band: each disagreeing slot spoils at most one band.
/// `None` if no banding gives that guarantee.
pub fn lsh_bands(num_hashes: usize, threshold: f64) -> Option<(usize, usize)> {
    let min_agree = (threshold * num_hashes as f64 - 1e-9).ceil().max(0.0) as usize;
    let max_disagree = num_hashes.saturating_sub(min_agree);
    (1..=num_hashes)
        .rev()
        .find(|&rows| num_hashes / rows > max_disagree)
        .map(|rows| (num_hashes / rows, rows))
}

/// Greedy scan in input order: keeps an item unless its estimated Jaccard
/// with an already kept item reaches `threshold`. Returns kept indices.
pub fn dedup_signatures(sigs: &[MinHashSignature], threshold: f64) -> Vec<usize> {
    let n_hashes = sigs.first().map_or(0, |s| s.values.len());
    let banding = lsh_bands(n_hashes, threshold);
    let mut kept: Vec<usize> = Vec::new();
    let mut buckets: HashMap<(usize, &[u64]), Vec<usize>> = HashMap::new();
    for (i, sig) in sigs.iter().enumerate() {
        let is_dup = match banding {
            Some((bands, rows)) => {
                let mut seen = HashSet::new();
                (0..bands).any(|b| {
                    let key = (b, &sig.values[b * rows..(b + 1) * rows]);
                    buckets.get(&key).is_some_and(|cands| {
                        cands
                            .iter()
                            .filter(|&&j| seen.insert(j))
                            .any(|&j| sig.jaccard(&sigs[j]) >= threshold)
                    })
                })
            }
            None => kept.iter().any(|&j| sig.jaccard(&sigs[j]) >= threshold),
        };
        if is_dup {
            continue;
        }
        kept.push(i);
        if let Some((bands, rows)) = banding {
            for b in 0..bands {
                buckets
                    .entry((b, &sig.values[b * rows..(b + 1) * rows]))
                    .or_default()
                    .push(i);
            }
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_text(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
        (0..len).map(|_| rng.gen_range(b'a'..=b'z')).collect()
    }

    #[test]
    fn identical_and_disjoint() {
        let cfg = MinHashConfig::default();
        let a = minhash(b"module m(input a); endmodule", &cfg);
        assert_eq!(a, minhash(b"module m(input a); endmodule", &cfg));
        let x = minhash(&[b'x'; 64], &cfg);
        let y = minhash(&[b'y'; 64], &cfg);
        assert!(x.jaccard(&y) < 0.05);
        assert_eq!(a.values.len(), 128);
    }

    #[test]
    fn banding_guarantee() {
        assert_eq!(lsh_bands(128, 0.85), Some((21, 6)));
        let (bands, rows) = lsh_bands(128, 0.5).unwrap();
        assert!(bands > 64 && bands * rows <= 128);
        assert_eq!(lsh_bands(128, 0.0), None);
    }

    #[test]
    fn banded_dedup_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = MinHashConfig::default();
        let mut texts = Vec::new();
        for _ in 0..12 {
            let base = random_text(&mut rng, 600);
            texts.push(base.clone());
            for _ in 0..3 {
                let mut t = base.clone();
                for _ in 0..rng.gen_range(0..12) {
                    let at = rng.gen_range(0..t.len());
                    t[at] = rng.gen_range(b'a'..=b'z');
                }
                texts.push(t);
            }
        }
        let sigs: Vec<_> = texts.iter().map(|t| minhash(t, &cfg)).collect();
        for threshold in [0.5, 0.7, 0.85, 0.95] {
            let mut brute: Vec<usize> = Vec::new();
            for i in 0..sigs.len() {
                if !brute.iter().any(|&j| sigs[i].jaccard(&sigs[j]) >= threshold) {
                    brute.push(i);
                }
            }
            assert_eq!(dedup_signatures(&sigs, threshold), brute, "t={threshold}");
        }
    }

    #[test]
    fn short_and_empty_texts() {
        assert_eq!(shingles(b"abc", 8).len(), 1);
        assert!(shingles(b"", 8).is_empty());
        assert_eq!(shingle_jaccard(b"", b"", 8), 1.0);
    }
}

// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RefModelError;
use crate::specdec::{Distribution, ModelError, SpeculativeModel, StepOutput};
use crate::tokenizer::{TokenId, TokenSequence, Vocab};

const FORMAT: &str = "verispec-ngram/1";

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct Counts {
    /// Sorted by token id.
    entries: Vec<(TokenId, u64)>,
    total: u64,
}

impl Counts {
    fn from_map(map: BTreeMap<TokenId, u64>) -> Self {
        let total = map.values().sum();
        Self {
            entries: map.into_iter().collect(),
            total,
        }
    }
}

/// Context → next-token counts, one table per look-ahead offset.
type Table = HashMap<Vec<TokenId>, Counts>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NGramHeader {
    pub format: String,
    pub n: usize,
    pub heads: usize,
    pub alpha: f64,
    pub vocab_size: usize,
    pub vocab_hash: String,
}

/// Multi-head n-gram model with additive smoothing and suffix backoff.
///
/// Offset `d` predicts the token `d + 1` positions after the context end;
/// offset 0 is the base model, offset `i` is head `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramMultiHead {
    header: NGramHeader,
    tables: Vec<Table>,
}

pub fn train_ngram(
    corpus: &[TokenSequence],
    n: usize,
    heads: usize,
    alpha: f64,
    vocab: &Vocab,
) -> Result<NGramMultiHead, RefModelError> {
    if n == 0 {
        return Err(RefModelError::Config("n-gram order must be at least 1".into()));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(RefModelError::Config("alpha must be finite and nonnegative".into()));
    }
    if corpus.iter().all(|s| s.is_empty()) {
        return Err(RefModelError::EmptyCorpus);
    }
    let vocab_size = vocab.len();
    let mut raw: Vec<HashMap<Vec<TokenId>, BTreeMap<TokenId, u64>>> = vec![HashMap::new(); heads + 1];
    for seq in corpus {
        let x = &seq.ids;
        if let Some(&bad) = x.iter().find(|&&t| t as usize >= vocab_size) {
            return Err(ModelError::TokenOutOfRange {
                token: bad,
                vocab: vocab_size,
            }
            .into());
        }
        // `end` is one past the context's last token
        for end in 0..x.len() {
            for (d, table) in raw.iter_mut().enumerate() {
                let Some(&target) = x.get(end + d) else { break };
                for m in 0..n.min(end + 1) {
                    let ctx = x[end - m..end].to_vec();
                    *table.entry(ctx).or_default().entry(target).or_default() += 1;
                }
            }
        }
    }
    let tables = raw
        .into_iter()
        .map(|t| t.into_iter().map(|(k, v)| (k, Counts::from_map(v))).collect())
        .collect();
    Ok(NGramMultiHead {
        header: NGramHeader {
            format: FORMAT.into(),
            n,
            heads,
            alpha,
            vocab_size,
            vocab_hash: vocab.fingerprint(),
        },
        tables,
    })
}

impl NGramMultiHead {
    pub fn header(&self) -> &NGramHeader {
        &self.header
    }

    pub fn order(&self) -> usize {
        self.header.n
    }

    /// Distribution for offset `d` after `context`, backing off to the
    /// longest context suffix that was seen in training.
    pub fn distribution(&self, context: &[TokenId], d: usize) -> Distribution {
        let v = self.header.vocab_size;
        let table = &self.tables[d];
        let longest = (self.header.n - 1).min(context.len());
        let found = (0..=longest)
            .rev()
            .find_map(|m| table.get(&context[context.len() - m..]));
        let Some(counts) = found else {
            return Distribution::uniform(v);
        };
        let alpha = self.header.alpha;
        let denom = counts.total as f64 + alpha * v as f64;
        let mut p = vec![alpha / denom; v];
        for &(t, c) in &counts.entries {
            p[t as usize] = (c as f64 + alpha) / denom;
        }
        Distribution::from_weights(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RefModelError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RefModelError> {
        Self::read_from(BufReader::new(std::fs::File::open(path)?))
    }

    /// JSON header line, then per offset the contexts in sorted order.
    pub fn write_to(&self, mut w: impl Write) -> Result<(), RefModelError> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for table in &self.tables {
            let mut keys: Vec<&Vec<TokenId>> = table.keys().collect();
            keys.sort();
            w.write_all(&(keys.len() as u32).to_le_bytes())?;
            for key in keys {
                let counts = &table[key];
                w.write_all(&(key.len() as u32).to_le_bytes())?;
                for t in key {
                    w.write_all(&t.to_le_bytes())?;
                }
                w.write_all(&(counts.entries.len() as u32).to_le_bytes())?;
                for (t, c) in &counts.entries {
                    w.write_all(&t.to_le_bytes())?;
                    w.write_all(&c.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl BufRead) -> Result<Self, RefModelError> {
        let mut line = String::new();
        r.read_line(&mut line)?;
        let header: NGramHeader = serde_json::from_str(line.trim_end())?;
        if header.format != FORMAT {
            return Err(RefModelError::Format(format!(
                "unsupported format tag `{}`",
                header.format
            )));
        }
        let mut tables = Vec::with_capacity(header.heads + 1);
        for _ in 0..=header.heads {
            let contexts = read_u32(&mut r)?;
            let mut table = Table::with_capacity(contexts as usize);
            for _ in 0..contexts {
                let len = read_u32(&mut r)?;
                let key = (0..len).map(|_| read_u32(&mut r)).collect::<Result<Vec<_>, _>>()?;
                let n = read_u32(&mut r)?;
                let mut map = BTreeMap::new();
                for _ in 0..n {
                    let t = read_u32(&mut r)?;
                    if t as usize >= header.vocab_size {
                        return Err(RefModelError::Format(format!("token {t} outside vocabulary")));
                    }
                    map.insert(t, read_u64(&mut r)?);
                }
                table.insert(key, Counts::from_map(map));
            }
            tables.push(table);
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(RefModelError::Format("trailing bytes".into()));
        }
        Ok(Self { header, tables })
    }

    /// SHA-256 over the serialized model.
    pub fn model_hash(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        hex::encode(Sha256::digest(&buf))
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32, RefModelError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64, RefModelError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

impl SpeculativeModel for NGramMultiHead {
    fn vocab_size(&self) -> usize {
        self.header.vocab_size
    }

    fn num_heads(&self) -> usize {
        self.header.heads
    }

    fn step(&self, context: &[TokenId]) -> Result<StepOutput, ModelError> {
        Ok(StepOutput {
            base: self.distribution(context, 0),
            heads: (1..=self.header.heads)
                .map(|d| self.distribution(context, d))
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::FRAG;

    const A: TokenId = b'a' as TokenId;
    const B: TokenId = b'b' as TokenId;

    fn abab() -> Vec<TokenSequence> {
        vec![TokenSequence::new(vec![A, B, A, B, A])]
    }

    #[test]
    fn bigram_hand_counts() {
        let m = train_ngram(&abab(), 2, 1, 0.0, &Vocab::bytes_only()).unwrap();
        let after_a = m.distribution(&[A], 0);
        assert_eq!(after_a.prob(B), Some(1.0));
        assert_eq!(m.distribution(&[B], 0).prob(A), Some(1.0));
        assert_eq!(m.tables[0][&vec![A]].total, 2);
        assert_eq!(m.tables[0][&vec![B]].total, 2);
        // head 1: two ahead of `a` is `a`
        assert_eq!(m.distribution(&[A], 1).prob(A), Some(1.0));
        // unigram over all five positions
        assert_eq!(m.distribution(&[], 0).prob(A), Some(0.6));
    }

    #[test]
    fn backoff_to_shorter_context() {
        let m = train_ngram(&abab(), 3, 0, 0.0, &Vocab::bytes_only()).unwrap();
        // (b, b) never seen; suffix (b) is
        assert_eq!(m.distribution(&[B, B], 0).prob(A), Some(1.0));
        // nothing seen at all: unigram
        assert_eq!(m.distribution(&[b'z' as TokenId], 0).prob(A), Some(0.6));
    }

    #[test]
    fn smoothing_and_empty_tables() {
        let v = Vocab::bytes_only();
        let m = train_ngram(&abab(), 2, 6, 1.0, &v).unwrap();
        // no sequence reaches six tokens ahead
        assert_eq!(m.distribution(&[A], 6), Distribution::uniform(v.len()));
        let d = m.distribution(&[A], 0);
        assert!(d.probs().iter().all(|&p| p > 0.0));
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((d.prob(B).unwrap() - 3.0 / (2.0 + v.len() as f64)).abs() < 1e-15);
    }

    #[test]
    fn deterministic_and_persisted() {
        let corpus = vec![
            TokenSequence::new(vec![1, 2, FRAG, 3, 4, FRAG, 1, 2, FRAG]),
            TokenSequence::new(vec![3, 4, FRAG, 1, 2]),
        ];
        let v = Vocab::bytes_only();
        let a = train_ngram(&corpus, 3, 2, 0.5, &v).unwrap();
        let b = train_ngram(&corpus, 3, 2, 0.5, &v).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.model_hash(), b.model_hash());
        let mut buf = Vec::new();
        a.write_to(&mut buf).unwrap();
        let back = NGramMultiHead::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, a);
        buf.push(0);
        assert!(NGramMultiHead::read_from(buf.as_slice()).is_err());
    }

    #[test]
    fn errors() {
        let v = Vocab::bytes_only();
        assert!(matches!(
            train_ngram(&[], 2, 1, 1.0, &v),
            Err(RefModelError::EmptyCorpus)
        ));
        assert!(train_ngram(&abab(), 0, 1, 1.0, &v).is_err());
        assert!(train_ngram(&[TokenSequence::new(vec![9999])], 2, 1, 1.0, &v).is_err());
    }
}

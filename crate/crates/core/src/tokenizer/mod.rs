// SPDX-License-Identifier: Apache-2.0

//! Byte-level BPE with reserved special tokens and `[FRAG]`-aware encoding.

mod bpe;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::verilog::FragmentedCode;

pub use bpe::train_bpe;

pub type TokenId = u32;

/// Size of the byte-fallback alphabet; ids `0..256` are raw bytes.
pub const BYTE_ALPHABET: usize = 256;
pub const FRAG: TokenId = 256;
pub const PAD: TokenId = 257;
pub const IGNORE: TokenId = 258;
pub const BOS: TokenId = 259;
pub const EOS: TokenId = 260;
pub const NUM_SPECIAL: usize = 5;
/// First id handed out to a learned merge.
pub const FIRST_MERGE_ID: TokenId = (BYTE_ALPHABET + NUM_SPECIAL) as TokenId;

pub const VOCAB_FORMAT: &str = "verispec-bpe/1";

pub fn is_special(id: TokenId) -> bool {
    (FRAG..FIRST_MERGE_ID).contains(&id)
}

pub fn special_name(id: TokenId) -> Option<&'static str> {
    Some(match id {
        FRAG => "[FRAG]",
        PAD => "[PAD]",
        IGNORE => "[IGNORE]",
        BOS => "[BOS]",
        EOS => "[EOS]",
        _ => return None,
    })
}

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("cannot train a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("vocab size {0} is below the minimum of {min}", min = FIRST_MERGE_ID)]
    VocabTooSmall(usize),
    #[error("token id {0} is not in the vocabulary")]
    UnknownId(TokenId),
    #[error("invalid vocabulary file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Immutable BPE vocabulary: byte alphabet, five specials, then merges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    merges: Vec<(TokenId, TokenId)>,
    tokens: Vec<Vec<u8>>,
    ranks: HashMap<(TokenId, TokenId), u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    format: String,
    special: SpecialIds,
    merges: Vec<(TokenId, TokenId)>,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
#[serde(rename_all = "UPPERCASE")]
struct SpecialIds {
    frag: TokenId,
    pad: TokenId,
    ignore: TokenId,
    bos: TokenId,
    eos: TokenId,
}

const SPECIAL_IDS: SpecialIds = SpecialIds {
    frag: FRAG,
    pad: PAD,
    ignore: IGNORE,
    bos: BOS,
    eos: EOS,
};

impl Vocab {
    /// Byte-level vocabulary without merges.
    pub fn bytes_only() -> Self {
        Self::from_merges(Vec::new()).expect("empty merge list is valid")
    }

    pub fn from_merges(merges: Vec<(TokenId, TokenId)>) -> Result<Self, TokenizerError> {
        let mut tokens: Vec<Vec<u8>> = (0..BYTE_ALPHABET).map(|b| vec![b as u8]).collect();
        tokens.extend(std::iter::repeat_with(Vec::new).take(NUM_SPECIAL));
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, &(a, b)) in merges.iter().enumerate() {
            let next = tokens.len() as TokenId;
            for id in [a, b] {
                if id >= next || is_special(id) {
                    return Err(TokenizerError::Format(format!(
                        "merge {rank} references invalid id {id}"
                    )));
                }
            }
            if ranks.insert((a, b), rank as u32).is_some() {
                return Err(TokenizerError::Format(format!("duplicate merge ({a}, {b})")));
            }
            let mut bytes = tokens[a as usize].clone();
            bytes.extend_from_slice(&tokens[b as usize]);
            tokens.push(bytes);
        }
        Ok(Self {
            merges,
            tokens,
            ranks,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn merges(&self) -> &[(TokenId, TokenId)] {
        &self.merges
    }

    pub(crate) fn rank(&self, pair: (TokenId, TokenId)) -> Option<u32> {
        self.ranks.get(&pair).copied()
    }

    /// Bytes of a token; specials are empty.
    pub fn token_bytes(&self, id: TokenId) -> Option<&[u8]> {
        self.tokens.get(id as usize).map(Vec::as_slice)
    }

    pub fn contains(&self, id: TokenId) -> bool {
        (id as usize) < self.tokens.len()
    }

    /// Human-readable rendering of one token.
    pub fn display_token(&self, id: TokenId) -> String {
        match special_name(id) {
            Some(name) => name.to_string(),
            None => self
                .token_bytes(id)
                .map(|b| String::from_utf8_lossy(b).into_owned())
                .unwrap_or_else(|| format!("<{id}?>")),
        }
    }

    pub fn to_json(&self) -> String {
        let file = VocabFile {
            format: VOCAB_FORMAT.to_string(),
            special: SPECIAL_IDS,
            merges: self.merges.clone(),
        };
        serde_json::to_string(&file).expect("vocab serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TokenizerError> {
        let file: VocabFile = serde_json::from_str(text)?;
        if file.format != VOCAB_FORMAT {
            return Err(TokenizerError::Format(format!(
                "unsupported format tag `{}`",
                file.format
            )));
        }
        if file.special != SPECIAL_IDS {
            return Err(TokenizerError::Format("special token ids differ".into()));
        }
        Self::from_merges(file.merges)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TokenizerError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TokenizerError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 over the serialized vocabulary.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// Token ids with an optional per-id fragment index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub ids: Vec<TokenId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Vec<usize>>,
}

impl TokenSequence {
    pub fn new(ids: Vec<TokenId>) -> Self {
        Self {
            ids,
            provenance: None,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn count(&self, id: TokenId) -> usize {
        self.ids.iter().filter(|&&x| x == id).count()
    }

    /// Ids with every `[FRAG]` removed.
    pub fn strip_frag(&self) -> Vec<TokenId> {
        strip_frag(&self.ids)
    }
}

impl From<Vec<TokenId>> for TokenSequence {
    fn from(ids: Vec<TokenId>) -> Self {
        Self::new(ids)
    }
}

pub fn strip_frag(ids: &[TokenId]) -> Vec<TokenId> {
    ids.iter().copied().filter(|&id| id != FRAG).collect()
}

/// Applies merges in training order: repeatedly merge the lowest-ranked pair.
pub fn encode(text: &[u8], vocab: &Vocab) -> TokenSequence {
    TokenSequence::new(bpe::encode_word(text, vocab))
}

/// Encodes each fragment on its own and closes it with `[FRAG]`.
pub fn encode_fragmented(fc: &FragmentedCode, vocab: &Vocab) -> TokenSequence {
    let mut cache: HashMap<&str, Vec<TokenId>> = HashMap::new();
    let mut ids = Vec::new();
    let mut provenance = Vec::new();
    for (i, frag) in fc.fragments.iter().enumerate() {
        let toks = cache
            .entry(frag.text.as_str())
            .or_insert_with(|| bpe::encode_word(frag.text.as_bytes(), vocab));
        ids.extend_from_slice(toks);
        ids.push(FRAG);
        provenance.extend(std::iter::repeat_n(i, toks.len() + 1));
    }
    TokenSequence {
        ids,
        provenance: Some(provenance),
    }
}

/// Concatenates token bytes; special tokens decode to nothing.
pub fn decode(ids: &[TokenId], vocab: &Vocab) -> Result<Vec<u8>, TokenizerError> {
    let mut out = Vec::new();
    for &id in ids {
        let bytes = vocab.token_bytes(id).ok_or(TokenizerError::UnknownId(id))?;
        out.extend_from_slice(bytes);
    }
    Ok(out)
}

/// Lossy UTF-8 convenience wrapper around [`decode`].
pub fn decode_to_string(ids: &[TokenId], vocab: &Vocab) -> Result<String, TokenizerError> {
    Ok(String::from_utf8_lossy(&decode(ids, vocab)?).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verilog::fragment_source;

    fn small_vocab() -> Vocab {
        train_bpe(
            [
                "assign y = a & b;".as_bytes(),
                b"always @(posedge clk) q <= d;",
                b"assign assign assign",
            ],
            FIRST_MERGE_ID as usize + 40,
        )
        .unwrap()
    }

    #[test]
    fn empty_roundtrip() {
        let v = small_vocab();
        assert!(encode(b"", &v).is_empty());
        assert_eq!(decode(&[], &v).unwrap(), b"");
    }

    #[test]
    fn specials_decode_to_nothing() {
        let v = small_vocab();
        assert_eq!(decode(&[FRAG, FRAG], &v).unwrap(), b"");
        assert_eq!(decode(&[BOS, b'a' as u32, PAD, IGNORE, EOS], &v).unwrap(), b"a");
    }

    #[test]
    fn assign_roundtrip_uses_merges() {
        let v = small_vocab();
        let ids = encode(b"assign", &v);
        assert!(ids.len() < 6);
        assert_eq!(decode(&ids.ids, &v).unwrap(), b"assign");
    }

    #[test]
    fn unknown_id_is_an_error() {
        let v = Vocab::bytes_only();
        assert!(matches!(
            decode(&[9999], &v),
            Err(TokenizerError::UnknownId(9999))
        ));
    }

    #[test]
    fn two_fragments() {
        let v = small_vocab();
        let mut sig = crate::verilog::SignificantTokenSet::mandatory();
        sig.includes_identifiers = true;
        let fc = crate::verilog::segment("a b", &sig).unwrap();
        let seq = encode_fragmented(&fc, &v);
        let mut expected = encode(b"a ", &v).ids;
        expected.push(FRAG);
        expected.extend(encode(b"b", &v).ids);
        expected.push(FRAG);
        assert_eq!(seq.ids, expected);
    }

    #[test]
    fn fragment_provenance_never_crosses_boundaries() {
        let v = small_vocab();
        let src = "module m(input a, output y);\n  assign y = ~a; // inv\nendmodule\n";
        let fc = fragment_source(src).unwrap();
        let seq = encode_fragmented(&fc, &v);
        assert_eq!(seq.count(FRAG), fc.len());
        let prov = seq.provenance.as_ref().unwrap();
        // each fragment's ids decode to exactly that fragment
        for (i, frag) in fc.fragments.iter().enumerate() {
            let ids: Vec<_> = seq
                .ids
                .iter()
                .zip(prov)
                .filter(|(_, &p)| p == i)
                .map(|(&id, _)| id)
                .collect();
            assert_eq!(*ids.last().unwrap(), FRAG);
            assert_eq!(decode(&ids, &v).unwrap(), frag.text.as_bytes());
        }
        assert_eq!(decode(&seq.strip_frag(), &v).unwrap(), src.as_bytes());
    }

    #[test]
    fn json_roundtrip_and_format_tag() {
        let v = small_vocab();
        let back = Vocab::from_json(&v.to_json()).unwrap();
        assert_eq!(back, v);
        let bad = v.to_json().replace(VOCAB_FORMAT, "other/9");
        assert!(matches!(Vocab::from_json(&bad), Err(TokenizerError::Format(_))));
    }

    #[test]
    fn rejects_merges_with_specials() {
        assert!(Vocab::from_merges(vec![(FRAG, 1)]).is_err());
        assert!(Vocab::from_merges(vec![(1, 400)]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn roundtrip_arbitrary_bytes(data in proptest::collection::vec(proptest::num::u8::ANY, 0..1024)) {
            let v = small_vocab();
            let ids = encode(&data, &v);
            proptest::prop_assert!(ids.ids.iter().all(|&id| v.contains(id) && !is_special(id)));
            proptest::prop_assert_eq!(decode(&ids.ids, &v).unwrap(), data);
        }
    }
}

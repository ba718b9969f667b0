// SPDX-License-Identifier: Apache-2.0

//! Syntax-enriched label matrices and the multi-head training loss.

mod build;
mod loss;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::{TokenId, FRAG, IGNORE, PAD};

pub use build::{build_labels_naive, build_labels_parallel};
pub use loss::{
    combine_losses, compute_multihead_loss, lambda_schedule, LossBreakdown, LossConfig, Logits,
};

const MAGIC: &[u8; 4] = b"VSLM";
const ID_WIDTH: u8 = 4;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid label file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `(heads + 1) × len` matrix of label ids, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    heads: usize,
    len: usize,
    data: Vec<TokenId>,
}

#[derive(Serialize, Deserialize)]
struct LabelDump {
    heads: usize,
    len: usize,
    rows: Vec<Vec<String>>,
}

impl LabelMatrix {
    pub(crate) fn from_raw(heads: usize, len: usize, data: Vec<TokenId>) -> Self {
        debug_assert_eq!(data.len(), (heads + 1) * len);
        Self { heads, len, data }
    }

    pub fn from_rows(rows: Vec<Vec<TokenId>>) -> Result<Self, LabelError> {
        if rows.len() < 2 {
            return Err(LabelError::Shape("need at least two rows".into()));
        }
        let len = rows[0].len();
        if rows.iter().any(|r| r.len() != len) {
            return Err(LabelError::Shape("ragged rows".into()));
        }
        Ok(Self {
            heads: rows.len() - 1,
            len,
            data: rows.concat(),
        })
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    /// Sequence length `S`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn row(&self, i: usize) -> &[TokenId] {
        &self.data[i * self.len..(i + 1) * self.len]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[TokenId]> {
        (0..=self.heads).map(move |i| self.row(i))
    }

    pub fn get(&self, row: usize, col: usize) -> TokenId {
        self.data[row * self.len + col]
    }

    pub fn column(&self, col: usize) -> Vec<TokenId> {
        (0..=self.heads).map(|i| self.get(i, col)).collect()
    }

    pub fn as_slice(&self) -> &[TokenId] {
        &self.data
    }

    pub fn ignore_count(&self, row: usize) -> usize {
        self.row(row).iter().filter(|&&x| x == IGNORE).count()
    }

    pub fn write_binary(&self, mut w: impl Write) -> Result<(), LabelError> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.heads as u32).to_le_bytes())?;
        w.write_all(&(self.len as u32).to_le_bytes())?;
        w.write_all(&[ID_WIDTH])?;
        let mut buf = Vec::with_capacity(self.data.len() * 4);
        for id in &self.data {
            buf.extend_from_slice(&id.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self, LabelError> {
        let mut header = [0u8; 13];
        r.read_exact(&mut header)?;
        if &header[..4] != MAGIC {
            return Err(LabelError::Format("bad magic".into()));
        }
        let heads = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let len = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        if header[12] != ID_WIDTH {
            return Err(LabelError::Format(format!("unsupported id width {}", header[12])));
        }
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        let expected = (heads + 1) * len * ID_WIDTH as usize;
        if body.len() != expected {
            return Err(LabelError::Format(format!(
                "expected {expected} payload bytes, found {}",
                body.len()
            )));
        }
        let data = body
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { heads, len, data })
    }

    /// Readable dump with specials spelled out.
    pub fn to_json(&self) -> String {
        let rows = self
            .rows()
            .map(|r| r.iter().map(|&id| label_name(id)).collect())
            .collect();
        serde_json::to_string_pretty(&LabelDump {
            heads: self.heads,
            len: self.len,
            rows,
        })
        .expect("label dump serializes")
    }
}

fn label_name(id: TokenId) -> String {
    match id {
        FRAG => "F".into(),
        PAD => "P".into(),
        IGNORE => "I".into(),
        _ => id.to_string(),
    }
}

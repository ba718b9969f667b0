// SPDX-License-Identifier: Apache-2.0

use rayon::prelude::*;

use super::LabelMatrix;
use crate::tokenizer::{TokenId, FRAG, IGNORE, PAD};

const PARALLEL_MIN_CELLS: usize = 1 << 16;

/// Reference construction: shift each row, then walk every column and
/// mask the entries below its last `[FRAG]`.
pub fn build_labels_naive(l0: &[TokenId], heads: usize) -> LabelMatrix {
    let len = l0.len();
    let mut data = vec![PAD; (heads + 1) * len];
    for i in 0..=heads {
        for s in 0..len {
            if let Some(&id) = l0.get(s + i) {
                data[i * len + s] = id;
            }
        }
    }
    for s in 0..len {
        let column: Vec<TokenId> = (0..=heads).map(|i| data[i * len + s]).collect();
        let last_frag = column.iter().rposition(|&id| id == FRAG);
        let first_masked = match last_frag {
            Some(i) => i + 1,
            None => 1,
        };
        for i in first_masked..=heads {
            data[i * len + s] = IGNORE;
        }
    }
    LabelMatrix::from_raw(heads, len, data)
}

/// Same output as [`build_labels_naive`], built from whole-row operations.
///
/// Entry `(i, s)` survives iff some row `j ≥ i` holds `[FRAG]` in column `s`,
/// i.e. the next `[FRAG]` at or after position `s + i` lies at most at
/// `s + heads`. A single suffix scan over `l0` gives the distance to that
/// `[FRAG]` for every offset, after which each row is an independent
/// shifted copy plus a mask, so rows are filled concurrently for large
/// inputs.
pub fn build_labels_parallel(l0: &[TokenId], heads: usize) -> LabelMatrix {
    let len = l0.len();
    let gap = frag_gaps(l0, heads);
    let mut data = vec![PAD; (heads + 1) * len];
    if len == 0 {
        return LabelMatrix::from_raw(heads, len, data);
    }
    let fill = |(i, row): (usize, &mut [TokenId])| {
        if i == 0 {
            row.copy_from_slice(l0);
            return;
        }
        // (i, s) survives iff next_frag(s + i) <= s + heads
        let limit = (heads - i) as u32;
        let avail = len.saturating_sub(i);
        let (body, tail) = row.split_at_mut(avail);
        for ((cell, &id), &g) in body.iter_mut().zip(&l0[i.min(len)..]).zip(&gap[i..]) {
            *cell = if g > limit { IGNORE } else { id };
        }
        for (cell, &g) in tail.iter_mut().zip(&gap[i + avail..]) {
            *cell = if g > limit { IGNORE } else { PAD };
        }
    };
    if data.len() >= PARALLEL_MIN_CELLS {
        data.par_chunks_mut(len).enumerate().for_each(fill);
    } else {
        data.chunks_mut(len).enumerate().for_each(fill);
    }
    LabelMatrix::from_raw(heads, len, data)
}

/// `out[t]` = distance from `t` to the nearest `[FRAG]` at or after it,
/// `u32::MAX` if there is none; defined for `t < len + heads` so shifted
/// rows can index past the end.
fn frag_gaps(l0: &[TokenId], heads: usize) -> Vec<u32> {
    let mut out = vec![u32::MAX; l0.len() + heads];
    let mut next: Option<usize> = None;
    for (t, &id) in l0.iter().enumerate().rev() {
        if id == FRAG {
            next = Some(t);
        }
        if let Some(n) = next {
            out[t] = u32::try_from(n - t).unwrap_or(u32::MAX);
        }
    }
    out
}

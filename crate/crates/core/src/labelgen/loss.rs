// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::{LabelError, LabelMatrix};
use crate::tokenizer::{IGNORE, PAD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    pub lambda_max: f64,
    pub gamma: f64,
    pub heads: usize,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda_max: 0.2,
            gamma: 0.8,
            heads: 10,
        }
    }
}

/// Head-loss weight at training progress `p` (fraction of steps done).
pub fn lambda_schedule(progress: f64, cfg: &LossConfig) -> f64 {
    cfg.lambda_max * (FRAC_PI_2 * progress.clamp(0.0, 1.0)).sin()
}

/// Dense `rows × len × vocab` logits, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits {
    rows: usize,
    len: usize,
    vocab: usize,
    data: Vec<f64>,
}

impl Logits {
    pub fn new(rows: usize, len: usize, vocab: usize, data: Vec<f64>) -> Result<Self, LabelError> {
        if data.len() != rows * len * vocab {
            return Err(LabelError::Shape(format!(
                "{} values for {rows}x{len}x{vocab} logits",
                data.len()
            )));
        }
        Ok(Self {
            rows,
            len,
            vocab,
            data,
        })
    }

    pub fn zeros(rows: usize, len: usize, vocab: usize) -> Self {
        Self {
            rows,
            len,
            vocab,
            data: vec![0.0; rows * len * vocab],
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.rows, self.len, self.vocab)
    }

    pub fn at(&self, row: usize, pos: usize) -> &[f64] {
        let start = (row * self.len + pos) * self.vocab;
        &self.data[start..start + self.vocab]
    }

    pub fn at_mut(&mut self, row: usize, pos: usize) -> &mut [f64] {
        let start = (row * self.len + pos) * self.vocab;
        &mut self.data[start..start + self.vocab]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub base: f64,
    /// Loss of heads `1..=H`; `per_head[0]` is head 1.
    pub per_head: Vec<f64>,
}

/// `total = base + lam · Σ_i per_head[i] · γ^i`, each row a mean
/// cross-entropy over positions not labeled IGNORE or PAD.
///
/// The head count comes from `labels`; `cfg.heads` is only the default
/// used when building labels.
pub fn compute_multihead_loss(
    logits: &Logits,
    labels: &LabelMatrix,
    lam: f64,
    cfg: &LossConfig,
) -> Result<LossBreakdown, LabelError> {
    let (rows, len, vocab) = logits.shape();
    if rows != labels.heads() + 1 || len != labels.len() {
        return Err(LabelError::Shape(format!(
            "logits {rows}x{len} vs labels {}x{}",
            labels.heads() + 1,
            labels.len()
        )));
    }
    let mut row_loss = Vec::with_capacity(rows);
    for i in 0..rows {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (s, &label) in labels.row(i).iter().enumerate() {
            if label == IGNORE || label == PAD {
                continue;
            }
            if label as usize >= vocab {
                return Err(LabelError::Shape(format!(
                    "label {label} outside vocab of {vocab}"
                )));
            }
            let z = logits.at(i, s);
            sum += log_sum_exp(z) - z[label as usize];
            n += 1;
        }
        row_loss.push(if n == 0 { 0.0 } else { sum / n as f64 });
    }
    let base = row_loss[0];
    let per_head = row_loss[1..].to_vec();
    Ok(LossBreakdown {
        total: combine_losses(base, &per_head, lam, cfg.gamma),
        base,
        per_head,
    })
}

/// `base + lam · Σ_i per_head[i-1] · γ^i`.
pub fn combine_losses(base: f64, per_head: &[f64], lam: f64, gamma: f64) -> f64 {
    let weighted: f64 = per_head
        .iter()
        .enumerate()
        .map(|(k, l)| l * gamma.powi(k as i32 + 1))
        .sum();
    base + lam * weighted
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + z.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

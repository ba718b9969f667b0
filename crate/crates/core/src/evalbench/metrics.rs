// SPDX-License-Identifier: Apache-2.0

use super::{EvalError, RunRecord};
use crate::specdec::DecodeTrace;

/// Mean over runs of output tokens per second.
pub fn speed(runs: &[RunRecord]) -> Result<f64, EvalError> {
    if runs.is_empty() {
        return Err(EvalError::Empty("speed over zero runs"));
    }
    let mut sum = 0.0;
    for r in runs {
        if r.time_s <= 0.0 {
            return Err(EvalError::ZeroTime(r.prompt_id.clone()));
        }
        sum += r.trace.total_tokens as f64 / r.time_s;
    }
    Ok(sum / runs.len() as f64)
}

pub fn speedup(method_speed: f64, ntp_speed: f64) -> f64 {
    method_speed / ntp_speed
}

/// Probability that at least one of `k` draws without replacement from `n`
/// attempts, `c` of them correct, is correct: `1 − C(n−c, k) / C(n, k)`.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, EvalError> {
    if c > n || k == 0 || k > n {
        return Err(EvalError::Domain(format!(
            "pass@k needs 0 ≤ c ≤ n and 1 ≤ k ≤ n, got n={n} c={c} k={k}"
        )));
    }
    if n - c < k {
        return Ok(1.0);
    }
    if k == 1 {
        return Ok(c as f64 / n as f64);
    }
    let miss: f64 = (n - k + 1..=n).map(|j| 1.0 - c as f64 / j as f64).product();
    Ok(1.0 - miss)
}

/// Fraction of benchmark items solved.
pub fn pass_rate(solved: u64, benchmark_size: u64) -> Result<f64, EvalError> {
    if benchmark_size == 0 || solved > benchmark_size {
        return Err(EvalError::Domain(format!(
            "pass rate needs 0 ≤ m ≤ size and size > 0, got {solved}/{benchmark_size}"
        )));
    }
    Ok(solved as f64 / benchmark_size as f64)
}

/// Emitted ids per step, `[FRAG]` included.
pub fn mean_accepted_length(trace: &DecodeTrace) -> Result<f64, EvalError> {
    if trace.steps.is_empty() {
        return Err(EvalError::Empty("trace without steps"));
    }
    Ok(trace.mean_accepted_length())
}

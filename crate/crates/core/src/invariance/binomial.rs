use super::TestError;

/// Terms more than this many nats below the largest are dropped once past the mode.
const LOG_CUTOFF: f64 = 45.0;

/// `ln C(m, k)` as a sum of log ratios over the shorter side.
pub fn ln_choose(m: u64, k: u64) -> f64 {
    let r = k.min(m - k);
    let base = (m - r) as f64;
    (1..=r).map(|i| ((base + i as f64) / i as f64).ln()).sum()
}

/// Upper binomial tail `P(Binom(m, p) >= k)`.
///
/// Terms are generated in log space by the ratio recurrence and summed with a
/// running maximum, so neither `m = 10^6` nor tiny `p` under- or overflows.
pub fn binom_tail(m: u64, k: u64, p: f64) -> Result<f64, TestError> {
    if k > m {
        return Err(TestError::InvalidParameter(format!("tail index {k} exceeds trials {m}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(TestError::InvalidParameter(format!("probability {p} outside [0, 1]")));
    }
    if k == 0 || p == 1.0 {
        return Ok(1.0);
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let ln_odds = ln_p - ln_q;
    if (k as f64) <= m as f64 * p {
        // Below the mean the upper tail is close to 1; go through the lower tail.
        let lower = log_sum(ln_choose(m, k - 1) + (k - 1) as f64 * ln_p + (m - k + 1) as f64 * ln_q, k - 1, false, |j| {
            (j > 0).then(|| (j as f64 / (m - j + 1) as f64).ln() - ln_odds)
        });
        return Ok((1.0 - lower).clamp(0.0, 1.0));
    }
    let upper = log_sum(ln_choose(m, k) + k as f64 * ln_p + (m - k) as f64 * ln_q, k, true, |j| {
        (j < m).then(|| ((m - j) as f64 / (j + 1) as f64).ln() + ln_odds)
    });
    Ok(upper.min(1.0))
}

/// Sums `exp(ln_term)` over a run of terms starting at index `start` and
/// moving up (or down) one index at a time. `step(j)` is the log ratio from
/// term `j` to the next, `None` at the end of the run. Stops once past the
/// peak and more than `LOG_CUTOFF` below it.
fn log_sum(mut ln_term: f64, start: u64, up: bool, step: impl Fn(u64) -> Option<f64>) -> f64 {
    let mut logs = Vec::new();
    let mut max = f64::NEG_INFINITY;
    let mut j = start;
    loop {
        logs.push(ln_term);
        max = max.max(ln_term);
        let Some(s) = step(j) else { break };
        ln_term += s;
        j = if up { j + 1 } else { j - 1 };
        if s < 0.0 && ln_term < max - LOG_CUTOFF {
            break;
        }
    }
    // Smallest terms first.
    let total: f64 = logs.iter().rev().map(|&l| (l - max).exp()).fold(0.0, |acc, t| acc + t);
    (max + total.ln()).exp()
}

//! Per-replicate FDP and power against known signal indicators.

use crate::error::{check_len, Result};
use crate::types::{GroundTruth, TestOutcome};

/// False discovery proportion `sum((1 - theta) delta) / max(sum(delta), 1)`.
pub fn compute_fdp(outcome: &TestOutcome, truth: &GroundTruth) -> Result<f64> {
    check_len(truth.len(), outcome.len())?;
    let (false_pos, total) = outcome
        .rejected
        .iter()
        .zip(truth.theta())
        .filter(|(&r, _)| r)
        .fold((0usize, 0usize), |(f, n), (_, &signal)| {
            (f + usize::from(!signal), n + 1)
        });
    Ok(false_pos as f64 / total.max(1) as f64)
}

/// Fraction of true signals rejected; 0 when the batch has no signals.
pub fn compute_power(outcome: &TestOutcome, truth: &GroundTruth) -> Result<f64> {
    check_len(truth.len(), outcome.len())?;
    let true_pos = outcome
        .rejected
        .iter()
        .zip(truth.theta())
        .filter(|(&r, &s)| r && s)
        .count();
    Ok(true_pos as f64 / truth.n_signals().max(1) as f64)
}

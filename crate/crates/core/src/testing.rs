//! Step-up rejection rules: the locally adaptive weighted rule, BH,
//! Bonferroni and weighted BH.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::types::TestOutcome;
use crate::weights::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Procedure {
    Latla,
    Bh,
    Bonferroni,
    Wbh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcedureConfig {
    pub alpha: f64,
    pub procedure: Procedure,
}

impl ProcedureConfig {
    pub fn new(alpha: f64, procedure: Procedure) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha, procedure })
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "alpha",
            format!("must be in (0, 1), got {alpha}"),
        ))
    }
}

fn check_p(p: &[f64]) -> Result<()> {
    match p.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(index) => Err(Error::InvalidValue {
            index,
            reason: format!("p-value {} outside [0, 1]", p[index]),
        }),
        None => Ok(()),
    }
}

/// Indices sorting `values` ascending, ties by index.
fn argsort(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

/// Shared step-up: `k = max{j : scale * v_(j) / j <= level}`. Hypotheses tied
/// with `v_(k)` always satisfy the bound together, so they are rejected
/// together.
fn step_up(values: &[f64], scale: f64, level: f64) -> TestOutcome {
    let m = values.len();
    let order = argsort(values);
    let fdp_hat_path: Vec<f64> = order
        .iter()
        .enumerate()
        .map(|(r, &i)| scale * values[i] / (r + 1) as f64)
        .collect();
    let k = fdp_hat_path
        .iter()
        .rposition(|&f| f <= level)
        .map_or(0, |r| r + 1);
    let mut rejected = vec![false; m];
    for &i in &order[..k] {
        rejected[i] = true;
    }
    TestOutcome {
        rejected,
        k,
        threshold: (k > 0).then(|| values[order[k - 1]]),
        fdp_hat_path,
        order,
    }
}

/// BH step-up threshold `p_(k)` at `level`, `None` when nothing is rejected.
pub fn bh_threshold(p: &[f64], level: f64) -> Option<f64> {
    step_up(p, p.len() as f64, level).threshold
}

/// Weighted step-up `k = max{j : C v_(j) / j <= alpha}` with
/// `C = sum w_i (1 - pi_i)` and `v_i = P_i / w_i`.
///
/// The ratios are not capped at 1 here: under a cap every hypothesis with
/// `P_i >= w_i` would share the value 1 and be rejected as soon as
/// `C / m <= alpha`, which happens whenever most weights sit at the floor.
/// Capping does not change the ranking, so reported weighted p-values can
/// still use [`weighted_p_values`].
pub fn weighted_step_up(p: &[f64], w: &[f64], pi: &[f64], alpha: f64) -> Result<TestOutcome> {
    check_len(p.len(), w.len())?;
    check_len(p.len(), pi.len())?;
    check_alpha(alpha)?;
    check_p(p)?;
    if let Some(index) = w.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidValue {
            index,
            reason: format!("weight {} is not positive", w[index]),
        });
    }
    let c: f64 = w.iter().zip(pi).map(|(wi, pii)| wi * (1.0 - pii)).sum();
    let ratio: Vec<f64> = p.iter().zip(w).map(|(pi, wi)| pi / wi).collect();
    Ok(step_up(&ratio, c, alpha))
}

/// `P^w_i = min(P_i / w_i, 1)`.
pub fn weighted_p_values(p: &[f64], w: &[f64]) -> Vec<f64> {
    p.iter().zip(w).map(|(pi, wi)| (pi / wi).min(1.0)).collect()
}

pub fn latla_threshold(p: &[f64], w: &WeightVector, pi: &[f64], alpha: f64) -> Result<TestOutcome> {
    weighted_step_up(p, &w.w, pi, alpha)
}

pub fn bh(p: &[f64], alpha: f64) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    check_p(p)?;
    Ok(step_up(p, p.len() as f64, alpha))
}

pub fn bonferroni(p: &[f64], fwer: f64) -> Result<TestOutcome> {
    check_alpha(fwer)?;
    check_p(p)?;
    let cutoff = fwer / p.len() as f64;
    let order = argsort(p);
    let rejected: Vec<bool> = p.iter().map(|&v| v <= cutoff).collect();
    let k = rejected.iter().filter(|&&r| r).count();
    Ok(TestOutcome {
        rejected,
        k,
        threshold: (k > 0).then_some(cutoff),
        fdp_hat_path: Vec::new(),
        order,
    })
}

/// BH on `p_i / w_i` after rescaling the weights to sum to `m`.
pub fn wbh(p: &[f64], w_raw: &[f64], alpha: f64) -> Result<TestOutcome> {
    check_len(p.len(), w_raw.len())?;
    check_alpha(alpha)?;
    check_p(p)?;
    if let Some(index) = w_raw.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidValue {
            index,
            reason: format!("weight {} is not positive", w_raw[index]),
        });
    }
    let m = p.len() as f64;
    let total: f64 = w_raw.iter().sum();
    let pw: Vec<f64> = p
        .iter()
        .zip(w_raw)
        .map(|(pi, wi)| (pi / (m * wi / total)).min(1.0))
        .collect();
    Ok(step_up(&pw, m, alpha))
}

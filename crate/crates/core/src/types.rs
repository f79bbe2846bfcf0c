//! Domain types shared across the crate.

use crate::error::{check_len, Error, Result};
use crate::null::NullDensity;

/// Primary statistics of the target domain together with their declared null.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisBatch {
    t_stats: Vec<f64>,
    p_values: Vec<f64>,
    null: NullDensity,
}

impl HypothesisBatch {
    /// Builds a batch from test statistics, deriving two-sided p-values.
    pub fn from_t(t_stats: Vec<f64>, null: NullDensity) -> Result<Self> {
        if t_stats.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(index) = t_stats.iter().position(|t| t.is_nan()) {
            return Err(Error::InvalidValue {
                index,
                reason: "NaN statistic".into(),
            });
        }
        let p_values = p_from_t(&t_stats, &null);
        Ok(Self {
            t_stats,
            p_values,
            null,
        })
    }

    /// Builds a batch from statistics and externally supplied p-values.
    pub fn with_p_values(t_stats: Vec<f64>, p_values: Vec<f64>, null: NullDensity) -> Result<Self> {
        if t_stats.is_empty() {
            return Err(Error::Empty);
        }
        check_len(t_stats.len(), p_values.len())?;
        for (index, (&t, &p)) in t_stats.iter().zip(&p_values).enumerate() {
            if t.is_nan() {
                return Err(Error::InvalidValue {
                    index,
                    reason: "NaN statistic".into(),
                });
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidValue {
                    index,
                    reason: format!("p-value {p} outside [0, 1]"),
                });
            }
        }
        Ok(Self {
            t_stats,
            p_values,
            null,
        })
    }

    pub fn len(&self) -> usize {
        self.t_stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_stats.is_empty()
    }

    pub fn t_stats(&self) -> &[f64] {
        &self.t_stats
    }

    pub fn p_values(&self) -> &[f64] {
        &self.p_values
    }

    pub fn null(&self) -> &NullDensity {
        &self.null
    }
}

/// Two-sided p-values `2 (1 - F0(|t|))` under a symmetric null.
pub fn p_from_t(t_stats: &[f64], null: &NullDensity) -> Vec<f64> {
    t_stats.iter().map(|&t| null.two_sided_p(t)).collect()
}

/// Signal indicators, known only in simulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    theta: Vec<bool>,
}

impl GroundTruth {
    pub fn new(theta: Vec<bool>) -> Self {
        Self { theta }
    }

    pub fn from_indicators(theta: &[u8]) -> Result<Self> {
        let theta = theta
            .iter()
            .enumerate()
            .map(|(index, &v)| match v {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(Error::InvalidValue {
                    index,
                    reason: format!("indicator {v} not in {{0,1}}"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { theta })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn theta(&self) -> &[bool] {
        &self.theta
    }

    pub fn n_signals(&self) -> usize {
        self.theta.iter().filter(|&&s| s).count()
    }
}

/// Result of a rejection procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    /// `rejected[i]` is the decision for hypothesis `i`.
    pub rejected: Vec<bool>,
    /// Number of rejections.
    pub k: usize,
    /// Cutoff applied to the ranking statistic, `None` when nothing is rejected.
    pub threshold: Option<f64>,
    /// Estimated FDP at each candidate cutoff, in ranking order.
    pub fdp_hat_path: Vec<f64>,
    /// Hypothesis indices sorted by the ranking statistic (ties by index).
    pub order: Vec<usize>,
}

impl TestOutcome {
    pub fn len(&self) -> usize {
        self.rejected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rejected.is_empty()
    }

    pub fn rejected_indices(&self) -> Vec<usize> {
        self.rejected
            .iter()
            .enumerate()
            .filter_map(|(i, &r)| r.then_some(i))
            .collect()
    }

    /// Builds an outcome from an externally provided decision vector.
    pub fn from_rejections(rejected: Vec<bool>) -> Self {
        let k = rejected.iter().filter(|&&r| r).count();
        let order = (0..rejected.len()).collect();
        Self {
            rejected,
            k,
            threshold: None,
            fdp_hat_path: Vec::new(),
            order,
        }
    }
}

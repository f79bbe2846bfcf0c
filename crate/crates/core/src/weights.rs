//! Sparsity-adaptive and oracle-assisted p-value weights.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::localstats::LocalDensity;
use crate::testing::check_alpha;
use crate::types::HypothesisBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    Sparsity,
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub w: Vec<f64>,
    pub scheme: WeightScheme,
    /// `L_(k)`; oracle scheme only.
    pub l_threshold: Option<f64>,
    pub degenerate: bool,
}

impl WeightVector {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// `w_i = pi_i / (1 - pi_i)`, floored at `xi`.
pub fn sparsity_weights(pi: &[f64], xi: f64) -> WeightVector {
    WeightVector {
        w: pi.iter().map(|&p| (p / (1.0 - p)).max(xi)).collect(),
        scheme: WeightScheme::Sparsity,
        l_threshold: None,
        degenerate: false,
    }
}

/// `L_i = (1 - pi_i) f0(t_i) / f_i(t_i)`.
pub fn lfdr_stats(pi: &[f64], f_at_t: &[f64], batch: &HypothesisBatch) -> Result<Vec<f64>> {
    check_len(batch.len(), pi.len())?;
    check_len(batch.len(), f_at_t.len())?;
    let null = batch.null();
    Ok(pi
        .iter()
        .zip(f_at_t)
        .zip(batch.t_stats())
        .map(|((&p, &f), &t)| (1.0 - p) * null.pdf(t) / f)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleThreshold {
    pub k: usize,
    pub l_k: f64,
    pub degenerate: bool,
}

/// `k = max{j : mean(L_(1..j)) <= alpha}`. When no `j` qualifies the result
/// is degenerate and `l_k` sits just below `min(L)`.
pub fn oracle_threshold(l: &[f64], alpha: f64) -> Result<OracleThreshold> {
    check_alpha(alpha)?;
    if l.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(index) = l.iter().position(|v| v.is_nan()) {
        return Err(Error::InvalidValue {
            index,
            reason: "NaN lfdr statistic".into(),
        });
    }
    let mut sorted = l.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sum = 0.0;
    let mut k = 0;
    for (j, &v) in sorted.iter().enumerate() {
        sum += v;
        if sum / (j + 1) as f64 <= alpha {
            k = j + 1;
        }
    }
    Ok(if k == 0 {
        let min = sorted[0];
        OracleThreshold {
            k,
            l_k: min - 1e-12 * min.abs().max(1.0),
            degenerate: true,
        }
    } else {
        OracleThreshold {
            k,
            l_k: sorted[k - 1],
            degenerate: false,
        }
    })
}

/// Search grid for the boundary points `t_i^+` / `t_i^-`.
///
/// The half-line `[0, range]` is covered by `points` equally spaced nodes.
/// Nodes are first checked every `stride` steps; the first bracket holding a
/// crossing is then scanned node by node and refined by bisection to `tol`.
/// `stride = 1` is the plain full scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSearch {
    pub points: usize,
    pub range: f64,
    pub stride: usize,
    pub tol: f64,
}

impl Default for GridSearch {
    fn default() -> Self {
        Self {
            points: 4001,
            range: 10.0,
            stride: 10,
            tol: 1e-8,
        }
    }
}

impl GridSearch {
    pub fn full_scan() -> Self {
        Self {
            stride: 1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::invalid("grid.points", "need at least two nodes"));
        }
        if !(self.range.is_finite() && self.range > 0.0) {
            return Err(Error::invalid("grid.range", "must be positive"));
        }
        if self.stride == 0 {
            return Err(Error::invalid("grid.stride", "must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("grid.tol", "must be positive"));
        }
        Ok(())
    }

    fn step(&self) -> f64 {
        self.range / (self.points - 1) as f64
    }
}

/// Per-row search context. `sign` selects the half-line: `+1` scans
/// `t = u >= 0`, `-1` scans `t = -u <= 0`.
struct Row {
    i: usize,
    sign: f64,
    one_minus_pi: f64,
}

/// Oracle-assisted weights: `w_i = 1 - F0(t_i^+)` for `t_i >= 0` and
/// `w_i = F0(t_i^-)` otherwise, clipped to `[xi, 1 - xi]`. An empty
/// rejection region gives `w_i = xi`.
pub fn oracle_weights<D: LocalDensity + ?Sized>(
    batch: &HypothesisBatch,
    pi: &[f64],
    density: &D,
    threshold: &OracleThreshold,
    xi: f64,
    grid: &GridSearch,
) -> Result<WeightVector> {
    let m = batch.len();
    check_len(m, pi.len())?;
    check_len(m, density.len())?;
    grid.validate()?;
    if !(xi > 0.0 && xi < 0.5) {
        return Err(Error::invalid(
            "xi",
            format!("must be in (0, 0.5), got {xi}"),
        ));
    }
    let mut w = vec![xi; m];
    if !threshold.degenerate {
        let null = batch.null();
        let step = grid.step();
        // Past the first node with 1 - F0(u) < xi every crossing yields the floor weight.
        let last = (0..grid.points)
            .find(|&g| null.sf(g as f64 * step) < xi)
            .unwrap_or(grid.points - 1);
        let mut coarse: Vec<usize> = (0..=last).step_by(grid.stride).collect();
        if *coarse.last().unwrap() != last {
            coarse.push(last);
        }
        let u_coarse: Vec<f64> = coarse.iter().map(|&g| g as f64 * step).collect();
        let f0_coarse: Vec<f64> = u_coarse.iter().map(|&u| null.pdf(u)).collect();

        for sign in [1.0, -1.0] {
            let rows: Vec<Row> = (0..m)
                .filter(|&i| (batch.t_stats()[i] >= 0.0) == (sign > 0.0))
                .map(|i| Row {
                    i,
                    sign,
                    one_minus_pi: 1.0 - pi[i],
                })
                .collect();
            if rows.is_empty() {
                continue;
            }
            let idx: Vec<usize> = rows.iter().map(|r| r.i).collect();
            let t_grid: Vec<f64> = u_coarse.iter().map(|&u| sign * u).collect();
            let mut values = vec![0.0; rows.len() * t_grid.len()];
            density.density_on_grid(&idx, &t_grid, &mut values);
            let found: Vec<Option<f64>> = rows
                .par_iter()
                .zip(values.par_chunks(t_grid.len()))
                .map(|(row, fvals)| {
                    let below = |f0: f64, f: f64| row.one_minus_pi * f0 <= threshold.l_k * f;
                    let c = (0..coarse.len()).find(|&c| below(f0_coarse[c], fvals[c]))?;
                    if c == 0 {
                        return Some(0.0);
                    }
                    let ratio_below =
                        |u: f64| below(null.pdf(u), density.density(row.i, row.sign * u));
                    // First crossing node inside the coarse bracket.
                    let g = (coarse[c - 1] + 1..coarse[c])
                        .find(|&g| ratio_below(g as f64 * step))
                        .unwrap_or(coarse[c]);
                    let (mut lo, mut hi) = ((g - 1) as f64 * step, g as f64 * step);
                    while hi - lo > grid.tol {
                        let mid = 0.5 * (lo + hi);
                        if ratio_below(mid) {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    Some(hi)
                })
                .collect();
            for (row, u) in rows.iter().zip(found) {
                if let Some(u) = u {
                    w[row.i] = null.sf(u).clamp(xi, 1.0 - xi);
                }
            }
        }
    }
    Ok(WeightVector {
        w,
        scheme: WeightScheme::Oracle,
        l_threshold: Some(threshold.l_k),
        degenerate: threshold.degenerate,
    })
}

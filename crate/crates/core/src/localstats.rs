//! Kernel-weighted local sparsity and density estimates over distance
//! neighbourhoods.

use rayon::prelude::*;

use crate::distances::DistanceMatrix;
use crate::error::{check_len, Error, Result};
use crate::kernels::{KernelSpec, Neighborhood};
use crate::testing::bh_threshold;
use crate::types::HypothesisBatch;

/// Default screening level for the BH-calibrated `tau`.
pub const TAU_LEVEL: f64 = 0.8;
/// `tau` used when the calibrating BH pass rejects nothing.
pub const TAU_FALLBACK: f64 = 0.5;
/// Default robustness constant for weight and sparsity clipping.
pub const DEFAULT_XI: f64 = 1e-5;
/// Lower bound applied to every local density value.
pub const DENSITY_FLOOR: f64 = 1e-10;

/// BH step-up threshold `p_(k)` at `level`, or [`TAU_FALLBACK`] when BH
/// rejects nothing.
pub fn calibrate_tau(p_values: &[f64], level: f64) -> f64 {
    match bh_threshold(p_values, level) {
        Some(t) if t > 0.0 && t < 1.0 => t,
        _ => TAU_FALLBACK,
    }
}

/// Relational weights `V_h(i, j)` restricted to each neighbourhood.
#[derive(Debug, Clone)]
pub struct NeighborWeights {
    rows: Vec<RowWeights>,
}

#[derive(Debug, Clone)]
struct RowWeights {
    members: Vec<usize>,
    v: Vec<f64>,
    total: f64,
}

impl NeighborWeights {
    pub fn new(
        s: &DistanceMatrix,
        neighborhoods: &[Neighborhood],
        kernel: &KernelSpec,
    ) -> Result<Self> {
        check_len(s.dim(), neighborhoods.len())?;
        let rows = neighborhoods
            .par_iter()
            .map(|nb| {
                let v: Vec<f64> = nb
                    .members
                    .iter()
                    .map(|&j| kernel.v_weight(s.get(nb.center, j)))
                    .collect();
                let total = v.iter().sum();
                RowWeights {
                    members: nb.members.clone(),
                    v,
                    total,
                }
            })
            .collect();
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn members(&self, i: usize) -> &[usize] {
        &self.rows[i].members
    }

    pub fn weights(&self, i: usize) -> &[f64] {
        &self.rows[i].v
    }

    /// Total relational mass `sum_{j in N_i} V_h(i, j)`.
    pub fn mass(&self, i: usize) -> f64 {
        self.rows[i].total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiEstimate {
    /// Clipped to `[0, 1 - xi]`.
    pub pi: Vec<f64>,
    /// Before clipping.
    pub raw: Vec<f64>,
    pub clip_count: usize,
    /// Rows whose neighbourhood carried zero relational mass.
    pub zero_mass_count: usize,
}

/// Local sparsity
/// `pi_i = 1 - sum V I(P_j > tau) / ((1 - tau) sum V)` over `j in N_i`,
/// clipped to `[0, 1 - xi]`.
pub fn estimate_pi(
    p_values: &[f64],
    weights: &NeighborWeights,
    tau: f64,
    xi: f64,
) -> Result<PiEstimate> {
    check_len(weights.len(), p_values.len())?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid(
            "tau",
            format!("must be in (0, 1), got {tau}"),
        ));
    }
    let raw: Vec<Option<f64>> = weights
        .rows
        .par_iter()
        .map(|row| {
            if !(row.total > 0.0) {
                return None;
            }
            let above: f64 = row
                .members
                .iter()
                .zip(&row.v)
                .filter(|(&j, _)| p_values[j] > tau)
                .map(|(_, &v)| v)
                .sum();
            Some(1.0 - above / ((1.0 - tau) * row.total))
        })
        .collect();
    let zero_mass_count = raw.iter().filter(|r| r.is_none()).count();
    if zero_mass_count > 0 {
        log::warn!("{zero_mass_count} neighbourhoods carry zero kernel mass; their pi is set to 0");
    }
    let raw: Vec<f64> = raw.into_iter().map(|r| r.unwrap_or(0.0)).collect();
    let upper = 1.0 - xi;
    let mut clip_count = 0;
    let pi = raw
        .iter()
        .map(|&r| {
            if r < 0.0 || r > upper {
                clip_count += 1;
            }
            r.clamp(0.0, upper)
        })
        .collect();
    Ok(PiEstimate {
        pi,
        raw,
        clip_count,
        zero_mass_count,
    })
}

/// Densities `f_i(t)` that can be evaluated at arbitrary points.
pub trait LocalDensity: Sync {
    fn len(&self) -> usize;

    fn density(&self, i: usize, t: f64) -> f64;

    /// Fills `out[r * grid.len() + g]` with `f_{rows[r]}(grid[g])`.
    fn density_on_grid(&self, rows: &[usize], grid: &[f64], out: &mut [f64]) {
        let g = grid.len();
        out.par_chunks_mut(g.max(1))
            .zip(rows.par_iter())
            .for_each(|(chunk, &i)| {
                for (o, &t) in chunk.iter_mut().zip(grid) {
                    *o = self.density(i, t);
                }
            });
    }
}

/// Data-driven local density
/// `f_i(t) = sum V K_h(t_j - t) / sum V` over `j in N_i`, floored at
/// [`DENSITY_FLOOR`].
pub struct KernelDensity<'a> {
    t_stats: &'a [f64],
    weights: &'a NeighborWeights,
    kernel: KernelSpec,
}

impl<'a> KernelDensity<'a> {
    pub fn new(
        t_stats: &'a [f64],
        weights: &'a NeighborWeights,
        kernel: KernelSpec,
    ) -> Result<Self> {
        check_len(weights.len(), t_stats.len())?;
        Ok(Self {
            t_stats,
            weights,
            kernel,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }
}

impl LocalDensity for KernelDensity<'_> {
    fn len(&self) -> usize {
        self.t_stats.len()
    }

    fn density(&self, i: usize, t: f64) -> f64 {
        let row = &self.weights.rows[i];
        if !(row.total > 0.0) {
            return DENSITY_FLOOR;
        }
        let s: f64 = row
            .members
            .iter()
            .zip(&row.v)
            .map(|(&j, &v)| v * self.kernel.eval(self.t_stats[j] - t))
            .sum();
        (s / row.total).max(DENSITY_FLOOR)
    }

    fn density_on_grid(&self, rows: &[usize], grid: &[f64], out: &mut [f64]) {
        let g = grid.len();
        if g == 0 {
            return;
        }
        // Kernel values K_h(t_j - grid) for every j, shared across rows.
        let mut kmat = vec![0.0; self.t_stats.len() * g];
        kmat.par_chunks_mut(g)
            .zip(self.t_stats.par_iter())
            .for_each(|(chunk, &tj)| {
                for (k, &t) in chunk.iter_mut().zip(grid) {
                    *k = self.kernel.eval(tj - t);
                }
            });
        out.par_chunks_mut(g)
            .zip(rows.par_iter())
            .for_each(|(chunk, &i)| {
                let row = &self.weights.rows[i];
                chunk.fill(0.0);
                if !(row.total > 0.0) {
                    chunk.fill(DENSITY_FLOOR);
                    return;
                }
                for (&j, &v) in row.members.iter().zip(&row.v) {
                    if v == 0.0 {
                        continue;
                    }
                    let kr = &kmat[j * g..(j + 1) * g];
                    for (o, &k) in chunk.iter_mut().zip(kr) {
                        *o += v * k;
                    }
                }
                let inv = 1.0 / row.total;
                for o in chunk.iter_mut() {
                    *o = (*o * inv).max(DENSITY_FLOOR);
                }
            });
    }
}

/// Per-hypothesis local estimates used by the oracle-assisted weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalEstimates {
    pub pi: Vec<f64>,
    /// `f_i(t_i)`.
    pub f_at_t: Vec<f64>,
    pub tau: f64,
    pub clip_count: usize,
    pub zero_mass_count: usize,
}

/// Estimates `pi_i` and `f_i(t_i)` for every hypothesis.
pub fn estimate_local(
    batch: &HypothesisBatch,
    weights: &NeighborWeights,
    kernel: KernelSpec,
    tau: f64,
    xi: f64,
) -> Result<LocalEstimates> {
    let pi = estimate_pi(batch.p_values(), weights, tau, xi)?;
    let density = KernelDensity::new(batch.t_stats(), weights, kernel)?;
    let f_at_t = (0..batch.len())
        .into_par_iter()
        .map(|i| density.density(i, batch.t_stats()[i]))
        .collect();
    Ok(LocalEstimates {
        pi: pi.pi,
        f_at_t,
        tau,
        clip_count: pi.clip_count,
        zero_mass_count: pi.zero_mass_count,
    })
}

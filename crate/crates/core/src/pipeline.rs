//! End-to-end locally adaptive procedure: neighbourhoods, local estimates,
//! oracle-assisted weights and the weighted step-up.

use serde::{Deserialize, Serialize};

use crate::distances::DistanceMatrix;
use crate::error::{check_len, Error, Result};
use crate::kernels::{build_neighborhoods, select_bandwidth, BandwidthRule, KernelSpec};
use crate::localstats::{
    calibrate_tau, estimate_local, KernelDensity, LocalDensity, NeighborWeights, DEFAULT_XI,
    TAU_LEVEL,
};
use crate::testing::{check_alpha, latla_threshold};
use crate::types::{HypothesisBatch, TestOutcome};
use crate::weights::{
    lfdr_stats, oracle_threshold, oracle_weights, GridSearch, OracleThreshold, WeightVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum TauRule {
    /// BH threshold at `level` on the unweighted p-values.
    Bh {
        level: f64,
    },
    Fixed {
        value: f64,
    },
}

impl Default for TauRule {
    fn default() -> Self {
        TauRule::Bh { level: TAU_LEVEL }
    }
}

impl TauRule {
    pub fn resolve(&self, p_values: &[f64]) -> f64 {
        match *self {
            TauRule::Bh { level } => calibrate_tau(p_values, level),
            TauRule::Fixed { value } => value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatlaConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub xi: f64,
    pub tau: TauRule,
    /// Bandwidth of the density kernel, selected on the primary statistics.
    pub bandwidth: BandwidthRule,
    /// Bandwidth of the relational weights; `None` reuses the density bandwidth.
    pub distance_bandwidth: Option<BandwidthRule>,
    pub grid: GridSearch,
}

impl Default for LatlaConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            epsilon: 0.1,
            xi: DEFAULT_XI,
            tau: TauRule::default(),
            bandwidth: BandwidthRule::default(),
            distance_bandwidth: None,
            grid: GridSearch::default(),
        }
    }
}

impl LatlaConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::invalid(
                "epsilon",
                format!("must be in [0, 1), got {}", self.epsilon),
            ));
        }
        if !(self.xi > 0.0 && self.xi < 0.5) {
            return Err(Error::invalid(
                "xi",
                format!("must be in (0, 0.5), got {}", self.xi),
            ));
        }
        match self.tau {
            TauRule::Bh { level } if !(level > 0.0 && level < 1.0) => {
                return Err(Error::invalid(
                    "tau",
                    format!("BH level must be in (0, 1), got {level}"),
                ));
            }
            TauRule::Fixed { value } if !(value > 0.0 && value < 1.0) => {
                return Err(Error::invalid(
                    "tau",
                    format!("must be in (0, 1), got {value}"),
                ));
            }
            _ => {}
        }
        for rule in std::iter::once(self.bandwidth).chain(self.distance_bandwidth) {
            if let BandwidthRule::Manual { h } = rule {
                if !(h.is_finite() && h > 0.0) {
                    return Err(Error::invalid(
                        "bandwidth",
                        format!("must be positive, got {h}"),
                    ));
                }
            }
        }
        self.grid.validate()
    }
}

/// Data-driven local model: neighbourhoods, relational weights and kernels.
#[derive(Debug, Clone)]
pub struct LocalModel {
    pub kernel: KernelSpec,
    pub distance_kernel: KernelSpec,
    pub weights: NeighborWeights,
    pub neighborhood_size: usize,
}

impl LocalModel {
    pub fn fit(batch: &HypothesisBatch, s: &DistanceMatrix, config: &LatlaConfig) -> Result<Self> {
        check_len(batch.len(), s.dim())?;
        let h = select_bandwidth(batch.t_stats(), config.bandwidth)?;
        let kernel = KernelSpec::gaussian(h)?;
        let distance_kernel = match config.distance_bandwidth {
            Some(BandwidthRule::Manual { h }) => KernelSpec::gaussian(h)?,
            Some(rule) => {
                let offdiag: Vec<f64> = (0..s.dim())
                    .flat_map(|i| s.row_entries(i).into_iter().filter(move |&(j, _)| j > i))
                    .map(|(_, d)| d)
                    .collect();
                KernelSpec::gaussian(select_bandwidth(&offdiag, rule)?)?
            }
            None => kernel,
        };
        let neighborhoods = build_neighborhoods(s, config.epsilon)?;
        let neighborhood_size = neighborhoods.first().map_or(0, |n| n.size());
        let weights = NeighborWeights::new(s, &neighborhoods, &distance_kernel)?;
        Ok(Self {
            kernel,
            distance_kernel,
            weights,
            neighborhood_size,
        })
    }
}

/// Output of one LATLA run with its intermediate quantities.
#[derive(Debug, Clone)]
pub struct LatlaRun {
    pub outcome: TestOutcome,
    pub weights: WeightVector,
    pub pi: Vec<f64>,
    pub lfdr: Vec<f64>,
    pub threshold: OracleThreshold,
    pub tau: f64,
    pub bandwidth: f64,
    pub pi_clip_count: usize,
    pub zero_mass_count: usize,
}

/// Weights and rejections from given local sparsities and densities.
pub fn latla_from_estimates<D: LocalDensity + ?Sized>(
    batch: &HypothesisBatch,
    pi: &[f64],
    f_at_t: &[f64],
    density: &D,
    config: &LatlaConfig,
) -> Result<(TestOutcome, WeightVector, Vec<f64>, OracleThreshold)> {
    let lfdr = lfdr_stats(pi, f_at_t, batch)?;
    let threshold = oracle_threshold(&lfdr, config.alpha)?;
    let weights = oracle_weights(batch, pi, density, &threshold, config.xi, &config.grid)?;
    let outcome = latla_threshold(batch.p_values(), &weights, pi, config.alpha)?;
    Ok((outcome, weights, lfdr, threshold))
}

/// Runs the procedure on a prepared local model.
pub fn run_with_model(
    batch: &HypothesisBatch,
    model: &LocalModel,
    config: &LatlaConfig,
) -> Result<LatlaRun> {
    config.validate()?;
    let tau = config.tau.resolve(batch.p_values());
    let local = estimate_local(batch, &model.weights, model.kernel, tau, config.xi)?;
    let density = KernelDensity::new(batch.t_stats(), &model.weights, model.kernel)?;
    let (outcome, weights, lfdr, threshold) =
        latla_from_estimates(batch, &local.pi, &local.f_at_t, &density, config)?;
    Ok(LatlaRun {
        outcome,
        weights,
        pi: local.pi,
        lfdr,
        threshold,
        tau,
        bandwidth: model.kernel.bandwidth(),
        pi_clip_count: local.clip_count,
        zero_mass_count: local.zero_mass_count,
    })
}

/// Fits the local model and runs the procedure.
pub fn run_latla(
    batch: &HypothesisBatch,
    s: &DistanceMatrix,
    config: &LatlaConfig,
) -> Result<LatlaRun> {
    config.validate()?;
    let model = LocalModel::fit(batch, s, config)?;
    run_with_model(batch, &model, config)
}

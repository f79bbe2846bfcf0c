use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ols::ols_t_stats;
use super::oracle::LatentOracle;
use crate::distances::{
    euclidean_distance, mahalanobis_distance, AuxiliarySample, DistanceMatrix, MULTI_AUX_SCALE,
    REGRESSION_SCALE,
};
use crate::error::{Error, Result};
use crate::null::NullDensity;
use crate::types::{GroundTruth, HypothesisBatch};

/// Prior probability of a signal in every design.
pub const SIGNAL_PROB: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignKind {
    Network,
    Regression,
    Latent,
    MultiAux,
}

impl DesignKind {
    pub fn name(&self) -> &'static str {
        match self {
            DesignKind::Network => "network",
            DesignKind::Regression => "regression",
            DesignKind::Latent => "latent",
            DesignKind::MultiAux => "multi-aux",
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DesignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "network" => Ok(DesignKind::Network),
            "regression" => Ok(DesignKind::Regression),
            "latent" => Ok(DesignKind::Latent),
            "multi-aux" | "multiaux" => Ok(DesignKind::MultiAux),
            other => Err(Error::invalid(
                "design",
                format!("unknown design `{other}`"),
            )),
        }
    }
}

/// One point of a simulation design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "design", rename_all = "kebab-case")]
pub enum Scenario {
    Network {
        m: usize,
        mu1: f64,
        mu2: f64,
    },
    Regression {
        m: usize,
        n: usize,
        k: usize,
        mu: f64,
        sigma: f64,
    },
    Latent {
        m: usize,
        mu: f64,
        sigma_s: f64,
    },
    MultiAux {
        m: usize,
        mu: f64,
        sigma_s: f64,
        informative: bool,
    },
}

fn grid(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| ((start + i as f64 * step) * 1e6).round() / 1e6)
        .collect()
}

impl Scenario {
    pub fn kind(&self) -> DesignKind {
        match self {
            Scenario::Network { .. } => DesignKind::Network,
            Scenario::Regression { .. } => DesignKind::Regression,
            Scenario::Latent { .. } => DesignKind::Latent,
            Scenario::MultiAux { .. } => DesignKind::MultiAux,
        }
    }

    pub fn m(&self) -> usize {
        match *self {
            Scenario::Network { m, .. }
            | Scenario::Regression { m, .. }
            | Scenario::Latent { m, .. }
            | Scenario::MultiAux { m, .. } => m,
        }
    }

    /// The same design point with `m` hypotheses.
    pub fn with_m(mut self, new_m: usize) -> Self {
        match &mut self {
            Scenario::Network { m, .. }
            | Scenario::Regression { m, .. }
            | Scenario::Latent { m, .. }
            | Scenario::MultiAux { m, .. } => *m = new_m,
        }
        self
    }

    /// Varying parameters as `(name, value)` pairs.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Scenario::Network { m, mu1, mu2 } => vec![("m", m as f64), ("mu1", mu1), ("mu2", mu2)],
            Scenario::Regression { m, n, k, mu, sigma } => vec![
                ("m", m as f64),
                ("n", n as f64),
                ("k", k as f64),
                ("mu", mu),
                ("sigma", sigma),
            ],
            Scenario::Latent { m, mu, sigma_s } => {
                vec![("m", m as f64), ("mu", mu), ("sigma_s", sigma_s)]
            }
            Scenario::MultiAux {
                m,
                mu,
                sigma_s,
                informative,
            } => vec![
                ("m", m as f64),
                ("mu", mu),
                ("sigma_s", sigma_s),
                ("informative", if informative { 1.0 } else { 0.0 }),
            ],
        }
    }

    pub fn label(&self) -> String {
        self.params()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn validate(&self) -> Result<()> {
        if self.m() < 2 {
            return Err(Error::invalid("m", "need at least two hypotheses"));
        }
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be positive, got {v}")))
            }
        };
        match *self {
            Scenario::Network { mu1, mu2, .. } => {
                if !(mu1.is_finite() && mu2.is_finite()) {
                    return Err(Error::invalid("mu", "must be finite"));
                }
            }
            Scenario::Regression { m, n, k, mu, sigma } => {
                if n <= m + 1 {
                    return Err(Error::Underdetermined { n, p: m });
                }
                if k == 0 {
                    return Err(Error::invalid("k", "need at least one auxiliary study"));
                }
                positive("mu", mu)?;
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return Err(Error::invalid(
                        "sigma",
                        format!("must be nonnegative, got {sigma}"),
                    ));
                }
            }
            Scenario::Latent { sigma_s, mu, .. } | Scenario::MultiAux { sigma_s, mu, .. } => {
                positive("sigma_s", sigma_s)?;
                if !mu.is_finite() {
                    return Err(Error::invalid("mu", "must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Design points of the standard `setting` (1 or 2) grids.
    pub fn setting_grid(kind: DesignKind, setting: u8) -> Result<Vec<Scenario>> {
        let sigma_grid = grid(0.5, 0.25, 7);
        let points = match (kind, setting) {
            (DesignKind::Network, 1) => grid(2.5, 0.1, 6)
                .into_iter()
                .map(|mu1| Scenario::Network {
                    m: 1200,
                    mu1,
                    mu2: 0.0,
                })
                .collect(),
            (DesignKind::Network, 2) => grid(0.0, 0.2, 6)
                .into_iter()
                .map(|mu2| Scenario::Network {
                    m: 1200,
                    mu1: 3.0,
                    mu2,
                })
                .collect(),
            (DesignKind::Regression, 1) => grid(0.05, 0.01, 6)
                .into_iter()
                .map(|sigma| Scenario::Regression {
                    m: 800,
                    n: 1000,
                    k: 3,
                    mu: 0.3,
                    sigma,
                })
                .collect(),
            (DesignKind::Regression, 2) => grid(0.25, 0.025, 5)
                .into_iter()
                .map(|mu| Scenario::Regression {
                    m: 800,
                    n: 1000,
                    k: 3,
                    mu,
                    sigma: 0.05,
                })
                .collect(),
            (DesignKind::Latent, 1) => sigma_grid
                .into_iter()
                .map(|sigma_s| Scenario::Latent {
                    m: 1200,
                    mu: 2.5,
                    sigma_s,
                })
                .collect(),
            (DesignKind::Latent, 2) => grid(3.0, 0.2, 6)
                .into_iter()
                .map(|mu| Scenario::Latent {
                    m: 1200,
                    mu,
                    sigma_s: 1.0,
                })
                .collect(),
            (DesignKind::MultiAux, s @ (1 | 2)) => sigma_grid
                .into_iter()
                .map(|sigma_s| Scenario::MultiAux {
                    m: 1200,
                    mu: 3.0,
                    sigma_s,
                    informative: s == 1,
                })
                .collect(),
            _ => {
                return Err(Error::invalid(
                    "setting",
                    format!("must be 1 or 2, got {setting}"),
                ));
            }
        };
        Ok(points)
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Dataset> {
        self.validate()?;
        Ok(match *self {
            Scenario::Network { m, mu1, mu2 } => {
                let (batch, distance, truth) = gen_network(m, mu1, mu2, rng)?;
                Dataset {
                    batch,
                    truth,
                    distance,
                    avg_distance: None,
                    latent: None,
                }
            }
            Scenario::Regression { m, n, k, mu, sigma } => {
                let (batch, distance, truth) = gen_regression(m, n, k, mu, sigma, rng)?;
                Dataset {
                    batch,
                    truth,
                    distance,
                    avg_distance: None,
                    latent: None,
                }
            }
            Scenario::Latent { m, mu, sigma_s } => {
                let (batch, aux, distance, truth) = gen_latent(m, mu, sigma_s, rng)?;
                Dataset {
                    batch,
                    truth,
                    distance,
                    avg_distance: None,
                    latent: Some(LatentOracle::new(
                        &aux.columns()[0],
                        mu,
                        sigma_s,
                        SIGNAL_PROB,
                    )),
                }
            }
            Scenario::MultiAux {
                m,
                mu,
                sigma_s,
                informative,
            } => {
                let (batch, aux, truth) = gen_multi_aux(m, mu, sigma_s, informative, rng)?;
                Dataset {
                    batch,
                    truth,
                    distance: mahalanobis_distance(&aux, MULTI_AUX_SCALE)?,
                    avg_distance: Some(euclidean_distance(&aux.column_mean())?),
                    latent: None,
                }
            }
        })
    }
}

/// One simulated replicate.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub batch: HypothesisBatch,
    pub truth: GroundTruth,
    pub distance: DistanceMatrix,
    /// Distance built from the averaged auxiliary sample (multi-aux only).
    pub avg_distance: Option<DistanceMatrix>,
    /// Exact local quantities (latent only).
    pub latent: Option<LatentOracle>,
}

impl Dataset {
    /// Theoretical `pi_i*` for the replicate's `tau`; only the latent design
    /// knows it.
    pub fn pi_star(&self, tau: f64, xi: f64) -> Result<Vec<f64>> {
        self.latent
            .as_ref()
            .map(|o| o.pi_star(tau, xi))
            .ok_or_else(|| Error::Unsupported {
                what: "theoretical pi*".into(),
                design: "non-latent".into(),
            })
    }
}

fn bernoulli_signals<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<bool> {
    (0..m).map(|_| rng.random_bool(SIGNAL_PROB)).collect()
}

fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `T_i ~ N(theta_i mu1, 1)`; `S_ij ~ |N(mu2, 0.5)|` for equal labels, else
/// `|N(1, 0.5)|`, with `0.5` the standard deviation.
pub fn gen_network<R: Rng + ?Sized>(
    m: usize,
    mu1: f64,
    mu2: f64,
    rng: &mut R,
) -> Result<(HypothesisBatch, DistanceMatrix, GroundTruth)> {
    let theta = bernoulli_signals(m, rng);
    let t: Vec<f64> = theta
        .iter()
        .map(|&s| if s { mu1 } else { 0.0 } + std_normal(rng))
        .collect();
    let same = Normal::new(mu2, 0.5).map_err(|e| Error::invalid("mu2", e.to_string()))?;
    let diff = Normal::new(1.0, 0.5).expect("constant parameters");
    let s = DistanceMatrix::from_upper_fn(m, |i, j| {
        let d = if theta[i] == theta[j] { same } else { diff };
        d.sample(rng).abs()
    })?;
    Ok((
        HypothesisBatch::from_t(t, NullDensity::StandardNormal)?,
        s,
        GroundTruth::new(theta),
    ))
}

fn random_matrix<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> DMatrix<f64> {
    let data: Vec<f64> = (0..n * p).map(|_| std_normal(rng)).collect();
    DMatrix::from_vec(n, p, data)
}

/// Fits `y = X beta + e` on a fresh `n x m` standard normal design.
fn simulate_study<R: Rng + ?Sized>(
    beta: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<super::ols::OlsFit> {
    let x = random_matrix(n, beta.len(), rng);
    let noise = DVector::from_iterator(n, (0..n).map(|_| std_normal(rng)));
    let y = &x * DVector::from_column_slice(beta) + noise;
    ols_t_stats(&x, &y)
}

/// Nonzero with probability 0.1, then `(-1)^u |N(mu, 0.1)|` with
/// `u ~ Bern(0.2)`.
pub fn regression_coefficients<R: Rng + ?Sized>(
    m: usize,
    mu: f64,
    rng: &mut R,
) -> Result<(Vec<bool>, Vec<f64>)> {
    let theta = bernoulli_signals(m, rng);
    let magnitude = Normal::new(mu, 0.1).map_err(|e| Error::invalid("mu", e.to_string()))?;
    let beta = theta
        .iter()
        .map(|&s| {
            if !s {
                return 0.0;
            }
            let b = magnitude.sample(rng).abs();
            if rng.random_bool(0.2) {
                -b
            } else {
                b
            }
        })
        .collect();
    Ok((theta, beta))
}

/// Primary OLS t-statistics plus `K` auxiliary studies whose coefficients
/// add `N(0, sigma)` noise.
pub fn gen_regression<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    k: usize,
    mu: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<(HypothesisBatch, DistanceMatrix, GroundTruth)> {
    if n <= m + 1 {
        return Err(Error::Underdetermined { n, p: m });
    }
    let (theta, beta) = regression_coefficients(m, mu, rng)?;
    let primary = simulate_study(&beta, n, rng)?;
    let mut columns = Vec::with_capacity(k);
    for _ in 0..k {
        let beta_s: Vec<f64> = beta.iter().map(|&b| b + sigma * std_normal(rng)).collect();
        columns.push(simulate_study(&beta_s, n, rng)?.t_stats);
    }
    let aux = AuxiliarySample::continuous(columns)?;
    let s = mahalanobis_distance(&aux, REGRESSION_SCALE)?;
    let null = NullDensity::student_t(primary.df as f64)?;
    Ok((
        HypothesisBatch::from_t(primary.t_stats, null)?,
        s,
        GroundTruth::new(theta),
    ))
}

fn latent_values<R: Rng + ?Sized>(theta: &[bool], mu: f64, rng: &mut R) -> Vec<f64> {
    theta
        .iter()
        .map(|&s| if s { mu + std_normal(rng) } else { 0.0 })
        .collect()
}

/// `xi_i ~ (1 - theta_i) delta_0 + theta_i N(mu, 1)`, `Y_i ~ N(xi_i, 1)`,
/// `X_i ~ N(xi_i, sigma_s^2)`, `S_ij = |X_i - X_j|`.
pub fn gen_latent<R: Rng + ?Sized>(
    m: usize,
    mu: f64,
    sigma_s: f64,
    rng: &mut R,
) -> Result<(
    HypothesisBatch,
    AuxiliarySample,
    DistanceMatrix,
    GroundTruth,
)> {
    let theta = bernoulli_signals(m, rng);
    let xi = latent_values(&theta, mu, rng);
    let y: Vec<f64> = xi.iter().map(|&v| v + std_normal(rng)).collect();
    let x: Vec<f64> = xi.iter().map(|&v| v + sigma_s * std_normal(rng)).collect();
    let s = euclidean_distance(&x)?;
    Ok((
        HypothesisBatch::from_t(y, NullDensity::StandardNormal)?,
        AuxiliarySample::continuous(vec![x])?,
        s,
        GroundTruth::new(theta),
    ))
}

/// Primary data as in [`gen_latent`] plus four auxiliary columns. When not
/// `informative`, columns 3 and 4 share an independent latent vector `psi`.
pub fn gen_multi_aux<R: Rng + ?Sized>(
    m: usize,
    mu: f64,
    sigma_s: f64,
    informative: bool,
    rng: &mut R,
) -> Result<(HypothesisBatch, AuxiliarySample, GroundTruth)> {
    let theta = bernoulli_signals(m, rng);
    let xi = latent_values(&theta, mu, rng);
    let y: Vec<f64> = xi.iter().map(|&v| v + std_normal(rng)).collect();
    let psi = if informative {
        None
    } else {
        let psi_theta = bernoulli_signals(m, rng);
        Some(latent_values(&psi_theta, mu, rng))
    };
    let columns = (0..4)
        .map(|c| {
            let centre = match (&psi, c) {
                (Some(psi), 2 | 3) => psi,
                _ => &xi,
            };
            centre
                .iter()
                .map(|&v| v + sigma_s * std_normal(rng))
                .collect()
        })
        .collect();
    Ok((
        HypothesisBatch::from_t(y, NullDensity::StandardNormal)?,
        AuxiliarySample::continuous(columns)?,
        GroundTruth::new(theta),
    ))
}

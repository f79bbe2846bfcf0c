//! Exact local sparsity and density for the latent-variable design.
//!
//! Given the auxiliary value `X_i`, the signal indicator has posterior
//! probability `q_i`, and under a signal `Y_i | X_i` is normal with the
//! posterior mean of the latent value and variance `1 + v`.

use crate::localstats::{LocalDensity, DENSITY_FLOOR};
use crate::null::NullDensity;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    INV_SQRT_2PI * (-0.5 * z * z / var).exp() / var.sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentOracle {
    /// `P(theta_i = 1 | X_i)`.
    pub q: Vec<f64>,
    /// Mean of `Y_i | theta_i = 1, X_i`.
    pub mean: Vec<f64>,
    /// Variance of `Y_i | theta_i = 1, X_i`.
    pub var: f64,
}

impl LatentOracle {
    pub fn new(x: &[f64], mu: f64, sigma_s: f64, signal_prob: f64) -> Self {
        let s2 = sigma_s * sigma_s;
        let v_post = s2 / (1.0 + s2);
        let q = x
            .iter()
            .map(|&xi| {
                let alt = signal_prob * normal_pdf(xi, mu, 1.0 + s2);
                let null = (1.0 - signal_prob) * normal_pdf(xi, 0.0, s2);
                if alt + null > 0.0 {
                    alt / (alt + null)
                } else if xi > mu / 2.0 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let mean = x.iter().map(|&xi| v_post * (mu + xi / s2)).collect();
        Self {
            q,
            mean,
            var: 1.0 + v_post,
        }
    }

    /// `pi_i* = 1 - P(P_i > tau | X_i) / (1 - tau)`, clipped to `[0, 1 - xi]`.
    pub fn pi_star(&self, tau: f64, xi: f64) -> Vec<f64> {
        self.pi_star_raw(tau)
            .into_iter()
            .map(|p| p.clamp(0.0, 1.0 - xi))
            .collect()
    }

    pub fn pi_star_raw(&self, tau: f64) -> Vec<f64> {
        let null = NullDensity::StandardNormal;
        let z = null.isf(tau / 2.0);
        let sd = self.var.sqrt();
        self.q
            .iter()
            .zip(&self.mean)
            .map(|(&q, &mean)| {
                let inside = null.cdf((z - mean) / sd) - null.cdf((-z - mean) / sd);
                q * (1.0 - inside / (1.0 - tau))
            })
            .collect()
    }

    pub fn f_at(&self, t: &[f64]) -> Vec<f64> {
        t.iter()
            .enumerate()
            .map(|(i, &ti)| self.density(i, ti))
            .collect()
    }
}

impl LocalDensity for LatentOracle {
    fn len(&self) -> usize {
        self.q.len()
    }

    fn density(&self, i: usize, t: f64) -> f64 {
        let q = self.q[i];
        ((1.0 - q) * normal_pdf(t, 0.0, 1.0) + q * normal_pdf(t, self.mean[i], self.var))
            .max(DENSITY_FLOOR)
    }
}

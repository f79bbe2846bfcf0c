//! Bandwidth selectors for gaussian kernel density estimation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum BandwidthRule {
    Manual { h: f64 },
    Silverman,
    SheatherJones,
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule::SheatherJones
    }
}

const MIN_SAMPLE: usize = 8;
const SJ_BINS: usize = 1000;
const SJ_TOL: f64 = 1e-6;
const SJ_MAX_ITER: usize = 50;

pub fn select_bandwidth(values: &[f64], rule: BandwidthRule) -> Result<f64> {
    match rule {
        BandwidthRule::Manual { h } => {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::invalid(
                    "bandwidth",
                    format!("must be positive, got {h}"),
                ));
            }
            Ok(h)
        }
        BandwidthRule::Silverman => silverman(values),
        BandwidthRule::SheatherJones => sheather_jones(values),
    }
}

struct Spread {
    sd: f64,
    iqr: f64,
}

fn spread(values: &[f64]) -> Result<Spread> {
    if values.len() < MIN_SAMPLE {
        return Err(Error::invalid(
            "values",
            format!("need at least {MIN_SAMPLE} values, got {}", values.len()),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("values", "non-finite value"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if sd == 0.0 {
        return Err(Error::ZeroSpread);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    Ok(Spread { sd, iqr })
}

/// Linear-interpolation sample quantile (type 7).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn robust_scale(s: &Spread, iqr_div: f64) -> f64 {
    let r = s.iqr / iqr_div;
    if r > 0.0 {
        s.sd.min(r)
    } else {
        s.sd
    }
}

/// Silverman's rule of thumb `0.9 min(sd, IQR / 1.34) n^{-1/5}`.
pub fn silverman(values: &[f64]) -> Result<f64> {
    let s = spread(values)?;
    Ok(0.9 * robust_scale(&s, 1.34) * (values.len() as f64).powf(-0.2))
}

/// Sheather–Jones "solve-the-equation" plug-in bandwidth.
///
/// Pairwise differences are binned on `SJ_BINS` cells. Falls back to
/// [`silverman`] when the functional estimates degenerate or the root
/// search does not converge.
pub fn sheather_jones(values: &[f64]) -> Result<f64> {
    let s = spread(values)?;
    match solve_the_equation(values, &s) {
        Some(h) => Ok(h),
        None => {
            log::warn!("Sheather-Jones bandwidth did not converge; using Silverman's rule");
            silverman(values)
        }
    }
}

struct BinnedPairs {
    n: f64,
    width: f64,
    counts: Vec<f64>,
}

impl BinnedPairs {
    fn new(values: &[f64]) -> Self {
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        let width = (hi - lo) * 1.01 / SJ_BINS as f64;
        let bins: Vec<usize> = values
            .iter()
            .map(|&v| (((v - lo) / width) as usize).min(SJ_BINS - 1))
            .collect();
        let mut hist = vec![0.0f64; SJ_BINS];
        for &b in &bins {
            hist[b] += 1.0;
        }
        let mut counts = vec![0.0f64; SJ_BINS];
        for a in 0..SJ_BINS {
            if hist[a] == 0.0 {
                continue;
            }
            counts[0] += hist[a] * (hist[a] - 1.0) / 2.0;
            for b in (a + 1)..SJ_BINS {
                counts[b - a] += hist[a] * hist[b];
            }
        }
        Self {
            n: values.len() as f64,
            width,
            counts,
        }
    }

    /// Estimate of the integrated squared second derivative functional.
    fn phi4(&self, h: f64) -> f64 {
        let mut sum = 0.0;
        for (i, &c) in self.counts.iter().enumerate() {
            let d = i as f64 * self.width / h;
            let d2 = d * d;
            if d2 >= 1000.0 {
                break;
            }
            sum += c * (-d2 / 2.0).exp() * (d2 * d2 - 6.0 * d2 + 3.0);
        }
        sum = 2.0 * sum + self.n * 3.0;
        sum / (self.n * (self.n - 1.0) * h.powi(5) * (2.0 * PI).sqrt())
    }

    fn phi6(&self, h: f64) -> f64 {
        let mut sum = 0.0;
        for (i, &c) in self.counts.iter().enumerate() {
            let d = i as f64 * self.width / h;
            let d2 = d * d;
            if d2 >= 1000.0 {
                break;
            }
            sum += c * (-d2 / 2.0).exp() * (d2 * d2 * d2 - 15.0 * d2 * d2 + 45.0 * d2 - 15.0);
        }
        sum = 2.0 * sum - 15.0 * self.n;
        sum / (self.n * (self.n - 1.0) * h.powi(7) * (2.0 * PI).sqrt())
    }
}

fn solve_the_equation(values: &[f64], s: &Spread) -> Option<f64> {
    let n = values.len() as f64;
    let pairs = BinnedPairs::new(values);
    let scale = robust_scale(s, 1.349);
    let a = 1.24 * scale * n.powf(-1.0 / 7.0);
    let b = 1.23 * scale * n.powf(-1.0 / 9.0);
    let c1 = 1.0 / (2.0 * PI.sqrt() * n);
    let td = -pairs.phi6(b);
    if !(td.is_finite() && td > 0.0) {
        return None;
    }
    let alpha2 = 1.357 * (pairs.phi4(a) / td).powf(1.0 / 7.0);
    if !alpha2.is_finite() {
        return None;
    }
    let f = |h: f64| (c1 / pairs.phi4(alpha2 * h.powf(5.0 / 7.0))).powf(0.2) - h;

    let hmax = 1.144 * scale * n.powf(-0.2);
    let mut lower = 0.1 * hmax;
    let mut upper = hmax;
    let mut f_lo = f(lower);
    let mut f_hi = f(upper);
    let mut tries = 0;
    while f_lo.is_finite() && f_hi.is_finite() && f_lo * f_hi > 0.0 {
        if tries >= 99 {
            return None;
        }
        if tries % 2 == 0 {
            upper *= 1.2;
            f_hi = f(upper);
        } else {
            lower /= 1.2;
            f_lo = f(lower);
        }
        tries += 1;
    }
    if !(f_lo.is_finite() && f_hi.is_finite()) {
        return None;
    }
    for _ in 0..SJ_MAX_ITER {
        let mid = 0.5 * (lower + upper);
        let f_mid = f(mid);
        if !f_mid.is_finite() {
            return None;
        }
        if f_mid == 0.0 || upper - lower < SJ_TOL {
            return Some(mid);
        }
        if f_lo * f_mid < 0.0 {
            upper = mid;
        } else {
            lower = mid;
            f_lo = f_mid;
        }
    }
    None
}

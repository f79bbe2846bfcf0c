//! Known null distributions of the primary statistics.
//!
//! Both families are symmetric about zero. Upper-tail quantities are
//! evaluated through the survival function directly so that tail
//! probabilities keep their relative precision.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum NullDensity {
    StandardNormal,
    StudentT { df: f64 },
}

impl Default for NullDensity {
    fn default() -> Self {
        NullDensity::StandardNormal
    }
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

impl NullDensity {
    pub fn student_t(df: f64) -> Result<Self> {
        if !(df.is_finite() && df > 0.0) {
            return Err(Error::invalid("df", format!("must be positive, got {df}")));
        }
        Ok(NullDensity::StudentT { df })
    }

    fn t_dist(df: f64) -> StudentsT {
        StudentsT::new(0.0, 1.0, df).expect("validated degrees of freedom")
    }

    pub fn pdf(&self, t: f64) -> f64 {
        match *self {
            NullDensity::StandardNormal => INV_SQRT_2PI * (-0.5 * t * t).exp(),
            NullDensity::StudentT { df } => Self::t_dist(df).pdf(t),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            NullDensity::StandardNormal => 0.5 * libm::erfc(-t * FRAC_1_SQRT_2),
            NullDensity::StudentT { df } => Self::t_dist(df).cdf(t),
        }
    }

    /// Survival function `1 - F0(t)`.
    pub fn sf(&self, t: f64) -> f64 {
        match *self {
            NullDensity::StandardNormal => 0.5 * libm::erfc(t * FRAC_1_SQRT_2),
            NullDensity::StudentT { df } => Self::t_dist(df).sf(t),
        }
    }

    /// Two-sided p-value `2 (1 - F0(|t|))`.
    pub fn two_sided_p(&self, t: f64) -> f64 {
        (2.0 * self.sf(t.abs())).min(1.0)
    }

    /// Quantile function `F0^{-1}(q)`.
    pub fn quantile(&self, q: f64) -> f64 {
        if q.is_nan() {
            return f64::NAN;
        }
        if q <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if q >= 1.0 {
            return f64::INFINITY;
        }
        if q > 0.5 {
            return self.isf(1.0 - q);
        }
        -self.isf(q)
    }

    /// Inverse survival function: the `t` with `1 - F0(t) = q`.
    pub fn isf(&self, q: f64) -> f64 {
        if q.is_nan() {
            return f64::NAN;
        }
        if q <= 0.0 {
            return f64::INFINITY;
        }
        if q >= 1.0 {
            return f64::NEG_INFINITY;
        }
        if q > 0.5 {
            return -self.isf(1.0 - q);
        }
        // Solve sf(t) = q on t >= 0 by bracketed Newton in log space.
        let target = q.ln();
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        while self.sf(hi) > q {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return hi;
            }
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..200 {
            let s = self.sf(t);
            if s > q {
                lo = t;
            } else {
                hi = t;
            }
            let dens = self.pdf(t);
            let mut next = if s > 0.0 && dens > 0.0 {
                // d/dt ln sf(t) = -f(t)/sf(t)
                t + (s.ln() - target) * s / dens
            } else {
                f64::NAN
            };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-15 * t.abs().max(1.0) || hi - lo <= 1e-15 * hi.max(1.0) {
                return next;
            }
            t = next;
        }
        t
    }
}

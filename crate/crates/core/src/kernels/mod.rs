//! Kernel functions, bandwidth selection and distance neighbourhoods.

mod bandwidth;
mod neighborhood;

pub use bandwidth::{select_bandwidth, sheather_jones, silverman, BandwidthRule};
pub use neighborhood::{build_neighborhoods, neighborhood_size, Neighborhood};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    #[default]
    Gaussian,
}

/// A kernel family with a fixed bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
}

impl KernelSpec {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, bandwidth)
    }

    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::invalid(
                "bandwidth",
                format!("must be positive, got {bandwidth}"),
            ));
        }
        Ok(Self { family, bandwidth })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Second moment of the unscaled kernel.
    pub fn variance(&self) -> f64 {
        match self.family {
            KernelFamily::Gaussian => 1.0,
        }
    }

    /// `K_h(x) = K(x / h) / h`.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                let u = x / self.bandwidth;
                INV_SQRT_2PI * (-0.5 * u * u).exp() / self.bandwidth
            }
        }
    }

    /// Relational weight `V_h(s) = K_h(s) / K_h(0)`, in `(0, 1]` for finite
    /// `s` and exactly 1 at `s = 0`.
    #[inline]
    pub fn v_weight(&self, s: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                // K(0) cancels; an infinite distance gives exactly 0.
                let u = s / self.bandwidth;
                (-0.5 * u * u).exp()
            }
        }
    }
}

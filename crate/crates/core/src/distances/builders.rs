use nalgebra::{DMatrix, DVector};

use super::DistanceMatrix;
use crate::error::{check_len, Error, Result};

/// Default scale `c` for Mahalanobis distances over regression t-statistics.
pub const REGRESSION_SCALE: f64 = 4.0;
/// Default scale `c` for Mahalanobis distances over multiple auxiliary samples.
pub const MULTI_AUX_SCALE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxiliaryKind {
    Continuous,
    LdCorrelation,
}

/// `K` auxiliary columns, each with one value per hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliarySample {
    columns: Vec<Vec<f64>>,
    kind: AuxiliaryKind,
}

impl AuxiliarySample {
    pub fn new(columns: Vec<Vec<f64>>, kind: AuxiliaryKind) -> Result<Self> {
        let first = columns.first().ok_or(Error::Empty)?;
        let m = first.len();
        if m == 0 {
            return Err(Error::Empty);
        }
        for col in &columns {
            check_len(m, col.len())?;
            if let Some(index) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidValue {
                    index,
                    reason: "non-finite auxiliary value".into(),
                });
            }
        }
        Ok(Self { columns, kind })
    }

    pub fn continuous(columns: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(columns, AuxiliaryKind::Continuous)
    }

    pub fn m(&self) -> usize {
        self.columns[0].len()
    }

    pub fn k(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn kind(&self) -> AuxiliaryKind {
        self.kind
    }

    /// Row-wise mean across the `K` columns.
    pub fn column_mean(&self) -> Vec<f64> {
        let k = self.k() as f64;
        (0..self.m())
            .map(|i| self.columns.iter().map(|c| c[i]).sum::<f64>() / k)
            .collect()
    }
}

/// `S_ij = |x_i - x_j|`.
pub fn euclidean_distance(x: &[f64]) -> Result<DistanceMatrix> {
    DistanceMatrix::from_upper_fn(x.len(), |i, j| (x[i] - x[j]).abs())
}

/// `S_ij = |F(x_i) - F(x_j)|` with `F` the empirical CDF using average ranks.
pub fn rank_distance(x: &[f64]) -> Result<DistanceMatrix> {
    let ecdf = average_rank_ecdf(x);
    DistanceMatrix::from_upper_fn(x.len(), |i, j| (ecdf[i] - ecdf[j]).abs())
}

/// Empirical CDF values `rank / m`, ties sharing their average rank.
pub(crate) fn average_rank_ecdf(x: &[f64]) -> Vec<f64> {
    let m = x.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            out[idx] = avg / m as f64;
        }
        start = end;
    }
    out
}

/// `S_ij = (1 - r_ij^2) / scale` from a dense row-major correlation matrix.
pub fn ld_distance(m: usize, r: &[f64], scale: f64) -> Result<DistanceMatrix> {
    check_scale(scale)?;
    check_len(m * m, r.len())?;
    for i in 0..m {
        for j in 0..m {
            let v = r[i * m + j];
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::CorrelationOutOfRange { i, j, value: v });
            }
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let (a, b) = (r[i * m + j], r[j * m + i]);
            if (a - b).abs() > 1e-9 {
                return Err(Error::Asymmetric { i, j, a, b });
            }
        }
    }
    DistanceMatrix::from_upper_fn(m, |i, j| {
        let v = 0.5 * (r[i * m + j] + r[j * m + i]);
        (1.0 - v * v).max(0.0) / scale
    })
}

/// Sparse variant of [`ld_distance`]: only the listed pairs get a finite
/// distance, the rest are maximally distant.
pub fn ld_distance_sparse(
    m: usize,
    pairs: impl IntoIterator<Item = (usize, usize, f64)>,
    scale: f64,
) -> Result<DistanceMatrix> {
    check_scale(scale)?;
    let mut triplets = Vec::new();
    for (i, j, v) in pairs {
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::CorrelationOutOfRange { i, j, value: v });
        }
        triplets.push((i, j, (1.0 - v * v).max(0.0) / scale));
    }
    DistanceMatrix::from_triplets(m, triplets, 1e-9)
}

/// Scaled squared Mahalanobis distance between the auxiliary rows,
/// `S_ij = d' Sigma^{-1} d / c` with `d = X_i - X_j` and `Sigma` the sample
/// covariance of the `m` rows.
pub fn mahalanobis_distance(aux: &AuxiliarySample, scale: f64) -> Result<DistanceMatrix> {
    check_scale(scale)?;
    let m = aux.m();
    let k = aux.k();
    if m < 2 {
        return Err(Error::invalid(
            "m",
            "need at least two rows for a covariance",
        ));
    }
    let cov = sample_covariance(aux);
    let chol = match cov.clone().cholesky() {
        Some(c) => c,
        None => {
            let ridge = 1e-8 * cov.trace() / k as f64;
            let mut reg = cov;
            for d in 0..k {
                reg[(d, d)] += ridge;
            }
            reg.cholesky().ok_or(Error::SingularCovariance)?
        }
    };
    // Whiten each row: z_i = L^{-1} x_i so that S_ij = |z_i - z_j|^2.
    let l = chol.l();
    let mut white = vec![0.0; m * k];
    for i in 0..m {
        let x = DVector::from_iterator(k, aux.columns().iter().map(|c| c[i]));
        let z = l
            .solve_lower_triangular(&x)
            .ok_or(Error::SingularCovariance)?;
        white[i * k..(i + 1) * k].copy_from_slice(z.as_slice());
    }
    DistanceMatrix::from_upper_fn(m, |i, j| {
        let zi = &white[i * k..(i + 1) * k];
        let zj = &white[j * k..(j + 1) * k];
        zi.iter()
            .zip(zj)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / scale
    })
}

/// `K x K` sample covariance (divisor `m - 1`) of the auxiliary rows.
pub(crate) fn sample_covariance(aux: &AuxiliarySample) -> DMatrix<f64> {
    let m = aux.m();
    let k = aux.k();
    let means: Vec<f64> = aux
        .columns()
        .iter()
        .map(|c| c.iter().sum::<f64>() / m as f64)
        .collect();
    let mut cov = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let ca = &aux.columns()[a];
            let cb = &aux.columns()[b];
            let s: f64 = ca
                .iter()
                .zip(cb)
                .map(|(x, y)| (x - means[a]) * (y - means[b]))
                .sum();
            let v = s / (m - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    cov
}

fn check_scale(scale: f64) -> Result<()> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::invalid(
            "scale",
            format!("must be positive, got {scale}"),
        ));
    }
    Ok(())
}

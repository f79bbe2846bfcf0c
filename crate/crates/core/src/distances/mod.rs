//! Pairwise distance matrices carrying the relational knowledge of the
//! source domain, plus builders for the standard auxiliary data types.

mod builders;
mod io;

pub use builders::{
    euclidean_distance, ld_distance, ld_distance_sparse, mahalanobis_distance, rank_distance,
    AuxiliaryKind, AuxiliarySample, MULTI_AUX_SCALE, REGRESSION_SCALE,
};
pub use io::{load_distance_matrix, write_dense_csv, write_triplets, MatrixFormat};

use crate::error::{Error, Result};

/// Symmetric, nonnegative `m x m` distance matrix with an implicit zero
/// diagonal.
///
/// Sparse storage only lists some pairs; every unlisted off-diagonal pair
/// reads as `f64::INFINITY` ("maximally distant").
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    m: usize,
    storage: Storage,
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Row-major, `m * m` entries.
    Dense(Vec<f64>),
    /// Per-row entries sorted by column, mirror entries always present.
    Sparse(Vec<Vec<(usize, f64)>>),
}

impl DistanceMatrix {
    /// Builds a dense matrix from the strict upper triangle generator `f(i, j)`
    /// with `i < j`, mirroring it into the lower triangle.
    pub fn from_upper_fn(m: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = vec![0.0; m * m];
        for i in 0..m {
            for j in (i + 1)..m {
                let v = f(i, j);
                check_entry(i, j, v)?;
                data[i * m + j] = v;
                data[j * m + i] = v;
            }
        }
        Ok(Self {
            m,
            storage: Storage::Dense(data),
        })
    }

    /// Validates a row-major dense matrix. Pairs differing by at most
    /// `sym_tol` are replaced by their mean; the diagonal is ignored.
    pub fn from_dense(m: usize, mut data: Vec<f64>, sym_tol: f64) -> Result<Self> {
        if data.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                found: data.len(),
            });
        }
        for i in 0..m {
            data[i * m + i] = 0.0;
            for j in (i + 1)..m {
                let (a, b) = (data[i * m + j], data[j * m + i]);
                check_entry(i, j, a)?;
                check_entry(j, i, b)?;
                if (a - b).abs() > sym_tol {
                    return Err(Error::Asymmetric { i, j, a, b });
                }
                let mean = 0.5 * (a + b);
                data[i * m + j] = mean;
                data[j * m + i] = mean;
            }
        }
        Ok(Self {
            m,
            storage: Storage::Dense(data),
        })
    }

    /// Builds a sparse matrix from `(i, j, value)` triplets. Missing mirror
    /// entries are filled in; conflicting duplicates beyond `sym_tol` are
    /// rejected. Diagonal triplets are ignored.
    pub fn from_triplets(
        m: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
        sym_tol: f64,
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        for (i, j, v) in triplets {
            if i >= m || j >= m {
                return Err(Error::InvalidValue {
                    index: i.max(j),
                    reason: format!("index out of range for m={m}"),
                });
            }
            if i == j {
                continue;
            }
            check_entry(i, j, v)?;
            let (a, b) = (i.min(j), i.max(j));
            rows[a].push((b, v));
        }
        // Resolve duplicates within the upper triangle, then mirror.
        let mut upper: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
            let mut dedup: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (j, v) in row {
                match dedup.last_mut() {
                    Some(last) if last.0 == j => {
                        if (last.1 - v).abs() > sym_tol {
                            return Err(Error::Asymmetric {
                                i,
                                j,
                                a: last.1,
                                b: v,
                            });
                        }
                        last.1 = 0.5 * (last.1 + v);
                    }
                    _ => dedup.push((j, v)),
                }
            }
            upper.push(dedup);
        }
        let mut full: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        for (i, row) in upper.iter().enumerate() {
            for &(j, v) in row {
                full[i].push((j, v));
                full[j].push((i, v));
            }
        }
        for row in &mut full {
            row.sort_by_key(|e| e.0);
        }
        Ok(Self {
            m,
            storage: Storage::Sparse(full),
        })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Entry `S_ij`; zero on the diagonal, infinity for unlisted sparse pairs.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        match &self.storage {
            Storage::Dense(data) => data[i * self.m + j],
            Storage::Sparse(rows) => rows[i]
                .binary_search_by_key(&j, |e| e.0)
                .map(|pos| rows[i][pos].1)
                .unwrap_or(f64::INFINITY),
        }
    }

    /// Finite off-diagonal entries of row `i` as `(j, S_ij)` in column order.
    pub fn row_entries(&self, i: usize) -> Vec<(usize, f64)> {
        match &self.storage {
            Storage::Dense(data) => data[i * self.m..(i + 1) * self.m]
                .iter()
                .copied()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .collect(),
            Storage::Sparse(rows) => rows[i].clone(),
        }
    }

    /// Row `i` as a dense slice, when stored densely.
    pub fn dense_row(&self, i: usize) -> Option<&[f64]> {
        match &self.storage {
            Storage::Dense(data) => Some(&data[i * self.m..(i + 1) * self.m]),
            Storage::Sparse(_) => None,
        }
    }

    /// Number of stored off-diagonal entries.
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(_) => self.m * self.m.saturating_sub(1),
            Storage::Sparse(rows) => rows.iter().map(Vec::len).sum(),
        }
    }
}

fn check_entry(i: usize, j: usize, v: f64) -> Result<()> {
    if v.is_nan() || v.is_infinite() {
        return Err(Error::InvalidValue {
            index: i,
            reason: format!("non-finite distance at ({i},{j})"),
        });
    }
    if v < 0.0 {
        return Err(Error::NegativeDistance { i, j, value: v });
    }
    Ok(())
}

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::distances::DistanceMatrix;
use crate::error::{Error, Result};

/// The `|N_i|` nearest hypotheses to `center` under the distance matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub center: usize,
    /// Member indices ordered by `(S_ij, j)`.
    pub members: Vec<usize>,
}

impl Neighborhood {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// `ceil(m^{1 - eps})`, capped at `m - 1`.
pub fn neighborhood_size(m: usize, epsilon: f64) -> usize {
    if m < 2 {
        return 0;
    }
    let raw = (m as f64).powf(1.0 - epsilon);
    // Guard against powf landing a hair above an exact integer.
    let rounded = raw.round();
    let size = if (raw - rounded).abs() < 1e-9 {
        rounded
    } else {
        raw.ceil()
    };
    (size as usize).clamp(1, m - 1)
}

fn by_distance(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Nearest-neighbour sets for every hypothesis. Ties at the cutoff go to the
/// smaller index; unlisted sparse pairs come after every listed one.
pub fn build_neighborhoods(s: &DistanceMatrix, epsilon: f64) -> Result<Vec<Neighborhood>> {
    let m = s.dim();
    if m < 2 {
        return Err(Error::invalid("m", "need at least two hypotheses"));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::invalid(
            "epsilon",
            format!("must be in [0, 1), got {epsilon}"),
        ));
    }
    let size = neighborhood_size(m, epsilon);
    Ok((0..m)
        .into_par_iter()
        .map(|i| Neighborhood {
            center: i,
            members: nearest(s, i, size),
        })
        .collect())
}

fn nearest(s: &DistanceMatrix, i: usize, size: usize) -> Vec<usize> {
    let m = s.dim();
    let mut cand: Vec<(f64, usize)> = match s.dense_row(i) {
        Some(row) => row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, &d)| (d, j))
            .collect(),
        None => s.row_entries(i).into_iter().map(|(j, d)| (d, j)).collect(),
    };
    if cand.len() > size {
        cand.select_nth_unstable_by(size - 1, by_distance);
        cand.truncate(size);
    }
    cand.sort_by(by_distance);
    let mut members: Vec<usize> = cand.into_iter().map(|(_, j)| j).collect();
    if members.len() < size {
        // Pad with maximally distant (unlisted) indices in ascending order.
        let mut listed = members.clone();
        listed.sort_unstable();
        for j in 0..m {
            if members.len() == size {
                break;
            }
            if j != i && listed.binary_search(&j).is_err() {
                members.push(j);
            }
        }
    }
    members
}

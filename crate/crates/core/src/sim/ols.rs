use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ordinary least squares with an intercept column, solved by QR.
#[derive(Debug, Clone)]
pub struct OlsFit {
    /// Slope estimates, intercept excluded.
    pub beta: Vec<f64>,
    pub std_err: Vec<f64>,
    pub t_stats: Vec<f64>,
    /// Residual degrees of freedom `n - p - 1`.
    pub df: usize,
}

/// Fits `y = b0 + X b + e` where `x` is `n x p` without the intercept.
pub fn ols_t_stats(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if n <= p + 1 {
        return Err(Error::Underdetermined { n, p });
    }
    let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
    let qr = design.clone().qr();
    let r = qr.r();
    if (0..=p).any(|i| r[(i, i)].abs() < 1e-12) {
        return Err(Error::SingularCovariance);
    }
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let coef = r
        .solve_upper_triangular(&qty.rows(0, p + 1).into_owned())
        .ok_or(Error::SingularCovariance)?;
    let resid = y - &design * &coef;
    let df = n - p - 1;
    let sigma2 = resid.norm_squared() / df as f64;
    // diag((X'X)^-1) = row norms of R^-1.
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p + 1, p + 1))
        .ok_or(Error::SingularCovariance)?;
    let mut beta = Vec::with_capacity(p);
    let mut std_err = Vec::with_capacity(p);
    let mut t_stats = Vec::with_capacity(p);
    for i in 1..=p {
        let se = (sigma2 * r_inv.row(i).norm_squared()).sqrt();
        beta.push(coef[i]);
        std_err.push(se);
        t_stats.push(coef[i] / se);
    }
    Ok(OlsFit {
        beta,
        std_err,
        t_stats,
        df,
    })
}

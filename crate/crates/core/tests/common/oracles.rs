//! Numerical oracles computed independently of the library code paths.
//! Each check returns a short report of the measured error.

use latla::distances::{mahalanobis_distance, AuxiliarySample};
use latla::kernels::KernelSpec;
use latla::localstats::{LocalDensity, DEFAULT_XI};
use latla::null::NullDensity;
use latla::types::HypothesisBatch;
use latla::weights::{oracle_weights, GridSearch, OracleThreshold};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::invariants::Mixture;
use super::phi;

pub type Oracle = fn() -> Result<String, String>;

pub const ALL: &[(&str, Oracle)] = &[
    ("mahalanobis_explicit_solve", mahalanobis_explicit_solve),
    ("boundary_brute_force", boundary_brute_force),
    ("gaussian_kernel_quadrature", gaussian_kernel_quadrature),
];

/// Gauss-Jordan inverse with partial pivoting.
fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let k = a.len();
    let mut inv: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for j in 0..k {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for row in 0..k {
            if row != col {
                let f = a[row][col];
                for j in 0..k {
                    a[row][j] -= f * a[col][j];
                    inv[row][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

/// `d' Sigma^{-1} d / c` with the sample covariance inverted explicitly.
pub fn mahalanobis_explicit_solve() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (m, k, c) in [(60, 4, 5.0), (40, 2, 4.0), (25, 3, 1.0), (30, 1, 4.0)] {
        // Correlated columns: x = z B with a fixed mixing matrix.
        let z: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..k).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let rows: Vec<Vec<f64>> = z
            .iter()
            .map(|zi| {
                (0..k)
                    .map(|b| {
                        (0..k)
                            .map(|a| zi[a] * if a <= b { 1.0 + 0.3 * a as f64 } else { 0.0 })
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let mean: Vec<f64> = (0..k)
            .map(|a| rows.iter().map(|r| r[a]).sum::<f64>() / m as f64)
            .collect();
        let cov: Vec<Vec<f64>> = (0..k)
            .map(|a| {
                (0..k)
                    .map(|b| {
                        rows.iter()
                            .map(|r| (r[a] - mean[a]) * (r[b] - mean[b]))
                            .sum::<f64>()
                            / (m - 1) as f64
                    })
                    .collect()
            })
            .collect();
        let inv = invert(cov);
        let columns: Vec<Vec<f64>> = (0..k)
            .map(|a| rows.iter().map(|r| r[a]).collect())
            .collect();
        let s = mahalanobis_distance(&AuxiliarySample::continuous(columns).unwrap(), c).unwrap();
        for i in 0..m {
            for j in 0..m {
                let d: Vec<f64> = (0..k).map(|a| rows[i][a] - rows[j][a]).collect();
                let q: f64 = (0..k)
                    .map(|a| (0..k).map(|b| d[a] * inv[a][b] * d[b]).sum::<f64>())
                    .sum::<f64>()
                    / c;
                let got = s.get(i, j);
                let err = if q == 0.0 {
                    got.abs()
                } else {
                    (got - q).abs() / q
                };
                worst = worst.max(err);
            }
        }
    }
    if worst <= 1e-8 {
        Ok(format!("max relative error {worst:.2e} (tolerance 1e-8)"))
    } else {
        Err(format!("max relative error {worst:.2e} exceeds 1e-8"))
    }
}

/// First point of an `n`-point grid on `[0, 10]` inside the rejection
/// region along the half-line selected by `sign`.
fn brute_boundary(d: &Mixture, pi: f64, l_k: f64, sign: f64, n: usize) -> Option<f64> {
    (0..n)
        .map(|g| g as f64 * 10.0 / (n - 1) as f64)
        .find(|&u| (1.0 - pi) * phi(u) <= l_k * d.density(0, sign * u))
}

pub fn boundary_brute_force() -> Result<String, String> {
    let n = 1_000_001;
    let resolution = 10.0 / (n - 1) as f64;
    let null = NullDensity::StandardNormal;
    let cases = [
        (0.3, 2.5, 0.3, 0.2, 1.0),
        (0.1, 3.0, 0.1, 0.05, 2.0),
        (0.5, -2.0, 0.5, 0.4, -0.5),
        (0.05, 1.5, 0.2, 0.5, 0.7),
        (0.8, -3.5, 0.7, 0.01, -2.0),
        (0.2, 2.0, 0.2, 1.5, 0.3),
        (0.02, 0.5, 0.02, 0.01, 1.0),
    ];
    let mut worst: f64 = 0.0;
    for (q, mu, pi, l_k, t) in cases {
        let d = Mixture {
            q: vec![q],
            mu: vec![mu],
        };
        let batch = HypothesisBatch::from_t(vec![t], null).unwrap();
        let thr = OracleThreshold {
            k: 1,
            l_k,
            degenerate: false,
        };
        let w = oracle_weights(&batch, &[pi], &d, &thr, DEFAULT_XI, &GridSearch::default())
            .unwrap()
            .w[0];
        let sign = if t >= 0.0 { 1.0 } else { -1.0 };
        let u_cut = null.isf(DEFAULT_XI);
        match brute_boundary(&d, pi, l_k, sign, n) {
            Some(u) if u < u_cut - resolution => {
                let found = null.isf(w);
                let err = (found - u).abs();
                if err > resolution + 1e-8 {
                    return Err(format!(
                        "q={q} mu={mu} t={t}: boundary {found} vs brute force {u} (error {err:.2e})"
                    ));
                }
                worst = worst.max(err);
            }
            _ => {
                if w != DEFAULT_XI {
                    return Err(format!(
                        "q={q} mu={mu} t={t}: expected the floor weight, got {w}"
                    ));
                }
            }
        }
    }
    Ok(format!(
        "max boundary error {worst:.2e} (grid resolution {resolution:.1e})"
    ))
}

/// Moments of the scaled kernel by composite Simpson on `[-10h, 10h]`.
pub fn gaussian_kernel_quadrature() -> Result<String, String> {
    let mut worst = [0.0f64; 3];
    for h in [0.05, 0.3, 1.0, 2.5, 10.0] {
        let k = KernelSpec::gaussian(h).unwrap();
        let n = 40_000;
        let dx = 20.0 * h / n as f64;
        let mut m = [0.0f64; 3];
        for i in 0..=n {
            let x = -10.0 * h + i as f64 * dx;
            let coef = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let kv = coef * k.eval(x) * dx / 3.0;
            m[0] += kv;
            m[1] += kv * x / h;
            m[2] += kv * (x / h) * (x / h);
        }
        worst[0] = worst[0].max((m[0] - 1.0).abs());
        worst[1] = worst[1].max(m[1].abs());
        worst[2] = worst[2].max((m[2] - 1.0).abs());
    }
    let report = format!(
        "|int K - 1| = {:.1e}, |int uK| = {:.1e}, |int u^2 K - 1| = {:.1e}",
        worst[0], worst[1], worst[2]
    );
    if worst[0] <= 1e-6 && worst[1] <= 1e-8 && worst[2] <= 1e-6 {
        Ok(report)
    } else {
        Err(report)
    }
}

//! Structural invariants, each run as a property over random inputs.

use std::fmt::Debug;

use latla::distances::{
    euclidean_distance, ld_distance, ld_distance_sparse, mahalanobis_distance, rank_distance,
    AuxiliarySample, DistanceMatrix,
};
use latla::kernels::{build_neighborhoods, KernelSpec};
use latla::localstats::{estimate_pi, KernelDensity, LocalDensity, NeighborWeights, DEFAULT_XI};
use latla::metrics::{compute_fdp, compute_power};
use latla::null::NullDensity;
use latla::sim::{run_study, Arm, Scenario, StudyConfig};
use latla::testing::{bh, bonferroni, wbh, weighted_p_values, weighted_step_up};
use latla::types::{GroundTruth, HypothesisBatch, TestOutcome};
use latla::weights::{lfdr_stats, oracle_weights, GridSearch, OracleThreshold};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{phi, runner};

pub type Check = fn(u32) -> Result<(), String>;

/// Every invariant with its name, in reporting order.
pub const ALL: &[(&str, Check)] = &[
    ("bh_reduction", bh_reduction),
    ("step_up_consistency", step_up_consistency),
    ("rejections_form_down_set", rejections_form_down_set),
    ("monotone_in_p", monotone_in_p),
    ("weight_scale_keeps_ranking", weight_scale_keeps_ranking),
    ("tie_handling_deterministic", tie_handling_deterministic),
    ("oracle_weight_bounds", oracle_weight_bounds),
    (
        "oracle_weight_sign_equivariance",
        oracle_weight_sign_equivariance,
    ),
    ("oracle_weight_monotone_in_lk", oracle_weight_monotone_in_lk),
    (
        "weighted_ranking_follows_lfdr",
        weighted_ranking_follows_lfdr,
    ),
    ("pi_leave_one_out", pi_leave_one_out),
    ("pi_monotone_in_neighbour", pi_monotone_in_neighbour),
    ("pi_small_bandwidth_limit", pi_small_bandwidth_limit),
    ("local_density_integrates", local_density_integrates),
    (
        "neighbourhood_ignores_non_members",
        neighbourhood_ignores_non_members,
    ),
    ("v_weight_at_zero", v_weight_at_zero),
    ("distance_builders_valid", distance_builders_valid),
    ("mahalanobis_affine_invariant", mahalanobis_affine_invariant),
    ("ld_sign_flip_identity", ld_sign_flip_identity),
    ("p_values_even_in_t", p_values_even_in_t),
    ("metrics_scale_free", metrics_scale_free),
    (
        "seed_determinism_across_threads",
        seed_determinism_across_threads,
    ),
];

fn run<S>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S: Strategy,
    S::Value: Debug,
{
    runner(cases)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

/// Mixture of uniform values, small values and a few repeated values so
/// that ties occur often.
fn p_value() -> impl Strategy<Value = f64> {
    prop_oneof![
        3 => 0.0f64..=1.0,
        2 => 0.0f64..0.01,
        1 => prop::sample::select(vec![0.0, 0.001, 0.01, 0.03, 0.5, 1.0]),
    ]
}

fn alpha() -> impl Strategy<Value = f64> {
    prop_oneof![0.001f64..0.3, prop::sample::select(vec![0.01, 0.05, 0.1])]
}

/// `(p, w, pi)` of a common random length in `1..=60`.
fn weighted_problem() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..=60).prop_flat_map(|m| {
        (
            prop::collection::vec(p_value(), m),
            prop::collection::vec(1e-5f64..1.0, m),
            prop::collection::vec(0.0f64..0.99, m),
        )
    })
}

fn ratios(p: &[f64], w: &[f64]) -> Vec<f64> {
    p.iter().zip(w).map(|(a, b)| a / b).collect()
}

/// Every rejected value lies strictly below every retained value.
fn is_down_set(values: &[f64], out: &TestOutcome) -> bool {
    let max_rej = values
        .iter()
        .zip(&out.rejected)
        .filter(|(_, &r)| r)
        .map(|(&v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_kept = values
        .iter()
        .zip(&out.rejected)
        .filter(|(_, &r)| !r)
        .map(|(&v, _)| v)
        .fold(f64::INFINITY, f64::min);
    max_rej < min_kept
}

pub fn bh_reduction(cases: u32) -> Result<(), String> {
    let strategy = prop::sample::select(vec![1usize, 2, 10, 100])
        .prop_flat_map(|m| (prop::collection::vec(p_value(), m), alpha()));
    run(cases, strategy, |(p, alpha)| {
        let m = p.len();
        let w = weighted_step_up(&p, &vec![1.0; m], &vec![0.0; m], alpha).unwrap();
        prop_assert_eq!(w.rejected, bh(&p, alpha).unwrap().rejected);
        Ok(())
    })
}

/// Mismatches between the unit-weight weighted rule and BH over `n` random
/// p-vectors with `m` cycling through `{1, 2, 10, 100}`.
pub fn bh_reduction_mismatches(n: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = [1usize, 2, 10, 100];
    (0..n)
        .filter(|&r| {
            let m = sizes[r % sizes.len()];
            let signal_frac: f64 = rng.random_range(0.0..0.5);
            let p: Vec<f64> = (0..m)
                .map(|_| {
                    let u: f64 = rng.random();
                    if rng.random_bool(signal_frac) {
                        u.powi(6)
                    } else {
                        u
                    }
                })
                .collect();
            let alpha = [0.01, 0.05, 0.1, 0.2][r % 4];
            let w = weighted_step_up(&p, &vec![1.0; m], &vec![0.0; m], alpha).unwrap();
            w.rejected != bh(&p, alpha).unwrap().rejected
        })
        .count()
}

pub fn step_up_consistency(cases: u32) -> Result<(), String> {
    run(
        cases,
        (weighted_problem(), alpha()),
        |((p, w, pi), alpha)| {
            for out in [
                weighted_step_up(&p, &w, &pi, alpha).unwrap(),
                bh(&p, alpha).unwrap(),
                wbh(&p, &w, alpha).unwrap(),
            ] {
                let k = out.k;
                prop_assert_eq!(k, out.rejected.iter().filter(|&&r| r).count());
                if k > 0 {
                    prop_assert!(out.fdp_hat_path[k - 1] <= alpha);
                }
                prop_assert!(out.fdp_hat_path[k..].iter().all(|&f| f > alpha));
            }
            Ok(())
        },
    )
}

pub fn rejections_form_down_set(cases: u32) -> Result<(), String> {
    run(
        cases,
        (weighted_problem(), alpha()),
        |((p, w, pi), alpha)| {
            let m = p.len() as f64;
            let total: f64 = w.iter().sum();
            let normalised: Vec<f64> = w.iter().map(|v| m * v / total).collect();
            let latla = weighted_step_up(&p, &w, &pi, alpha).unwrap();
            prop_assert!(is_down_set(&ratios(&p, &w), &latla));
            prop_assert!(is_down_set(&p, &bh(&p, alpha).unwrap()));
            prop_assert!(is_down_set(&p, &bonferroni(&p, alpha).unwrap()));
            let pw = weighted_p_values(&p, &normalised);
            prop_assert!(is_down_set(&pw, &wbh(&p, &w, alpha).unwrap()));
            Ok(())
        },
    )
}

pub fn monotone_in_p(cases: u32) -> Result<(), String> {
    let strategy = (
        weighted_problem(),
        alpha(),
        any::<prop::sample::Index>(),
        0.0f64..1.0,
    );
    run(cases, strategy, |((p, w, pi), alpha, idx, factor)| {
        let i = idx.index(p.len());
        let before = weighted_step_up(&p, &w, &pi, alpha).unwrap();
        let mut lowered = p.clone();
        lowered[i] *= factor;
        let after = weighted_step_up(&lowered, &w, &pi, alpha).unwrap();
        for (b, a) in before.rejected.iter().zip(&after.rejected) {
            prop_assert!(!b || *a);
        }
        Ok(())
    })
}

pub fn weight_scale_keeps_ranking(cases: u32) -> Result<(), String> {
    // Powers of two scale exactly, so ties are preserved bit for bit.
    let scale = prop::sample::select(vec![0.125, 0.25, 0.5, 2.0, 4.0, 8.0]);
    run(
        cases,
        (weighted_problem(), alpha(), scale),
        |((p, w, pi), alpha, c)| {
            let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
            let a = weighted_step_up(&p, &w, &pi, alpha).unwrap();
            let b = weighted_step_up(&p, &scaled, &pi, alpha).unwrap();
            prop_assert_eq!(a.order, b.order);
            prop_assert_eq!(
                wbh(&p, &w, alpha).unwrap().rejected,
                wbh(&p, &scaled, alpha).unwrap().rejected
            );
            Ok(())
        },
    )
}

pub fn tie_handling_deterministic(cases: u32) -> Result<(), String> {
    let values = prop::collection::vec(
        prop::sample::select(vec![0.001, 0.004, 0.01, 0.02, 0.2, 0.9]),
        1..40,
    );
    let strategy = values.prop_flat_map(|p| {
        let n = p.len();
        (
            Just(p),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            alpha(),
        )
    });
    run(cases, strategy, |(p, perm, alpha)| {
        let a = bh(&p, alpha).unwrap();
        prop_assert_eq!(&a, &bh(&p, alpha).unwrap());
        for pair in a.order.windows(2) {
            let (x, y) = (pair[0], pair[1]);
            prop_assert!(p[x] < p[y] || (p[x] == p[y] && x < y));
        }
        // Decisions depend on values only: permuting the input permutes them.
        let permuted: Vec<f64> = perm.iter().map(|&j| p[j]).collect();
        let b = bh(&permuted, alpha).unwrap();
        for (slot, &j) in perm.iter().enumerate() {
            prop_assert_eq!(b.rejected[slot], a.rejected[j]);
        }
        Ok(())
    })
}

/// `f_i = (1 - q_i) phi(t) + q_i phi(t - mu_i)`.
#[derive(Debug, Clone)]
pub struct Mixture {
    pub q: Vec<f64>,
    pub mu: Vec<f64>,
}

impl LocalDensity for Mixture {
    fn len(&self) -> usize {
        self.q.len()
    }

    fn density(&self, i: usize, t: f64) -> f64 {
        (1.0 - self.q[i]) * phi(t) + self.q[i] * phi(t - self.mu[i])
    }
}

/// `t -> f_i(-t)`.
struct Mirror<'a>(&'a Mixture);

impl LocalDensity for Mirror<'_> {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn density(&self, i: usize, t: f64) -> f64 {
        self.0.density(i, -t)
    }
}

#[derive(Debug, Clone)]
struct WeightProblem {
    t: Vec<f64>,
    pi: Vec<f64>,
    density: Mixture,
}

fn nonzero_stat() -> impl Strategy<Value = f64> {
    prop_oneof![-6.0f64..-0.01, 0.01f64..6.0]
}

fn weight_problem() -> impl Strategy<Value = WeightProblem> {
    (1usize..=12).prop_flat_map(|m| {
        (
            prop::collection::vec(nonzero_stat(), m),
            prop::collection::vec(0.0f64..0.95, m),
            prop::collection::vec(0.0f64..1.0, m),
            prop::collection::vec(-5.0f64..5.0, m),
        )
            .prop_map(|(t, pi, q, mu)| WeightProblem {
                t,
                pi,
                density: Mixture { q, mu },
            })
    })
}

fn threshold(l_k: f64) -> OracleThreshold {
    OracleThreshold {
        k: 1,
        l_k,
        degenerate: false,
    }
}

fn weights_for(t: &[f64], pi: &[f64], d: &dyn LocalDensity, l_k: f64) -> Vec<f64> {
    let batch = HypothesisBatch::from_t(t.to_vec(), NullDensity::StandardNormal).unwrap();
    oracle_weights(
        &batch,
        pi,
        d,
        &threshold(l_k),
        DEFAULT_XI,
        &GridSearch::default(),
    )
    .unwrap()
    .w
}

pub fn oracle_weight_bounds(cases: u32) -> Result<(), String> {
    run(cases, (weight_problem(), 0.001f64..3.0), |(wp, l_k)| {
        let w = weights_for(&wp.t, &wp.pi, &wp.density, l_k);
        prop_assert!(w
            .iter()
            .all(|&v| (DEFAULT_XI..=1.0 - DEFAULT_XI).contains(&v)));
        prop_assert_eq!(&w, &weights_for(&wp.t, &wp.pi, &wp.density, l_k));
        Ok(())
    })
}

pub fn oracle_weight_sign_equivariance(cases: u32) -> Result<(), String> {
    run(cases, (weight_problem(), 0.001f64..3.0), |(wp, l_k)| {
        let w = weights_for(&wp.t, &wp.pi, &wp.density, l_k);
        let neg: Vec<f64> = wp.t.iter().map(|t| -t).collect();
        let w_neg = weights_for(&neg, &wp.pi, &Mirror(&wp.density), l_k);
        prop_assert_eq!(w, w_neg);
        Ok(())
    })
}

pub fn oracle_weight_monotone_in_lk(cases: u32) -> Result<(), String> {
    run(
        cases,
        (weight_problem(), 0.001f64..2.0, 1.0f64..4.0),
        |(wp, l_k, factor)| {
            let lo = weights_for(&wp.t, &wp.pi, &wp.density, l_k);
            let hi = weights_for(&wp.t, &wp.pi, &wp.density, l_k * factor);
            for (a, b) in lo.iter().zip(&hi) {
                // Boundaries are resolved to 1e-8, so allow that much slack in w.
                prop_assert!(*a <= b + 1e-8, "L={l_k} factor={factor}: {a} > {b}");
            }
            Ok(())
        },
    )
}

/// With a common two-group density and positive statistics, ordering by
/// `P / w` agrees with ordering by `L`.
pub fn weighted_ranking_follows_lfdr(cases: u32) -> Result<(), String> {
    let strategy = (
        prop::collection::btree_set(100u32..5000, 2..30),
        0.05f64..0.6,
        0.5f64..4.0,
        0.01f64..1.0,
    );
    run(cases, strategy, |(ticks, pi, mu, l_k)| {
        let t: Vec<f64> = ticks.iter().map(|&k| k as f64 * 1e-3).collect();
        let m = t.len();
        let density = Mixture {
            q: vec![pi; m],
            mu: vec![mu; m],
        };
        let pis = vec![pi; m];
        let batch = HypothesisBatch::from_t(t.clone(), NullDensity::StandardNormal).unwrap();
        let f: Vec<f64> = (0..m).map(|i| density.density(i, t[i])).collect();
        let l = lfdr_stats(&pis, &f, &batch).unwrap();
        let w = weights_for(&t, &pis, &density, l_k);
        let r = ratios(batch.p_values(), &w);
        let argsort = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
            idx
        };
        prop_assert_eq!(argsort(&r), argsort(&l));
        Ok(())
    })
}

#[derive(Debug, Clone)]
struct LocalProblem {
    x: Vec<f64>,
    p: Vec<f64>,
    eps: f64,
    h: f64,
    tau: f64,
}

fn local_problem() -> impl Strategy<Value = LocalProblem> {
    (3usize..40).prop_flat_map(|m| {
        (
            prop::collection::vec(-5.0f64..5.0, m),
            prop::collection::vec(p_value(), m),
            0.0f64..0.6,
            0.05f64..3.0,
            0.05f64..0.95,
        )
            .prop_map(|(x, p, eps, h, tau)| LocalProblem { x, p, eps, h, tau })
    })
}

fn relational(x: &[f64], eps: f64, h: f64) -> NeighborWeights {
    let s = euclidean_distance(x).unwrap();
    let nb = build_neighborhoods(&s, eps).unwrap();
    NeighborWeights::new(&s, &nb, &KernelSpec::gaussian(h).unwrap()).unwrap()
}

pub fn pi_leave_one_out(cases: u32) -> Result<(), String> {
    let strategy = (local_problem(), any::<prop::sample::Index>(), 0.0f64..=1.0);
    run(cases, strategy, |(lp, idx, new_p)| {
        let i = idx.index(lp.x.len());
        let v = relational(&lp.x, lp.eps, lp.h);
        let before = estimate_pi(&lp.p, &v, lp.tau, DEFAULT_XI).unwrap();
        let mut p = lp.p.clone();
        p[i] = new_p;
        let after = estimate_pi(&p, &v, lp.tau, DEFAULT_XI).unwrap();
        prop_assert_eq!(before.raw[i].to_bits(), after.raw[i].to_bits());
        Ok(())
    })
}

pub fn pi_monotone_in_neighbour(cases: u32) -> Result<(), String> {
    let strategy = (
        local_problem(),
        any::<prop::sample::Index>(),
        any::<prop::sample::Index>(),
    );
    run(cases, strategy, |(lp, i_idx, j_idx)| {
        let i = i_idx.index(lp.x.len());
        let v = relational(&lp.x, lp.eps, lp.h);
        let above: Vec<usize> = v
            .members(i)
            .iter()
            .copied()
            .filter(|&j| lp.p[j] > lp.tau)
            .collect();
        if above.is_empty() {
            return Ok(());
        }
        let j = above[j_idx.index(above.len())];
        let before = estimate_pi(&lp.p, &v, lp.tau, DEFAULT_XI).unwrap();
        let mut p = lp.p.clone();
        p[j] = 0.5 * lp.tau;
        let after = estimate_pi(&p, &v, lp.tau, DEFAULT_XI).unwrap();
        prop_assert!(after.raw[i] >= before.raw[i]);
        prop_assert!(after.pi[i] >= before.pi[i]);
        Ok(())
    })
}

/// As `h -> 0` the estimate at the centre depends on the nearest neighbour
/// only: `pi = clip(1 - I(P_nn > tau) / (1 - tau))`.
pub fn pi_small_bandwidth_limit(cases: u32) -> Result<(), String> {
    let strategy = (
        0.1f64..1.0,
        prop::collection::vec(0.5f64..4.0, 1..20),
        prop::collection::vec(p_value(), 21),
        0.05f64..0.95,
    );
    run(cases, strategy, |(d1, gaps, p, tau)| {
        // Centre at 0, nearest neighbour at d1, the rest at least 0.5 further.
        let mut x = vec![0.0, d1];
        x.extend(gaps.iter().map(|g| d1 + g));
        let d2 = d1 + gaps.iter().cloned().fold(f64::INFINITY, f64::min);
        // e^{-40} separation between the nearest and the next neighbour.
        let h = ((d2 * d2 - d1 * d1) / 80.0).sqrt();
        let v = relational(&x, 0.0, h);
        let p = &p[..x.len()];
        let est = estimate_pi(p, &v, tau, DEFAULT_XI).unwrap();
        let indicator = if p[1] > tau { 1.0 } else { 0.0 };
        let expect = (1.0 - indicator / (1.0 - tau)).clamp(0.0, 1.0 - DEFAULT_XI);
        prop_assert!(
            (est.pi[0] - expect).abs() < 1e-12,
            "pi={} expect={expect}",
            est.pi[0]
        );
        Ok(())
    })
}

pub fn local_density_integrates(cases: u32) -> Result<(), String> {
    let strategy = (prop::collection::vec(-3.0f64..3.0, 2..30), 0.2f64..1.0);
    run(cases, strategy, |(t, h)| {
        let m = t.len();
        // Equal distances give uniform relational weights.
        let s = DistanceMatrix::from_upper_fn(m, |_, _| 1.0).unwrap();
        let nb = build_neighborhoods(&s, 0.0).unwrap();
        let kernel = KernelSpec::gaussian(h).unwrap();
        let v = NeighborWeights::new(&s, &nb, &kernel).unwrap();
        let f = KernelDensity::new(&t, &v, kernel).unwrap();
        let dx = 1e-3;
        for i in [0, m - 1] {
            let total: f64 = (-15_000..=15_000)
                .map(|k| f.density(i, k as f64 * dx) * dx)
                .sum();
            prop_assert!((total - 1.0).abs() < 0.02, "integral {total}");
        }
        Ok(())
    })
}

pub fn neighbourhood_ignores_non_members(cases: u32) -> Result<(), String> {
    let strategy = (4usize..25).prop_flat_map(|m| {
        (
            Just(m),
            prop::collection::vec(
                prop_oneof![0.0f64..10.0, prop::sample::select(vec![1.0, 2.0])],
                m * m,
            ),
            0.0f64..0.7,
            any::<prop::sample::Index>(),
            any::<prop::sample::Index>(),
            0.0f64..5.0,
        )
    });
    run(cases, strategy, |(m, raw, eps, i_idx, j_idx, bump)| {
        let s = DistanceMatrix::from_upper_fn(m, |a, b| raw[a * m + b]).unwrap();
        let before = build_neighborhoods(&s, eps).unwrap();
        let i = i_idx.index(m);
        let outside: Vec<usize> = (0..m)
            .filter(|&j| j != i && !before[i].members.contains(&j))
            .collect();
        if outside.is_empty() {
            return Ok(());
        }
        let j = outside[j_idx.index(outside.len())];
        let s2 = DistanceMatrix::from_upper_fn(m, |a, b| {
            let v = raw[a * m + b];
            if (a, b) == (i.min(j), i.max(j)) {
                v + bump
            } else {
                v
            }
        })
        .unwrap();
        let after = build_neighborhoods(&s2, eps).unwrap();
        prop_assert_eq!(&before[i].members, &after[i].members);
        prop_assert_eq!(before, build_neighborhoods(&s, eps).unwrap());
        Ok(())
    })
}

pub fn v_weight_at_zero(cases: u32) -> Result<(), String> {
    run(cases, 1e-6f64..1e6, |h| {
        prop_assert_eq!(KernelSpec::gaussian(h).unwrap().v_weight(0.0), 1.0);
        Ok(())
    })
}

fn check_matrix(s: &DistanceMatrix) -> Result<(), TestCaseError> {
    for i in 0..s.dim() {
        prop_assert_eq!(s.get(i, i), 0.0);
        for j in 0..s.dim() {
            let v = s.get(i, j);
            prop_assert!(v.is_finite() && v >= 0.0, "S[{i},{j}]={v}");
            prop_assert_eq!(v.to_bits(), s.get(j, i).to_bits());
        }
    }
    Ok(())
}

fn columns(m: usize, k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-4.0f64..4.0, m), k)
}

fn correlation(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..=1.0, m * m).prop_map(move |mut r| {
        for i in 0..m {
            r[i * m + i] = 1.0;
            for j in 0..i {
                r[i * m + j] = r[j * m + i];
            }
        }
        r
    })
}

pub fn distance_builders_valid(cases: u32) -> Result<(), String> {
    let strategy = (3usize..25, 1usize..=4).prop_flat_map(|(m, k)| (columns(m, k), correlation(m)));
    run(cases, strategy, |(cols, r)| {
        let m = cols[0].len();
        check_matrix(&euclidean_distance(&cols[0]).unwrap())?;
        check_matrix(&rank_distance(&cols[0]).unwrap())?;
        check_matrix(
            &mahalanobis_distance(&AuxiliarySample::continuous(cols).unwrap(), 5.0).unwrap(),
        )?;
        check_matrix(&ld_distance(m, &r, 1.3).unwrap())?;
        Ok(())
    })
}

pub fn mahalanobis_affine_invariant(cases: u32) -> Result<(), String> {
    let strategy = (8usize..30, 1usize..=3).prop_flat_map(|(m, k)| {
        (
            columns(m, k),
            prop::collection::vec(-1.0f64..1.0, k * k),
            prop::collection::vec(-10.0f64..10.0, k),
        )
    });
    run(cases, strategy, |(cols, a, shift)| {
        let k = cols.len();
        let m = cols[0].len();
        // Diagonally dominant, hence invertible: A = 3 I + E with |E_ij| < 1.
        let mixed: Vec<Vec<f64>> = (0..k)
            .map(|c| {
                (0..m)
                    .map(|i| {
                        let row: f64 = (0..k)
                            .map(|d| cols[d][i] * (a[d * k + c] + if d == c { 3.0 } else { 0.0 }))
                            .sum();
                        row + shift[c]
                    })
                    .collect()
            })
            .collect();
        let s1 = mahalanobis_distance(&AuxiliarySample::continuous(cols).unwrap(), 4.0).unwrap();
        let s2 = mahalanobis_distance(&AuxiliarySample::continuous(mixed).unwrap(), 4.0).unwrap();
        let scale = (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| s1.get(i, j))
            .fold(0.0, f64::max);
        for i in 0..m {
            for j in 0..m {
                let (x, y) = (s1.get(i, j), s2.get(i, j));
                prop_assert!(
                    (x - y).abs() <= 1e-6 * x.max(y) + 1e-12 * scale,
                    "{x} vs {y}"
                );
            }
        }
        Ok(())
    })
}

pub fn ld_sign_flip_identity(cases: u32) -> Result<(), String> {
    let strategy = (2usize..20).prop_flat_map(|m| (Just(m), correlation(m)));
    run(cases, strategy, |(m, r)| {
        let flipped: Vec<f64> = r.iter().map(|v| -v).collect();
        prop_assert_eq!(
            ld_distance(m, &r, 1.3).unwrap(),
            ld_distance(m, &flipped, 1.3).unwrap()
        );
        let pairs = |sign: f64| {
            (0..m)
                .flat_map(move |i| (i + 1..m).map(move |j| (i, j)))
                .filter(|(i, j)| (i + j) % 3 != 0)
                .map(|(i, j)| (i, j, sign * r[i * m + j]))
                .collect::<Vec<_>>()
        };
        prop_assert_eq!(
            ld_distance_sparse(m, pairs(1.0), 1.3).unwrap(),
            ld_distance_sparse(m, pairs(-1.0), 1.3).unwrap()
        );
        Ok(())
    })
}

pub fn p_values_even_in_t(cases: u32) -> Result<(), String> {
    run(cases, (-40.0f64..40.0, 1.0f64..300.0), |(t, df)| {
        for null in [NullDensity::StandardNormal, NullDensity::StudentT { df }] {
            prop_assert_eq!(
                null.two_sided_p(t).to_bits(),
                null.two_sided_p(-t).to_bits()
            );
        }
        Ok(())
    })
}

pub fn metrics_scale_free(cases: u32) -> Result<(), String> {
    let strategy = prop::collection::vec((any::<bool>(), any::<bool>()), 1..80);
    run(cases, strategy, |pairs| {
        let theta: Vec<bool> = pairs.iter().map(|p| p.0).collect();
        let rej: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        let doubled = |v: &[bool]| [v, v].concat();
        let once = TestOutcome::from_rejections(rej.clone());
        let twice = TestOutcome::from_rejections(doubled(&rej));
        let t1 = GroundTruth::new(theta.clone());
        let t2 = GroundTruth::new(doubled(&theta));
        prop_assert_eq!(
            compute_fdp(&once, &t1).unwrap(),
            compute_fdp(&twice, &t2).unwrap()
        );
        prop_assert_eq!(
            compute_power(&once, &t1).unwrap(),
            compute_power(&twice, &t2).unwrap()
        );
        Ok(())
    })
}

/// Identical results from pools of one and three worker threads.
pub fn seed_determinism_across_threads(cases: u32) -> Result<(), String> {
    let seeds = (cases / 32).clamp(1, 4) as u64;
    for seed in 0..seeds {
        let mut config = StudyConfig::new(
            Scenario::Latent {
                m: 150,
                mu: 2.5,
                sigma_s: 1.0,
            },
            3,
            seed,
        );
        config.arms = vec![Arm::Bh, Arm::LatlaDd, Arm::LatlaOr, Arm::Wbh];
        let in_pool = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_study(&config, None).unwrap())
        };
        if in_pool(1) != in_pool(3) {
            return Err(format!(
                "seed {seed}: results differ between 1 and 3 threads"
            ));
        }
    }
    Ok(())
}

//! Checks shared by the property tests, the oracle tests and the
//! acceptance harness.

#![allow(dead_code)]

pub mod invariants;
pub mod oracles;

use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

/// Deterministic runner so that failures reproduce across machines.
pub fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// Standard normal density, written out independently of the library.
pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

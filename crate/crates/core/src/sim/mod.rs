//! Seeded Monte-Carlo studies of the four simulation designs.

mod designs;
mod ols;
mod oracle;
mod study;

pub use designs::{
    gen_latent, gen_multi_aux, gen_network, gen_regression, regression_coefficients, Dataset,
    DesignKind, Scenario, SIGNAL_PROB,
};
pub use ols::{ols_t_stats, OlsFit};
pub use oracle::LatentOracle;
pub use study::{
    evaluate_arms, export_replicates, load_external, mean_se, replicate_rng, replicate_seed,
    run_study, splitmix64, write_summary_csv, write_trace_csv, Arm, ArmSummary, ExternalRejections,
    ReplicateTrace, SimResult, StudyConfig, EXTERNAL_LABEL, SUMMARY_HEADER,
};

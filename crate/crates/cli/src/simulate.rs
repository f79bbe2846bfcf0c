//! `simulate`: Monte-Carlo studies over a design grid.

use std::fmt::Write as _;
use std::fs;

use anyhow::anyhow;
use latla::sim::{
    export_replicates, load_external, run_study, write_summary_csv, write_trace_csv, Arm, Scenario,
    SimResult, StudyConfig,
};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Resolves and validates every design point before any computation.
pub fn plan(config: &RunConfig) -> CliResult<Vec<StudyConfig>> {
    let opts = &config.simulate;
    let kind = opts
        .design
        .ok_or_else(|| CliError::config(anyhow!("--design is required")))?;
    let mut grid = Scenario::setting_grid(kind, opts.setting).map_err(CliError::config)?;
    if let Some(m) = opts.m {
        grid = grid.into_iter().map(|s| s.with_m(m)).collect();
    }
    if let Some(point) = opts.point {
        if point >= grid.len() {
            return Err(CliError::config(anyhow!(
                "--point {point} out of range: the grid has {} points",
                grid.len()
            )));
        }
        grid = vec![grid[point]];
    }
    let arms = opts
        .procedures
        .clone()
        .unwrap_or_else(|| Arm::defaults(kind));
    let studies: Vec<StudyConfig> = grid
        .into_iter()
        .map(|scenario| StudyConfig {
            scenario,
            reps: opts.reps,
            seed: opts.seed,
            arms: arms.clone(),
            latla: config.estimation.latla(config.alpha[0]),
        })
        .collect();
    for study in &studies {
        study.validate().map_err(CliError::config)?;
    }
    if opts.external.is_some() && studies.len() != 1 {
        return Err(CliError::config(anyhow!(
            "--external needs a single design point; select one with --point"
        )));
    }
    Ok(studies)
}

pub fn format_table(results: &[SimResult]) -> String {
    let mut out = format!(
        "{:>5}  {:<40}  {:<9}  {:>7}  {:>7}  {:>7}  {:>7}\n",
        "point", "parameters", "procedure", "FDR", "se", "power", "se"
    );
    for (point, r) in results.iter().enumerate() {
        for s in &r.summaries {
            let _ = writeln!(
                out,
                "{:>5}  {:<40}  {:<9}  {:>7.4}  {:>7.4}  {:>7.4}  {:>7.4}",
                point,
                r.scenario.label(),
                s.arm,
                s.mean_fdr,
                s.se_fdr,
                s.mean_power,
                s.se_power
            );
        }
    }
    out
}

pub fn run(config: &RunConfig) -> CliResult<()> {
    let studies = plan(config)?;
    let external = config
        .simulate
        .external
        .as_deref()
        .map(load_external)
        .transpose()?;
    fs::create_dir_all(&config.out)
        .map_err(|e| CliError::data(anyhow!("creating {}: {e}", config.out.display())))?;
    if let Some(dir) = &config.simulate.export_data {
        for (point, study) in studies.iter().enumerate() {
            export_replicates(study, &dir.join(format!("point_{point}")))?;
        }
    }
    let mut results = Vec::with_capacity(studies.len());
    for (point, study) in studies.iter().enumerate() {
        log::info!(
            "point {point}: {} ({} replicates)",
            study.scenario.label(),
            study.reps
        );
        results.push(run_study(study, external.as_ref())?);
    }
    let preamble = [format!("config: {}", config.echo())];
    let path = config.out.join("results.csv");
    write_summary_csv(&results, &preamble, &path)?;
    if config.simulate.trace {
        write_trace_csv(&results, &preamble, &config.out.join("trace.csv"))?;
    }
    print!("{}", format_table(&results));
    println!("results -> {}", path.display());
    Ok(())
}

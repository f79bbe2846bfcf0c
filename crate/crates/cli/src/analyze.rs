//! `analyze`: weighted testing of user-supplied statistics.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use latla::distances::load_distance_matrix;
use latla::null::NullDensity;
use latla::pipeline::{run_with_model, LatlaRun, LocalModel};
use latla::testing::{bh, weighted_p_values};
use latla::types::HypothesisBatch;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Agreement required between supplied p-values and those implied by `t`.
const P_MISMATCH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PrimaryStats {
    pub ids: Vec<String>,
    pub t: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
}

fn parse_error(path: &Path, line: usize, reason: impl std::fmt::Display) -> CliError {
    CliError::data(anyhow!("{}:{line}: {reason}", path.display()))
}

/// Reads a CSV with an `id` column and a `t` (or `z`) and/or `p` column.
/// Other columns are ignored; `#` lines are comments.
pub fn read_stats(path: &Path) -> CliResult<PrimaryStats> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(anyhow!("reading {}: {e}", path.display())))?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_error(path, 1, "empty file"))?;
    let names: Vec<String> = header
        .split(',')
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let find = |keys: &[&str]| names.iter().position(|n| keys.contains(&n.as_str()));
    let id_col =
        find(&["id"]).ok_or_else(|| parse_error(path, hline, "header lacks an `id` column"))?;
    let t_col = find(&["t", "z"]);
    let p_col = find(&["p"]);
    if t_col.is_none() && p_col.is_none() {
        return Err(parse_error(path, hline, "header needs a `t` or `p` column"));
    }
    let mut ids = Vec::new();
    let mut t = Vec::new();
    let mut p = Vec::new();
    for (ln, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != names.len() {
            return Err(parse_error(
                path,
                ln,
                format!("expected {} fields, found {}", names.len(), fields.len()),
            ));
        }
        let number = |col: usize| -> CliResult<f64> {
            fields[col]
                .parse::<f64>()
                .map_err(|_| parse_error(path, ln, format!("bad number `{}`", fields[col])))
        };
        ids.push(fields[id_col].to_string());
        if let Some(c) = t_col {
            let v = number(c)?;
            if !v.is_finite() {
                return Err(parse_error(
                    path,
                    ln,
                    format!("statistic {v} is not finite"),
                ));
            }
            t.push(v);
        }
        if let Some(c) = p_col {
            let v = number(c)?;
            if !(0.0..=1.0).contains(&v) {
                return Err(parse_error(path, ln, format!("p-value {v} outside [0, 1]")));
            }
            p.push(v);
        }
    }
    if ids.is_empty() {
        return Err(parse_error(path, hline, "no hypotheses"));
    }
    Ok(PrimaryStats {
        ids,
        t: t_col.map(|_| t),
        p: p_col.map(|_| p),
    })
}

/// Statistics are canonical: supplied p-values are recomputed from `t` when
/// both are present. With p-values alone, `t = F0^{-1}(1 - p/2) >= 0`.
pub fn build_batch(stats: &PrimaryStats, null: NullDensity) -> CliResult<HypothesisBatch> {
    match (&stats.t, &stats.p) {
        (Some(t), given) => {
            let batch = HypothesisBatch::from_t(t.clone(), null)?;
            if let Some(given) = given {
                let (count, worst) = batch
                    .p_values()
                    .iter()
                    .zip(given)
                    .map(|(a, b)| (a - b).abs())
                    .filter(|&d| d > P_MISMATCH_TOL)
                    .fold((0usize, 0f64), |(n, w), d| (n + 1, w.max(d)));
                if count > 0 {
                    log::warn!(
                        "{count} supplied p-values differ from those implied by t (max difference {worst:.3e}); using t"
                    );
                }
            }
            Ok(batch)
        }
        (None, Some(p)) => {
            if let Some(i) = p.iter().position(|&v| v == 0.0) {
                return Err(CliError::data(anyhow!(
                    "hypothesis `{}` has p = 0, which has no finite statistic; supply a `t` column",
                    stats.ids[i]
                )));
            }
            log::info!("no `t` column: using |t| from the p-values, all on the positive branch");
            let t = p.iter().map(|&v| null.isf(v / 2.0).max(0.0)).collect();
            Ok(HypothesisBatch::with_p_values(t, p.clone(), null)?)
        }
        (None, None) => unreachable!("read_stats requires a t or p column"),
    }
}

fn alpha_dir(out: &Path, alpha: f64, several: bool) -> PathBuf {
    if several {
        out.join(format!("alpha_{alpha}"))
    } else {
        out.to_path_buf()
    }
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::data(anyhow!("creating {}: {e}", parent.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::data(anyhow!("writing {}: {e}", path.display())))
}

fn decisions_csv(
    config: &RunConfig,
    ids: &[String],
    batch: &HypothesisBatch,
    run: &LatlaRun,
) -> String {
    let pw = weighted_p_values(batch.p_values(), &run.weights.w);
    let mut out = format!(
        "# config: {}\nid,p,weight,pi,weighted_p,rejected\n",
        config.echo()
    );
    for i in 0..batch.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            ids[i],
            batch.p_values()[i],
            run.weights.w[i],
            run.pi[i],
            pw[i],
            run.outcome.rejected[i]
        );
    }
    out
}

fn summary_json(
    config: &RunConfig,
    alpha: f64,
    batch: &HypothesisBatch,
    model: &LocalModel,
    run: &LatlaRun,
) -> String {
    let bh_k = bh(batch.p_values(), alpha).map(|o| o.k).unwrap_or(0);
    let value = json!({
        "alpha": alpha,
        "m": batch.len(),
        "rejections": run.outcome.k,
        "bh_rejections": bh_k,
        "tau": run.tau,
        "bandwidth": run.bandwidth,
        "distance_bandwidth": model.distance_kernel.bandwidth(),
        "neighborhood_size": model.neighborhood_size,
        "l_threshold": run.weights.l_threshold,
        "oracle_k": run.threshold.k,
        "degenerate": run.weights.degenerate,
        "pi_clip_count": run.pi_clip_count,
        "zero_mass_count": run.zero_mass_count,
        "config": config,
    });
    let mut text = serde_json::to_string_pretty(&value).expect("summary serialises");
    text.push('\n');
    text
}

pub fn run(config: &RunConfig) -> CliResult<()> {
    let stats_path = config.analyze.stats.as_deref().expect("validated");
    let dist_path = config.analyze.dist.as_deref().expect("validated");
    let stats = read_stats(stats_path)?;
    let batch = build_batch(&stats, config.analyze.null)?;
    let s = load_distance_matrix(dist_path, config.dist_format()?, Some(batch.len()))?;
    if s.dim() != batch.len() {
        return Err(CliError::data(anyhow!(
            "{} lists {} hypotheses but {} is {}x{}",
            stats_path.display(),
            batch.len(),
            dist_path.display(),
            s.dim(),
            s.dim()
        )));
    }
    let model = LocalModel::fit(&batch, &s, &config.estimation.latla(config.alpha[0]))?;
    log::info!(
        "m={} bandwidth={:.4} neighborhood size={}",
        batch.len(),
        model.kernel.bandwidth(),
        model.neighborhood_size
    );
    let several = config.alpha.len() > 1;
    for &alpha in &config.alpha {
        let run = run_with_model(&batch, &model, &config.estimation.latla(alpha))?;
        let dir = alpha_dir(&config.out, alpha, several);
        let decisions = dir.join("decisions.csv");
        write(&decisions, &decisions_csv(config, &stats.ids, &batch, &run))?;
        write(
            &dir.join("summary.json"),
            &summary_json(config, alpha, &batch, &model, &run),
        )?;
        println!(
            "alpha={alpha}: {} of {} rejected -> {}",
            run.outcome.k,
            batch.len(),
            decisions.display()
        );
    }
    Ok(())
}

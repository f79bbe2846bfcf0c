use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::designs::{Dataset, DesignKind, Scenario};
use crate::distances::write_dense_csv;
use crate::error::{Error, Result};
use crate::metrics::{compute_fdp, compute_power};
use crate::pipeline::{latla_from_estimates, run_latla, LatlaConfig, LatlaRun};
use crate::testing::{bh, wbh};
use crate::types::TestOutcome;

/// A procedure evaluated in every replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arm {
    #[serde(rename = "BH")]
    Bh,
    #[serde(rename = "LATLA.DD")]
    LatlaDd,
    #[serde(rename = "LATLA.OR")]
    LatlaOr,
    #[serde(rename = "WBH")]
    Wbh,
    #[serde(rename = "AVG")]
    Avg,
}

impl Arm {
    pub fn label(&self) -> &'static str {
        match self {
            Arm::Bh => "BH",
            Arm::LatlaDd => "LATLA.DD",
            Arm::LatlaOr => "LATLA.OR",
            Arm::Wbh => "WBH",
            Arm::Avg => "AVG",
        }
    }

    pub fn defaults(kind: DesignKind) -> Vec<Arm> {
        match kind {
            DesignKind::Network | DesignKind::Regression => vec![Arm::Bh, Arm::LatlaDd],
            DesignKind::Latent => vec![Arm::Bh, Arm::LatlaOr, Arm::LatlaDd, Arm::Wbh],
            DesignKind::MultiAux => vec![Arm::Bh, Arm::LatlaDd, Arm::Avg],
        }
    }

    pub fn check(&self, kind: DesignKind) -> Result<()> {
        let ok = match self {
            Arm::LatlaOr => kind == DesignKind::Latent,
            Arm::Avg => kind == DesignKind::MultiAux,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Unsupported {
                what: self.label().to_string(),
                design: kind.to_string(),
            })
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['_', '.'], "-").as_str() {
            "bh" => Ok(Arm::Bh),
            "latla" | "latla-dd" | "dd" => Ok(Arm::LatlaDd),
            "latla-or" | "or" | "oracle" => Ok(Arm::LatlaOr),
            "wbh" => Ok(Arm::Wbh),
            "avg" => Ok(Arm::Avg),
            other => Err(Error::invalid(
                "procedure",
                format!("unknown procedure `{other}`"),
            )),
        }
    }
}

/// Counter-based 64-bit mixer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replicate `rep`, independent of scheduling.
pub fn replicate_seed(master: u64, rep: usize) -> u64 {
    splitmix64(master ^ splitmix64(rep as u64))
}

pub fn replicate_rng(master: u64, rep: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replicate_seed(master, rep))
}

/// Rejection sets produced outside this crate, keyed by replicate.
pub type ExternalRejections = BTreeMap<usize, Vec<usize>>;

/// Label used for externally supplied rejection sets.
pub const EXTERNAL_LABEL: &str = "EXTERNAL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub scenario: Scenario,
    pub reps: usize,
    pub seed: u64,
    pub arms: Vec<Arm>,
    pub latla: LatlaConfig,
}

impl StudyConfig {
    pub fn new(scenario: Scenario, reps: usize, seed: u64) -> Self {
        Self {
            scenario,
            reps,
            seed,
            arms: Arm::defaults(scenario.kind()),
            latla: LatlaConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("reps", "need at least one replicate"));
        }
        if self.arms.is_empty() {
            return Err(Error::invalid("arms", "no procedures selected"));
        }
        for arm in &self.arms {
            arm.check(self.scenario.kind())?;
        }
        self.scenario.validate()?;
        self.latla.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateTrace {
    pub rep: usize,
    pub arm: String,
    pub fdp: f64,
    pub power: f64,
    pub rejections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSummary {
    pub arm: String,
    pub mean_fdr: f64,
    pub se_fdr: f64,
    pub mean_power: f64,
    pub se_power: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub scenario: Scenario,
    pub summaries: Vec<ArmSummary>,
    /// Ordered by replicate, then by arm.
    pub traces: Vec<ReplicateTrace>,
}

impl SimResult {
    pub fn summary(&self, arm: &str) -> Option<&ArmSummary> {
        self.summaries.iter().find(|s| s.arm == arm)
    }

    /// Per-replicate values of `arm` in replicate order.
    pub fn trace(&self, arm: &str) -> Vec<&ReplicateTrace> {
        self.traces.iter().filter(|t| t.arm == arm).collect()
    }
}

pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Outcome of every arm on one dataset, in `arms` order.
pub fn evaluate_arms(
    data: &Dataset,
    arms: &[Arm],
    config: &LatlaConfig,
) -> Result<Vec<(Arm, TestOutcome)>> {
    let p = data.batch.p_values();
    let needs_dd = arms.iter().any(|a| matches!(a, Arm::LatlaDd | Arm::Wbh));
    let dd: Option<LatlaRun> = if needs_dd {
        Some(run_latla(&data.batch, &data.distance, config)?)
    } else {
        None
    };
    arms.iter()
        .map(|&arm| {
            let outcome = match arm {
                Arm::Bh => bh(p, config.alpha)?,
                Arm::LatlaDd => dd.as_ref().expect("computed above").outcome.clone(),
                Arm::Wbh => wbh(
                    p,
                    &dd.as_ref().expect("computed above").weights.w,
                    config.alpha,
                )?,
                Arm::LatlaOr => {
                    let oracle = data.latent.as_ref().ok_or_else(|| Error::Unsupported {
                        what: arm.label().into(),
                        design: "non-latent".into(),
                    })?;
                    let tau = config.tau.resolve(p);
                    let pi = oracle.pi_star(tau, config.xi);
                    let f = oracle.f_at(data.batch.t_stats());
                    latla_from_estimates(&data.batch, &pi, &f, oracle, config)?.0
                }
                Arm::Avg => {
                    let s = data
                        .avg_distance
                        .as_ref()
                        .ok_or_else(|| Error::Unsupported {
                            what: arm.label().into(),
                            design: "single-auxiliary".into(),
                        })?;
                    run_latla(&data.batch, s, config)?.outcome
                }
            };
            Ok((arm, outcome))
        })
        .collect()
}

fn score(rep: usize, arm: String, outcome: &TestOutcome, data: &Dataset) -> Result<ReplicateTrace> {
    Ok(ReplicateTrace {
        rep,
        arm,
        fdp: compute_fdp(outcome, &data.truth)?,
        power: compute_power(outcome, &data.truth)?,
        rejections: outcome.k,
    })
}

/// Runs `reps` seeded replicates, optionally scoring external rejection sets.
pub fn run_study(config: &StudyConfig, external: Option<&ExternalRejections>) -> Result<SimResult> {
    config.validate()?;
    let per_rep: Vec<Vec<ReplicateTrace>> = (0..config.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(config.seed, rep);
            let data = config.scenario.generate(&mut rng)?;
            let mut traces = Vec::with_capacity(config.arms.len() + 1);
            for (arm, outcome) in evaluate_arms(&data, &config.arms, &config.latla)? {
                traces.push(score(rep, arm.label().to_string(), &outcome, &data)?);
            }
            if let Some(ext) = external {
                let mut rejected = vec![false; data.batch.len()];
                for &i in ext.get(&rep).map(Vec::as_slice).unwrap_or(&[]) {
                    if i >= rejected.len() {
                        return Err(Error::InvalidValue {
                            index: i,
                            reason: format!("external rejection out of range in replicate {rep}"),
                        });
                    }
                    rejected[i] = true;
                }
                let outcome = TestOutcome::from_rejections(rejected);
                traces.push(score(rep, EXTERNAL_LABEL.to_string(), &outcome, &data)?);
            }
            Ok(traces)
        })
        .collect::<Result<_>>()?;
    let traces: Vec<ReplicateTrace> = per_rep.into_iter().flatten().collect();

    let mut labels: Vec<String> = config.arms.iter().map(|a| a.label().to_string()).collect();
    if external.is_some() {
        labels.push(EXTERNAL_LABEL.to_string());
    }
    let summaries = labels
        .into_iter()
        .map(|arm| {
            let fdp: Vec<f64> = traces
                .iter()
                .filter(|t| t.arm == arm)
                .map(|t| t.fdp)
                .collect();
            let power: Vec<f64> = traces
                .iter()
                .filter(|t| t.arm == arm)
                .map(|t| t.power)
                .collect();
            let (mean_fdr, se_fdr) = mean_se(&fdp);
            let (mean_power, se_power) = mean_se(&power);
            ArmSummary {
                arm,
                mean_fdr,
                se_fdr,
                mean_power,
                se_power,
                reps: fdp.len(),
            }
        })
        .collect();
    Ok(SimResult {
        scenario: config.scenario,
        summaries,
        traces,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub const SUMMARY_HEADER: &str =
    "design,point,parameters,procedure,mean_fdr,se_fdr,mean_power,se_power,reps";

/// One line per `(design point, procedure)`; `preamble` lines are written
/// first as `#` comments.
pub fn write_summary_csv(results: &[SimResult], preamble: &[String], path: &Path) -> Result<()> {
    let mut out = String::new();
    for line in preamble {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for (point, r) in results.iter().enumerate() {
        for s in &r.summaries {
            out.push_str(&format!(
                "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{}\n",
                r.scenario.kind(),
                point,
                r.scenario.label(),
                s.arm,
                s.mean_fdr,
                s.se_fdr,
                s.mean_power,
                s.se_power,
                s.reps
            ));
        }
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn write_trace_csv(results: &[SimResult], preamble: &[String], path: &Path) -> Result<()> {
    let mut out = String::new();
    for line in preamble {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str("design,point,parameters,rep,procedure,fdp,power,rejections\n");
    for (point, r) in results.iter().enumerate() {
        for t in &r.traces {
            out.push_str(&format!(
                "{},{},{},{},{},{:.6},{:.6},{}\n",
                r.scenario.kind(),
                point,
                r.scenario.label(),
                t.rep,
                t.arm,
                t.fdp,
                t.power,
                t.rejections
            ));
        }
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Writes every replicate's primary statistics (`rep_<r>_stats.csv`, with
/// columns `id,t,p,theta`) and distance matrix (`rep_<r>_dist.csv`) so that
/// other procedures can be run on identical data.
pub fn export_replicates(config: &StudyConfig, dir: &Path) -> Result<()> {
    config.validate()?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for rep in 0..config.reps {
        let data = config
            .scenario
            .generate(&mut replicate_rng(config.seed, rep))?;
        let path = dir.join(format!("rep_{rep}_stats.csv"));
        let mut file = fs::File::create(&path).map_err(io_err(&path))?;
        let mut text = String::from("id,t,p,theta\n");
        for (i, ((t, p), th)) in data
            .batch
            .t_stats()
            .iter()
            .zip(data.batch.p_values())
            .zip(data.truth.theta())
            .enumerate()
        {
            text.push_str(&format!("{i},{t:.17e},{p:.17e},{}\n", u8::from(*th)));
        }
        file.write_all(text.as_bytes()).map_err(io_err(&path))?;
        write_dense_csv(&data.distance, &dir.join(format!("rep_{rep}_dist.csv")))?;
    }
    Ok(())
}

/// Reads `rep,index` lines (optional header, `#` comments allowed).
pub fn load_external(path: &Path) -> Result<ExternalRejections> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = ExternalRejections::new();
    let mut first = true;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            reason,
        };
        let mut fields = line.split(',').map(str::trim);
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(parse_err("expected `rep,index`".into())),
        };
        let is_header = std::mem::take(&mut first);
        match (a.parse::<usize>(), b.parse::<usize>()) {
            (Ok(rep), Ok(index)) => out.entry(rep).or_default().push(index),
            _ if is_header => continue,
            _ => return Err(parse_err(format!("invalid entry `{line}`"))),
        }
    }
    Ok(out)
}

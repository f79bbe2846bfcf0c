//! Run configuration: file contents, flag overrides and validation.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use latla::distances::MatrixFormat;
use latla::kernels::BandwidthRule;
use latla::localstats::TAU_LEVEL;
use latla::null::NullDensity;
use latla::pipeline::{LatlaConfig, TauRule};
use latla::sim::{Arm, DesignKind};
use latla::weights::GridSearch;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Analyze,
    Simulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    #[default]
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Estimation {
    pub epsilon: f64,
    pub xi: f64,
    pub tau: TauRule,
    pub bandwidth: BandwidthRule,
    pub distance_bandwidth: Option<BandwidthRule>,
    pub grid: GridSearch,
}

impl Default for Estimation {
    fn default() -> Self {
        let d = LatlaConfig::default();
        Self {
            epsilon: d.epsilon,
            xi: d.xi,
            tau: d.tau,
            bandwidth: d.bandwidth,
            distance_bandwidth: d.distance_bandwidth,
            grid: d.grid,
        }
    }
}

impl Estimation {
    pub fn latla(&self, alpha: f64) -> LatlaConfig {
        LatlaConfig {
            alpha,
            epsilon: self.epsilon,
            xi: self.xi,
            tau: self.tau,
            bandwidth: self.bandwidth,
            distance_bandwidth: self.distance_bandwidth,
            grid: self.grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeInputs {
    pub stats: Option<PathBuf>,
    pub dist: Option<PathBuf>,
    /// `dense-csv` or `triplet`; detected from the file when absent.
    pub dist_format: Option<String>,
    pub null: NullDensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateOptions {
    pub design: Option<DesignKind>,
    pub setting: u8,
    pub reps: usize,
    pub seed: u64,
    /// Procedure arms; the design's defaults when absent.
    pub procedures: Option<Vec<Arm>>,
    /// Overrides the number of hypotheses at every design point.
    pub m: Option<usize>,
    /// Restricts the run to one design point of the grid.
    pub point: Option<usize>,
    pub trace: bool,
    pub export_data: Option<PathBuf>,
    pub external: Option<PathBuf>,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            design: None,
            setting: 1,
            reps: 100,
            seed: DEFAULT_SEED,
            procedures: None,
            m: None,
            point: None,
            trace: false,
            export_data: None,
            external: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub alpha: Vec<f64>,
    pub kernel: Kernel,
    pub out: PathBuf,
    pub estimation: Estimation,
    pub analyze: AnalyzeInputs,
    pub simulate: SimulateOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::default(),
            alpha: vec![0.05],
            kernel: Kernel::default(),
            out: PathBuf::from("latla-out"),
            estimation: Estimation::default(),
            analyze: AnalyzeInputs::default(),
            simulate: SimulateOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(CliError::config)?;
        Self::from_toml(&text)
            .map_err(|e| CliError::config(e.context(format!("parsing {}", path.display()))))
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Single-line JSON echo with every default materialised.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    pub fn dist_format(&self) -> CliResult<Option<MatrixFormat>> {
        self.analyze
            .dist_format
            .as_deref()
            .map(|s| {
                s.parse::<MatrixFormat>()
                    .map_err(|e| CliError::config(anyhow!(e)))
            })
            .transpose()
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.alpha.is_empty() {
            return Err(CliError::config(anyhow!("at least one alpha is required")));
        }
        for &alpha in &self.alpha {
            self.estimation
                .latla(alpha)
                .validate()
                .map_err(CliError::config)?;
        }
        match self.mode {
            Mode::Analyze => {
                for (name, path) in [
                    ("--stats", &self.analyze.stats),
                    ("--dist", &self.analyze.dist),
                ] {
                    let path = path
                        .as_ref()
                        .ok_or_else(|| CliError::config(anyhow!("{name} is required")))?;
                    if !path.is_file() {
                        return Err(CliError::config(anyhow!(
                            "{name}: no such file {}",
                            path.display()
                        )));
                    }
                }
                self.dist_format()?;
            }
            Mode::Simulate => {
                if self.simulate.design.is_none() {
                    return Err(CliError::config(anyhow!("--design is required")));
                }
                if self.alpha.len() != 1 {
                    return Err(CliError::config(anyhow!("simulate takes a single alpha")));
                }
                if let Some(path) = &self.simulate.external {
                    if !path.is_file() {
                        return Err(CliError::config(anyhow!(
                            "--external: no such file {}",
                            path.display()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `bh`, `bh<level>` or a fixed threshold.
pub fn parse_tau(s: &str) -> anyhow::Result<TauRule> {
    let s = s.trim();
    if let Some(level) = s.strip_prefix("bh") {
        let level = level.trim_start_matches(['-', ':']);
        if level.is_empty() {
            return Ok(TauRule::Bh { level: TAU_LEVEL });
        }
        let level = level
            .parse()
            .with_context(|| format!("bad BH level in `{s}`"))?;
        return Ok(TauRule::Bh { level });
    }
    let value = s
        .parse()
        .with_context(|| format!("expected `bh<level>` or a number, got `{s}`"))?;
    Ok(TauRule::Fixed { value })
}

/// `sj`, `silverman` or a fixed positive bandwidth.
pub fn parse_bandwidth(s: &str) -> anyhow::Result<BandwidthRule> {
    match s.trim() {
        "sj" | "sheather-jones" => Ok(BandwidthRule::SheatherJones),
        "silverman" => Ok(BandwidthRule::Silverman),
        other => other
            .parse()
            .map(|h| BandwidthRule::Manual { h })
            .with_context(|| format!("expected `sj`, `silverman` or a number, got `{other}`")),
    }
}

/// `normal` or `t:<df>`.
pub fn parse_null(s: &str) -> anyhow::Result<NullDensity> {
    match s.trim() {
        "normal" | "standard-normal" => Ok(NullDensity::StandardNormal),
        other => {
            let df = other
                .strip_prefix("t:")
                .ok_or_else(|| anyhow!("expected `normal` or `t:<df>`, got `{other}`"))?;
            let df: f64 = df
                .parse()
                .with_context(|| format!("bad degrees of freedom `{df}`"))?;
            Ok(NullDensity::student_t(df)?)
        }
    }
}

pub fn parse_arms(s: &str) -> anyhow::Result<Vec<Arm>> {
    s.split(',')
        .map(str::trim)
        .filter(|a| !a.is_empty())
        .map(|a| a.parse::<Arm>().map_err(|e| anyhow!("{e}")))
        .collect()
}

pub fn parse_design(s: &str) -> anyhow::Result<DesignKind> {
    s.parse::<DesignKind>().map_err(|e| anyhow!("{e}"))
}

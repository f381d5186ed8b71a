//! Resolved run configurations. Each command starts from `Default`, overlays a
//! JSON config file and then command-line flags. The resolved value is what
//! gets written into the run manifest.

use std::path::{Path, PathBuf};

use dcen::bench::{MatrixKind, Method, NoiseSweepConfig, SelectionConfig, SuccessSweepConfig};
use dcen::datagen::{CorrelatedDesign, ValueDist};
use dcen::{DcenError, DcenParams, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Explicit starting point; overrides `warm_start`.
    pub x0: Option<PathBuf>,
    pub method: Method,
    pub warm_start: bool,
    pub params: DcenParams,
    pub format: OutputFormat,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            a: PathBuf::new(),
            b: PathBuf::new(),
            x0: None,
            method: Method::DcenDca,
            warm_start: true,
            params: DcenParams::default(),
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Experiment {
    Success(SuccessSweepConfig),
    Noise(NoiseSweepConfig),
    Selection(SelectionConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub format: OutputFormat,
}

impl BenchConfig {
    pub fn set_trials(&mut self, trials: usize) {
        match &mut self.experiment {
            Experiment::Success(c) => c.trials = trials,
            Experiment::Noise(c) => c.trials = trials,
            Experiment::Selection(c) => c.trials = trials,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match &mut self.experiment {
            Experiment::Success(c) => c.seed = seed,
            Experiment::Noise(c) => c.seed = seed,
            Experiment::Selection(c) => c.seed = seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MriConfig {
    pub n_side: usize,
    pub lines: usize,
    /// Ground-truth image as a CSV grid; the Shepp–Logan phantom when absent.
    pub image: Option<PathBuf>,
    pub gamma: f64,
    pub alpha: f64,
    /// Data weight; `100·mean|f|` over the sampled bins when absent.
    pub mu: Option<f64>,
    pub beta: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for MriConfig {
    fn default() -> Self {
        let p = DcenParams::default();
        Self {
            n_side: 128,
            lines: 16,
            image: None,
            gamma: p.gamma,
            alpha: p.alpha,
            mu: None,
            beta: 1.0,
            max_outer: 50,
            max_inner: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GenKind {
    /// Sensing matrix, sparse signal and observation.
    #[default]
    Problem,
    Phantom,
    Mask,
    /// Correlated regression design.
    Design,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    pub kind: GenKind,
    pub m: usize,
    pub n: usize,
    pub matrix: MatrixKind,
    pub s: usize,
    pub min_sep: usize,
    pub value_dist: ValueDist,
    /// Input SNR in dB; noiseless when absent.
    pub snr_db: Option<f64>,
    pub n_side: usize,
    pub lines: usize,
    pub design: CorrelatedDesign,
    pub seed: u64,
    /// Write the matrix in the `DCEN1` binary container instead of CSV.
    pub binary: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            kind: GenKind::Problem,
            m: 64,
            n: 1024,
            matrix: MatrixKind::default(),
            s: 4,
            min_sep: 20,
            value_dist: ValueDist::default(),
            snr_db: None,
            n_side: 128,
            lines: 16,
            design: CorrelatedDesign::default(),
            seed: 0,
            binary: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProxConfig {
    pub y: Vec<f64>,
    pub step: f64,
    pub gamma: f64,
    pub alpha: f64,
}

impl Default for ProxConfig {
    fn default() -> Self {
        let p = DcenParams::default();
        Self {
            y: Vec::new(),
            step: 1.0,
            gamma: p.gamma,
            alpha: p.alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConditionsConfig {
    pub a: PathBuf,
    /// Observation; zero when absent.
    pub b: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub params: DcenParams,
    pub s: usize,
    pub p: f64,
    pub big_m: Option<f64>,
    pub delta_3s: f64,
    pub delta_4s: f64,
    pub r: f64,
}

impl Default for ConditionsConfig {
    fn default() -> Self {
        Self {
            a: PathBuf::new(),
            b: None,
            truth: None,
            params: DcenParams::default(),
            s: 1,
            p: 0.0,
            big_m: None,
            delta_3s: 0.0,
            delta_4s: 0.0,
            r: 1.0,
        }
    }
}

/// A fully resolved command, as stored in manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "command", content = "config")]
pub enum RunConfig {
    Solve(SolveConfig),
    Bench(BenchConfig),
    Mri(MriConfig),
    Gen(GenConfig),
    ProxCheck(ProxConfig),
    ReportConditions(ConditionsConfig),
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to re-run a command. Output files are listed relative to
/// the output directory. `wall_time_ms` is informational and is the only
/// field that changes between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub run: RunConfig,
    pub outputs: Vec<String>,
    pub wall_time_ms: f64,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| DcenError::Parse(format!("{}: {e}", path.display())))
}

/// `T::default()` overlaid with the config file, if any. Keys missing from
/// the file keep their defaults; unknown keys are rejected.
pub fn load_or_default<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => read_json(p),
        None => Ok(T::default()),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| DcenError::Parse(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

//! Experiment configuration files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::procedures::{parse_procedures, Procedure, DEFAULT_C_OV};
use crate::error::{Error, Result};
use crate::models::{CollectionSpec, Family, MaxDimRule};
use crate::scenario::{make_scenario, NoiseFn, NoiseLaw, RegressionFn, RegressionScenario};

/// Noise level: one value, or the levels on `[0, 1/2]` and `(1/2, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSpec {
    Level(f64),
    Levels(Vec<f64>),
}

/// On-disk form of an experiment, as read from TOML (or from the `config`
/// object of a run manifest).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    /// `linear`, `half-sine`, `linear-sine` or a constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<SigmaSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// `gaussian` or `truncated:<bound>`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collection: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub maxdim: Option<String>,
    /// Models with a bin holding fewer points are discarded (default 2).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_bin_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub procedures: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_ov: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ConfigFile {
    pub fn parse_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|source| Error::Toml { path: path.to_path_buf(), source })
    }
}

/// Reads a TOML experiment file, or the configuration echoed in a
/// `manifest.json`.
pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    if path.extension().is_some_and(|e| e == "json") {
        #[derive(Deserialize)]
        struct Manifest {
            config: ConfigFile,
        }
        let m: Manifest =
            serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
        return Ok(m.config);
    }
    ConfigFile::parse_toml(&text, path)
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Experiment name, or `custom`.
    pub label: String,
    pub scenario: RegressionScenario<f64>,
    pub collection: CollectionSpec,
    pub min_bin_count: usize,
    pub replications: usize,
    pub seed: u64,
    pub procedures: Vec<Procedure>,
    pub c_ov_grid: Vec<f64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    file: ConfigFile,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn parse_regression(s: &str) -> Result<RegressionFn<f64>> {
    match s.trim().to_ascii_lowercase().as_str() {
        "linear" | "x" => Ok(RegressionFn::linear()),
        "half-sine" | "sin" => Ok(RegressionFn::half_sine()),
        "linear-sine" | "xs" => Ok(RegressionFn::linear_then_sine()),
        other => other
            .strip_prefix("constant:")
            .unwrap_or(other)
            .parse()
            .map(RegressionFn::constant)
            .map_err(|_| invalid(format!("unknown regression function `{s}`"))),
    }
}

fn parse_noise_law(s: &str) -> Result<NoiseLaw<f64>> {
    let s = s.trim().to_ascii_lowercase();
    if s == "gaussian" {
        return Ok(NoiseLaw::Gaussian);
    }
    let bound: f64 = s
        .strip_prefix("truncated:")
        .and_then(|b| b.parse().ok())
        .ok_or_else(|| invalid(format!("unknown noise law `{s}`")))?;
    Ok(NoiseLaw::TruncatedGaussian { bound })
}

fn noise_law_name(law: &NoiseLaw<f64>) -> String {
    match law {
        NoiseLaw::Gaussian => "gaussian".into(),
        NoiseLaw::TruncatedGaussian { bound } => format!("truncated:{bound}"),
    }
}

fn default_max_dim(label: &str) -> MaxDimRule {
    if label.eq_ignore_ascii_case("x1-005mu02") {
        MaxDimRule::LogSquared
    } else {
        MaxDimRule::Log
    }
}

impl ExperimentConfig {
    pub fn from_file(file: &ConfigFile) -> Result<Self> {
        let (label, scenario) = match &file.experiment {
            Some(name) => {
                if file.s.is_some() || file.sigma.is_some() || file.mu.is_some() || file.noise.is_some() {
                    return Err(invalid("`experiment` cannot be combined with `s`, `sigma`, `mu` or `noise`"));
                }
                let mut sc = make_scenario::<f64>(name)?;
                if let Some(n) = file.n {
                    sc = sc.with_n(n);
                }
                (name.clone(), sc)
            }
            None => {
                let s = parse_regression(file.s.as_deref().ok_or_else(|| invalid("missing `experiment` or `s`"))?)?;
                let noise = match file.sigma.as_ref().ok_or_else(|| invalid("missing `sigma`"))? {
                    SigmaSpec::Level(v) => NoiseFn::constant(*v),
                    SigmaSpec::Levels(v) if v.len() == 2 => NoiseFn::two_level(v[0], v[1]),
                    SigmaSpec::Levels(v) if v.len() == 1 => NoiseFn::constant(v[0]),
                    SigmaSpec::Levels(_) => return Err(invalid("`sigma` takes one or two levels")),
                };
                let mu = file.mu.unwrap_or(0.5);
                let n = file.n.ok_or_else(|| invalid("missing `n`"))?;
                let law = file.noise.as_deref().map(parse_noise_law).transpose()?.unwrap_or(NoiseLaw::Gaussian);
                ("custom".to_string(), RegressionScenario::new(s, noise, mu, n, law)?)
            }
        };
        let family: Family = file.collection.as_deref().unwrap_or("reg-half").parse()?;
        let max_dim = match &file.maxdim {
            Some(m) => m.parse()?,
            None => default_max_dim(&label),
        };
        let c_ov_grid = file.c_ov.clone().unwrap_or_else(|| DEFAULT_C_OV.to_vec());
        if c_ov_grid.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
            return Err(invalid("overpenalization factors must be finite and >= 0"));
        }
        let tokens = file.procedures.clone().unwrap_or_else(|| vec!["all".into()]);
        let procedures = parse_procedures(&tokens, &c_ov_grid)?;
        let replications = file.replications.unwrap_or(1000);
        if replications == 0 {
            return Err(invalid("replications must be >= 1"));
        }
        if file.threads == Some(0) {
            return Err(invalid("threads must be >= 1"));
        }
        Ok(Self {
            label,
            scenario,
            collection: CollectionSpec { family, max_dim },
            min_bin_count: file.min_bin_count.unwrap_or(2),
            replications,
            seed: file.seed.unwrap_or(0),
            procedures,
            c_ov_grid,
            threads: file.threads,
            out: file.out.clone(),
            file: file.clone(),
        })
    }

    /// Reference experiment with default settings.
    pub fn named(name: &str) -> Result<Self> {
        Self::from_file(&ConfigFile { experiment: Some(name.to_string()), ..Default::default() })
    }

    pub fn with_replications(mut self, n: usize) -> Self {
        self.replications = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub fn with_procedures(mut self, procedures: Vec<Procedure>) -> Self {
        self.procedures = procedures;
        self
    }

    pub fn with_sample_size(mut self, n: usize) -> Self {
        self.scenario = self.scenario.with_n(n);
        self
    }

    pub fn with_min_bin_count(mut self, k: usize) -> Self {
        self.min_bin_count = k;
        self
    }

    pub fn with_collection(mut self, collection: CollectionSpec) -> Self {
        self.collection = collection;
        self
    }

    /// Fully resolved configuration, loadable again with [`ExperimentConfig::from_file`].
    pub fn echo(&self) -> ConfigFile {
        let mut f = self.file.clone();
        f.n = Some(self.scenario.n);
        if f.experiment.is_none() {
            f.mu = Some(self.scenario.design_mu);
            f.noise = Some(noise_law_name(&self.scenario.noise_law));
        }
        f.collection = Some(self.collection.family.to_string());
        f.maxdim = Some(self.collection.max_dim.to_string());
        f.min_bin_count = Some(self.min_bin_count);
        f.replications = Some(self.replications);
        f.seed = Some(self.seed);
        f.procedures = Some(self.procedures.iter().map(|p| p.label()).collect());
        f.c_ov = Some(self.c_ov_grid.clone());
        f.threads = None;
        f.out = None;
        f
    }
}

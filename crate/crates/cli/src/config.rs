//! Run configuration: one TOML file with sections, plus `key=value`
//! overrides using dotted keys (`hmc.samples=20`).
//!
//! ```toml
//! [data]
//! dataset = "data"        # directory of .grid files
//! output = "out"
//!
//! [model]
//! lattice = [15, 15]      # odd extents; empty means 15 on every axis
//! time_steps = 10
//! alpha = 10.0            # initial smoothness weight
//! k = 9.0
//! beta = 0.1
//! sigma = 0.05
//!
//! [hmc]
//! samples = 10            # draws per subject and EM iteration
//! step_size = 1.0
//! step_mode = "curvature" # or "relative", "fixed"
//! leapfrog = 10
//! burn_in = 50
//! seed = 0
//!
//! [em]
//! iterations = 50
//! tolerance = 1e-4
//! velocity_steps = 3
//! velocity_step_size = 0.5
//! workers = 1
//!
//! [metrics]
//! patch_sizes = [3, 5, 7]
//! n_patches = 3000
//! seed = 0
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use bayes_atlas::fourier_field::FrequencyLattice;
use bayes_atlas::hmc_sampler::{HmcConfig, StepSize};
use bayes_atlas::mcem::{InitialValues, McemConfig};
use bayes_atlas::registration::DescentConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("bad override `{0}`: expected key=value with a dotted key")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub dataset: PathBuf,
    pub output: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub lattice: Vec<usize>,
    pub time_steps: usize,
    pub alpha: f64,
    pub k: f64,
    pub beta: f64,
    pub sigma: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let init = InitialValues::default();
        Self {
            lattice: vec![],
            time_steps: bayes_atlas::geodesic::DEFAULT_STEPS,
            alpha: init.alpha,
            k: init.k,
            beta: init.beta,
            sigma: init.sigma,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepMode {
    /// Fraction of the local posterior width at the chain start.
    Curvature,
    /// Fraction of the starting `alpha`.
    Relative,
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HmcSection {
    pub samples: usize,
    pub step_size: f64,
    pub step_mode: StepMode,
    pub leapfrog: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for HmcSection {
    fn default() -> Self {
        Self {
            samples: 10,
            step_size: 1.0,
            step_mode: StepMode::Curvature,
            leapfrog: 10,
            burn_in: 50,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmSection {
    pub iterations: usize,
    pub tolerance: f64,
    pub velocity_steps: usize,
    pub velocity_step_size: f64,
    pub workers: usize,
}

impl Default for EmSection {
    fn default() -> Self {
        let d = DescentConfig::default();
        Self {
            iterations: 50,
            tolerance: 1e-4,
            velocity_steps: d.iterations,
            velocity_step_size: d.initial_step,
            workers: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub patch_sizes: Vec<usize>,
    pub n_patches: usize,
    pub seed: u64,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            patch_sizes: vec![3, 5, 7],
            n_patches: 3000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub hmc: HmcSection,
    #[serde(default)]
    pub em: EmSection,
    #[serde(default)]
    pub metrics: MetricsSection,
}

const DEFAULT_EXTENT: usize = 15;

impl RunConfig {
    /// A complete config with every default spelled out.
    pub fn template(dataset: &str, output: &str) -> Self {
        Self {
            data: DataSection {
                dataset: dataset.into(),
                output: output.into(),
            },
            model: ModelSection::default(),
            hmc: HmcSection::default(),
            em: EmSection::default(),
            metrics: MetricsSection::default(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.data.dataset.as_os_str().is_empty() || self.data.output.as_os_str().is_empty() {
            return bad("data.dataset and data.output must be non-empty".into());
        }
        let counts = [
            ("model.time_steps", self.model.time_steps),
            ("hmc.samples", self.hmc.samples),
            ("hmc.leapfrog", self.hmc.leapfrog),
            ("em.iterations", self.em.iterations),
            ("em.workers", self.em.workers),
            ("metrics.n_patches", self.metrics.n_patches),
        ];
        for (name, n) in counts {
            if n == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        let reals = [
            ("model.alpha", self.model.alpha),
            ("model.k", self.model.k),
            ("model.beta", self.model.beta),
            ("model.sigma", self.model.sigma),
            ("hmc.step_size", self.hmc.step_size),
            ("em.tolerance", self.em.tolerance),
            ("em.velocity_step_size", self.em.velocity_step_size),
        ];
        for (name, x) in reals {
            if !(x.is_finite() && x > 0.0) {
                return bad(format!("{name} must be positive, got {x}"));
            }
        }
        if let Some(&m) = self.model.lattice.iter().find(|&&m| m == 0 || m % 2 == 0) {
            return bad(format!("model.lattice extents must be odd, got {m}"));
        }
        if let Some(&w) = self.metrics.patch_sizes.iter().find(|&&w| w < 2) {
            return bad(format!("metrics.patch_sizes entries must be at least 2, got {w}"));
        }
        Ok(())
    }

    pub fn mcem_config(&self) -> McemConfig {
        McemConfig {
            em_iterations: self.em.iterations,
            tolerance: self.em.tolerance,
            time_steps: self.model.time_steps,
            hmc: HmcConfig {
                step_size: match self.hmc.step_mode {
                    StepMode::Curvature => StepSize::Curvature(self.hmc.step_size),
                    StepMode::Relative => StepSize::Relative(self.hmc.step_size),
                    StepMode::Fixed => StepSize::Fixed(self.hmc.step_size),
                },
                n_leapfrog: self.hmc.leapfrog,
                n_samples: self.hmc.samples,
                burn_in: self.hmc.burn_in,
                seed: self.hmc.seed,
            },
            descent: DescentConfig {
                iterations: self.em.velocity_steps,
                initial_step: self.em.velocity_step_size,
                ..DescentConfig::default()
            },
            init: InitialValues {
                alpha: self.model.alpha,
                k: self.model.k,
                beta: self.model.beta,
                sigma: self.model.sigma,
            },
        }
    }

    /// Frequency lattice for images of the given dimensions.
    pub fn lattice(&self, dims: &[usize]) -> Result<FrequencyLattice, ConfigError> {
        let invalid = |e: bayes_atlas::AtlasError| ConfigError::Invalid(e.to_string());
        if self.model.lattice.is_empty() {
            return FrequencyLattice::isotropic(DEFAULT_EXTENT, dims).map_err(invalid);
        }
        if self.model.lattice.len() != dims.len() {
            return Err(ConfigError::Invalid(format!(
                "model.lattice has {} entries but the images have {} axes",
                self.model.lattice.len(),
                dims.len()
            )));
        }
        FrequencyLattice::new(&self.model.lattice, dims).map_err(invalid)
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.data.dataset, &mut self.data.output] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

/// Parses config text, applying `key=value` overrides before validation.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = parse_config(&text, overrides)?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    Ok(cfg)
}

/// `a.b=value`: the value is read as a TOML literal when possible, else as
/// a bare string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(spec.to_string()))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(spec.to_string()));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = parts.split_last().expect("non-empty key");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::Override(format!("{spec} (`{p}` is not a section)")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[data]\ndataset = \"d\"\noutput = \"o\"\n";

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg = parse_config(MINIMAL, &[]).unwrap();
        assert_eq!(cfg, RunConfig::template("d", "o"));
        let round = parse_config(&cfg.to_toml(), &[]).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn overrides_take_precedence() {
        let cfg = parse_config(
            MINIMAL,
            &[
                "hmc.samples=25".into(),
                "model.lattice=[7, 7]".into(),
                "hmc.step_mode=fixed".into(),
                "data.output = elsewhere".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.hmc.samples, 25);
        assert_eq!(cfg.model.lattice, vec![7, 7]);
        assert_eq!(cfg.hmc.step_mode, StepMode::Fixed);
        assert_eq!(cfg.data.output, PathBuf::from("elsewhere"));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_config("[data", &[]), Err(ConfigError::Parse(_))));
        assert!(matches!(
            parse_config(&format!("{MINIMAL}[hmc]\nsamples = 0\n"), &[]),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            parse_config(&format!("{MINIMAL}[hmc]\nbogus = 1\n"), &[]),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(parse_config(MINIMAL, &["novalue".into()]), Err(ConfigError::Override(_))));
        assert!(matches!(
            parse_config(MINIMAL, &["model.lattice=[8, 8]".into()]),
            Err(ConfigError::Invalid(_))
        ));
    }
}

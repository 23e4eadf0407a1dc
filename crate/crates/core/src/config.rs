//! Run configuration file.
//!
//! Every field is optional; omitted fields take the test-beam defaults
//! (12 elements, prior coefficients `[10, 10, 10, 0.1]`, `β = 1`, 2000 burn-in
//! and 1000 retained states). A minimal file:
//!
//! ```json
//! { "geometry": { "thickness": 0.0134 } }
//! ```
//!
//! After [`load_config`] every `null`-able field is resolved, so serializing
//! the result and loading it again gives an equal value. Relative paths are
//! taken relative to the directory of the configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::beam::{BeamGeometry, UpdatingParameters};
use crate::data::{default_truth, SynthNoise};
use crate::error::{ensure_positive, Error, Result};
use crate::ga::GaConfig;
use crate::objective::{PriorSpec, ResidualForm};
use crate::sampler::ChainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: BeamGeometry,
    pub prior: PriorConfig,
    /// Likelihood weight on the squared residuals.
    pub beta: f64,
    pub residual: ResidualForm,
    pub chain: ChainConfig,
    pub ga: GaConfig,
    /// Global DOF indices kept by the reduction; `None` means every translation.
    pub masters: Option<Vec<usize>>,
    pub n_modes: usize,
    pub synth: SynthConfig,
    pub histogram: HistogramConfig,
    /// Hammer position along the beam (m). Recorded only; the model has no forcing.
    pub excitation_position: f64,
    pub paths: PathsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            geometry: BeamGeometry::default(),
            prior: PriorConfig::default(),
            beta: 1.0,
            residual: ResidualForm::default(),
            chain: ChainConfig::default(),
            ga: GaConfig::default(),
            masters: None,
            n_modes: 5,
            synth: SynthConfig::default(),
            histogram: HistogramConfig::default(),
            excitation_position: 0.42,
            paths: PathsConfig::default(),
        }
    }
}

/// Prior settings; `None` fields follow the beam defaults for the configured element count.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub alphas: Option<Vec<f64>>,
    pub groups: Option<Vec<Vec<usize>>>,
    pub reference: Option<Vec<f64>>,
}

/// Synthetic measured data used when no measured file is configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Flat parameter vector; `None` means nominal with elements 5 and 6 at 0.8.
    pub truth: Option<Vec<f64>>,
    pub freq_noise: f64,
    pub shape_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let noise = SynthNoise::default();
        SynthConfig {
            truth: None,
            freq_noise: noise.freq_rel,
            shape_noise: noise.shape_rel,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn noise(&self) -> SynthNoise {
        SynthNoise {
            freq_rel: self.freq_noise,
            shape_rel: self.shape_noise,
        }
    }
}

/// Which predicted quantities are binned after a Bayesian run (0-based indices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramConfig {
    pub mode: usize,
    pub coordinate: usize,
    pub bins: usize,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        HistogramConfig {
            mode: 0,
            coordinate: 0,
            bins: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Measured-data JSON; `None` means synthesize from [`SynthConfig`].
    pub measured: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            measured: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Fill every `None` with its default and check all invariants.
    pub fn resolve(&mut self) -> Result<()> {
        self.geometry.validate()?;
        let n_el = self.geometry.element_count;
        let n = n_el + 2;
        let defaults = PriorSpec::beam_default(n_el);
        self.prior.alphas.get_or_insert(defaults.alphas);
        self.prior.groups.get_or_insert(defaults.groups);
        self.prior.reference.get_or_insert(defaults.reference);
        let groups = self.prior.groups.clone().unwrap_or_default();
        self.chain
            .step_sizes
            .get_or_insert_with(|| ChainConfig::beam_step_sizes(&groups, n));
        self.ga.resolve(n);
        let translations = self.geometry.translation_dofs();
        self.masters.get_or_insert(translations);
        self.synth.truth.get_or_insert_with(|| default_truth(n_el).to_vec());
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        let n = self.geometry.element_count + 2;
        let prior = self.prior_spec()?;
        if prior.reference.len() != n {
            return Err(Error::config(
                "prior.reference",
                format!("{} entries for {n} parameters", prior.reference.len()),
            ));
        }
        prior.validate()?;
        UpdatingParameters::from_slice(&prior.reference)?.validate()?;
        ensure_positive("beta", self.beta)?;
        self.chain.validate(n)?;
        self.ga.validate(n)?;
        for (i, (r, b)) in prior
            .reference
            .iter()
            .zip(self.ga.bounds.as_deref().unwrap_or_default())
            .enumerate()
        {
            if !(b[0] <= *r && *r <= b[1]) {
                return Err(Error::config(format!("ga.bounds[{i}]"), format!("does not contain the reference value {r}")));
            }
        }

        let masters = self.masters()?;
        if masters.is_empty() {
            return Err(Error::config("masters", "at least one master coordinate is required"));
        }
        let dofs = self.geometry.dof_count();
        let mut seen = vec![false; dofs];
        for &m in masters {
            if m >= dofs {
                return Err(Error::config("masters", format!("index {m} out of range for {dofs} DOFs")));
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(Error::config("masters", format!("index {m} repeated")));
            }
        }
        if self.n_modes < 1 {
            return Err(Error::config("n_modes", "at least one mode is required"));
        }

        let truth = self.synth.truth.as_ref().ok_or_else(|| Error::config("synth.truth", "not resolved"))?;
        if truth.len() != n {
            return Err(Error::config("synth.truth", format!("{} entries for {n} parameters", truth.len())));
        }
        UpdatingParameters::from_slice(truth)?.validate()?;
        for (name, v) in [("synth.freq_noise", self.synth.freq_noise), ("synth.shape_noise", self.synth.shape_noise)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("{v} is not a non-negative level")));
            }
        }

        if self.histogram.bins < 2 {
            return Err(Error::config("histogram.bins", "at least two bins are required"));
        }
        if self.histogram.mode >= self.n_modes {
            return Err(Error::config("histogram.mode", format!("{} is not below n_modes", self.histogram.mode)));
        }
        if self.histogram.coordinate >= masters.len() {
            return Err(Error::config(
                "histogram.coordinate",
                format!("{} is not below the master count", self.histogram.coordinate),
            ));
        }
        if !self.excitation_position.is_finite() {
            return Err(Error::config("excitation_position", "must be finite"));
        }
        if let Some(p) = &self.paths.measured {
            if !p.is_file() {
                return Err(Error::config("paths.measured", format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn prior_spec(&self) -> Result<PriorSpec> {
        let unresolved = |f: &str| Error::config(format!("prior.{f}"), "not resolved");
        Ok(PriorSpec {
            alphas: self.prior.alphas.clone().ok_or_else(|| unresolved("alphas"))?,
            groups: self.prior.groups.clone().ok_or_else(|| unresolved("groups"))?,
            reference: self.prior.reference.clone().ok_or_else(|| unresolved("reference"))?,
        })
    }

    pub fn masters(&self) -> Result<&[usize]> {
        self.masters.as_deref().ok_or_else(|| Error::config("masters", "not resolved"))
    }

    pub fn reference(&self) -> Result<UpdatingParameters> {
        UpdatingParameters::from_slice(&self.prior_spec()?.reference)
    }

    pub fn truth(&self) -> Result<UpdatingParameters> {
        let t = self.synth.truth.as_ref().ok_or_else(|| Error::config("synth.truth", "not resolved"))?;
        UpdatingParameters::from_slice(t)
    }

    /// One seed for the chain, the optimizer and synthetic data.
    pub fn override_seed(&mut self, seed: u64) {
        self.chain.seed = seed;
        self.ga.seed = seed;
        self.synth.seed = seed;
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Numerical(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// SHA-256 of the compact serialization, hex encoded. The output
    /// directory is left out so relocated runs keep their digest.
    pub fn digest(&self) -> Result<String> {
        let mut c = self.clone();
        c.paths.output_dir = PathBuf::new();
        let s = serde_json::to_string(&c).map_err(|e| Error::Numerical(e.to_string()))?;
        Ok(hex::encode(Sha256::digest(s.as_bytes())))
    }
}

/// Parse and resolve a configuration document. `base` anchors relative paths.
pub fn parse_config(text: &str, origin: &str, base: Option<&Path>) -> Result<RunConfig> {
    let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if let Some(base) = base {
        cfg.paths.output_dir = anchor(base, &cfg.paths.output_dir);
        if let Some(m) = &cfg.paths.measured {
            cfg.paths.measured = Some(anchor(base, m));
        }
    }
    cfg.resolve()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    parse_config(&text, &path.display().to_string(), Some(base))
}

fn anchor(base: &Path, p: &Path) -> PathBuf {
    let joined = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    std::path::absolute(&joined).unwrap_or(joined)
}

//! Run configuration: every hyperparameter, seed and path of a run, loadable
//! from TOML and overridable from the command line.

use std::fs;
use std::path::{Path, PathBuf};

use recap_core::encoding::QuantizerSpec;
use recap_core::prototype::HebbSpec;
use recap_core::reservoir::ReservoirSpec;
use recap_core::ridge::RidgeSpec;
use serde::{Deserialize, Serialize};

use crate::dataset::digest64;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Recap,
    Ridge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub n_units: usize,
    pub input_dim: usize,
    pub spectral_radius: f64,
    pub leak_rate: f64,
    pub sparsity: f64,
    pub steps: usize,
    pub washout: usize,
    pub levels: usize,
    pub potentiation: f64,
    pub decay: f64,
    pub sparsity_fraction: f64,
    pub regularization: f64,
    pub include_bias: bool,
    pub classes: usize,
    pub epochs: usize,
    /// Reservoir seed.
    pub seed: u64,
    pub corruption_seed: u64,
    /// Images per class kept from the training set; all when absent.
    pub subset: Option<usize>,
    pub subset_seed: u64,
    /// Keep continuous prototype states in the model file.
    pub keep_states: bool,
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    /// Worker threads; excluded from the digest.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let r = ReservoirSpec::default();
        let h = HebbSpec::default();
        let b = RidgeSpec::default();
        RunConfig {
            model: ModelKind::Recap,
            n_units: r.n_units,
            input_dim: r.input_dim,
            spectral_radius: r.spectral_radius,
            leak_rate: r.leak_rate,
            sparsity: r.sparsity,
            steps: r.steps,
            washout: r.washout,
            levels: QuantizerSpec::default().levels(),
            potentiation: h.potentiation,
            decay: h.decay,
            sparsity_fraction: h.sparsity_fraction,
            regularization: b.regularization,
            include_bias: b.include_bias,
            classes: h.classes,
            epochs: 1,
            seed: r.seed,
            corruption_seed: 0,
            subset: None,
            subset_seed: 0,
            keep_states: false,
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn reservoir_spec(&self) -> ReservoirSpec {
        ReservoirSpec {
            n_units: self.n_units,
            input_dim: self.input_dim,
            spectral_radius: self.spectral_radius,
            leak_rate: self.leak_rate,
            sparsity: self.sparsity,
            steps: self.steps,
            washout: self.washout,
            seed: self.seed,
        }
    }

    pub fn quantizer(&self) -> Result<QuantizerSpec> {
        Ok(QuantizerSpec::new(self.levels)?)
    }

    pub fn hebb_spec(&self) -> HebbSpec {
        HebbSpec {
            potentiation: self.potentiation,
            decay: self.decay,
            classes: self.classes,
            sparsity_fraction: self.sparsity_fraction,
        }
    }

    pub fn ridge_spec(&self) -> RidgeSpec {
        RidgeSpec {
            regularization: self.regularization,
            include_bias: self.include_bias,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: recap_core::Error| Error::Config(e.to_string());
        self.reservoir_spec().validate().map_err(wrap)?;
        self.quantizer().map_err(|e| Error::Config(e.to_string()))?;
        self.hebb_spec().validate().map_err(wrap)?;
        self.ridge_spec().validate().map_err(wrap)?;
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.subset == Some(0) {
            return Err(Error::Config("subset must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    /// Hash of the canonical TOML form with the thread count cleared.
    pub fn digest(&self) -> u64 {
        let canonical = RunConfig {
            threads: None,
            ..self.clone()
        };
        digest64(canonical.to_toml().as_bytes())
    }
}

//! Regression models: exact GPR and bagged trees, k-fold CV, GPR tuning.

pub mod cv;
pub mod forest;
pub mod gpr;
pub mod standardize;
pub mod tune;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Target;
use crate::error::{Error, Result};

pub use cv::{fold_assignment, kfold_cv, CvReport, FoldMetrics, Predictor, Trainer};
pub use forest::{forest_fit, ForestConfig, TreeEnsemble};
pub use gpr::{Gp, GprHyper, Kernel};
pub use standardize::{standardize_fit_apply, Standardizer, TargetScale};
pub use tune::{cv_seed, tune_gpr, Acquisition, TuneConfig, TuneObjective, TuneResult};

pub const MODEL_FORMAT: &str = "ppgbp-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gpr,
    Forest,
}

/// GPR hyperparameters as configured; a missing length-scale means
/// `sqrt(d)` for `d` standardized inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GprSettings {
    pub kernel: Kernel,
    pub signal_var: f64,
    pub length_scale: Option<f64>,
    pub noise_var: f64,
}

impl Default for GprSettings {
    fn default() -> Self {
        Self {
            kernel: Kernel::SquaredExponential,
            signal_var: 1.0,
            length_scale: None,
            noise_var: 0.1,
        }
    }
}

impl GprSettings {
    pub fn resolve(&self, dim: usize) -> GprHyper {
        GprHyper {
            kernel: self.kernel,
            signal_var: self.signal_var,
            length_scale: self.length_scale.unwrap_or((dim.max(1) as f64).sqrt()),
            noise_var: self.noise_var,
        }
    }
}

impl From<GprHyper> for GprSettings {
    fn from(h: GprHyper) -> Self {
        Self {
            kernel: h.kernel,
            signal_var: h.signal_var,
            length_scale: Some(h.length_scale),
            noise_var: h.noise_var,
        }
    }
}

/// GP on z-scored inputs and a z-scored target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GprRegressor {
    pub inputs: Standardizer,
    pub target: TargetScale,
    pub gp: Gp,
}

impl GprRegressor {
    pub fn fit(x: &[Vec<f64>], y: &[f64], settings: &GprSettings) -> Result<Self> {
        let inputs = Standardizer::fit(x)?;
        if inputs.n_output() == 0 {
            return Err(Error::Argument("every input column has zero variance".into()));
        }
        let target = TargetScale::fit(y);
        let z: Vec<f64> = y.iter().map(|&v| target.forward(v)).collect();
        let gp = Gp::fit(&inputs.transform(x)?, &z, settings.resolve(inputs.n_output()))?;
        Ok(Self { inputs, target, gp })
    }

    /// Predictive mean and variance in target units.
    pub fn predict_with_variance(&self, x: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (m, v) = self.gp.predict(&self.inputs.transform(x)?)?;
        let s2 = self.target.std * self.target.std;
        Ok((
            m.into_iter().map(|z| self.target.inverse(z)).collect(),
            v.into_iter().map(|z| z * s2).collect(),
        ))
    }
}

impl Predictor for GprRegressor {
    fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(self.predict_with_variance(x)?.0)
    }
}

impl Predictor for TreeEnsemble {
    fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        TreeEnsemble::predict(self, x)
    }
}

pub struct GprTrainer(pub GprSettings);

impl Trainer for GprTrainer {
    type Model = GprRegressor;
    fn train(&self, x: &[Vec<f64>], y: &[f64]) -> Result<GprRegressor> {
        GprRegressor::fit(x, y, &self.0)
    }
}

pub struct ForestTrainer {
    pub config: ForestConfig,
    pub seed: u64,
}

impl Trainer for ForestTrainer {
    type Model = TreeEnsemble;
    fn train(&self, x: &[Vec<f64>], y: &[f64]) -> Result<TreeEnsemble> {
        forest_fit(x, y, &self.config, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Gpr(GprRegressor),
    Forest(TreeEnsemble),
}

impl Predictor for Model {
    fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        match self {
            Model::Gpr(m) => m.predict(x),
            Model::Forest(m) => m.predict(x),
        }
    }
}

/// A trained model with the feature columns it consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub target: Target,
    pub config_hash: String,
    /// 0-based indices into the full feature vector.
    pub feature_indices: Vec<usize>,
    pub feature_names: Vec<String>,
    pub model: Model,
}

impl ModelFile {
    pub fn new(
        target: Target,
        config_hash: String,
        feature_indices: Vec<usize>,
        feature_names: Vec<String>,
        model: Model,
    ) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            target,
            config_hash,
            feature_indices,
            feature_names,
            model,
        }
    }

    /// Predicts from full-width feature rows.
    pub fn predict_full(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        let x: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| self.feature_indices.iter().map(|&j| r[j]).collect())
            .collect();
        self.model.predict(&x)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        let format = v.get("format").and_then(|f| f.as_str());
        if format != Some(MODEL_FORMAT) {
            return Err(Error::ModelFormat(format!("expected format {MODEL_FORMAT:?}, got {format:?}")));
        }
        let version = v.get("version").and_then(|f| f.as_u64());
        if version != Some(MODEL_VERSION as u64) {
            return Err(Error::ModelFormat(format!("unsupported version {version:?}")));
        }
        Ok(serde_json::from_value(v)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

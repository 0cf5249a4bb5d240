use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{ColumnMapping, SplitMode, REFERENCE_SAMPLE_RATE_HZ};
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::fiducials::FiducialConfig;
use crate::preprocess::PreprocessConfig;
use crate::regress::{ForestConfig, GprSettings, ModelKind, TuneConfig};
use crate::rng;
use crate::select::SelectionConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnPreset {
    Default,
    PpgBp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub signal_dir: PathBuf,
    pub subject_table: PathBuf,
    #[serde(default = "default_preset")]
    pub column_preset: ColumnPreset,
    /// TOML file overriding the preset's header names.
    #[serde(default)]
    pub column_map_file: Option<PathBuf>,
    #[serde(default = "default_rate")]
    pub sample_rate_hz: f64,
}

fn default_preset() -> ColumnPreset {
    ColumnPreset::Default
}

fn default_rate() -> f64 {
    REFERENCE_SAMPLE_RATE_HZ
}

impl DatasetConfig {
    pub fn columns(&self) -> Result<ColumnMapping> {
        match &self.column_map_file {
            Some(p) => ColumnMapping::from_toml_file(p),
            None => Ok(match self.column_preset {
                ColumnPreset::Default => ColumnMapping::default(),
                ColumnPreset::PpgBp => ColumnMapping::ppg_bp(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QcConfig {
    /// Fixed SQI cutoff; wins over `calibrate_to_count`.
    pub sqi_threshold: Option<f64>,
    /// Keep this many highest-SQI signals.
    pub calibrate_to_count: Option<usize>,
}

impl Default for QcConfig {
    fn default() -> Self {
        Self {
            sqi_threshold: None,
            calibrate_to_count: Some(222),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub mode: SplitMode,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.15,
            mode: SplitMode::BySignal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// `run-all` tunes GPR hyperparameters instead of using `gpr` as given.
    pub tune: bool,
    pub cv_folds: usize,
    pub gpr: GprSettings,
    pub forest: ForestConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Gpr,
            tune: true,
            cv_folds: 10,
            gpr: GprSettings::default(),
            forest: ForestConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub qc: QcConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub fiducials: FiducialConfig,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub tune: TuneConfig,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Independent seeds handed to each randomized stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSeeds {
    pub split: u64,
    pub selection: u64,
    pub cv: u64,
    pub forest: u64,
    pub tune: u64,
}

impl PipelineConfig {
    pub fn new(seed: u64, signal_dir: PathBuf, subject_table: PathBuf, output_dir: PathBuf) -> Self {
        Self {
            seed,
            output_dir,
            dataset: DatasetConfig {
                signal_dir,
                subject_table,
                column_preset: ColumnPreset::Default,
                column_map_file: None,
                sample_rate_hz: REFERENCE_SAMPLE_RATE_HZ,
            },
            qc: QcConfig::default(),
            split: SplitConfig::default(),
            preprocess: PreprocessConfig::default(),
            fiducials: FiducialConfig::default(),
            features: FeatureConfig::default(),
            selection: SelectionConfig::default(),
            model: ModelConfig::default(),
            tune: TuneConfig::default(),
        }
    }

    /// Parses TOML; relative paths are taken relative to the file's directory.
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(text)?;
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.output_dir);
        fix(&mut cfg.dataset.signal_dir);
        fix(&mut cfg.dataset.subject_table);
        if let Some(p) = cfg.dataset.column_map_file.as_mut() {
            fix(p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&fs::read_to_string(path)?, base)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    /// Checks value ranges; returns every offending key at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<&str> = Vec::new();
        if !(self.dataset.sample_rate_hz > 0.0) {
            bad.push("dataset.sample_rate_hz");
        }
        if let Some(t) = self.qc.sqi_threshold {
            if t.is_nan() {
                bad.push("qc.sqi_threshold");
            }
        }
        match (self.qc.sqi_threshold, self.qc.calibrate_to_count) {
            (None, None) | (None, Some(0)) => bad.push("qc.calibrate_to_count"),
            _ => {}
        }
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            bad.push("split.test_fraction");
        }
        if !(self.preprocess.filter.cutoff_hz > 0.0 && self.preprocess.filter.cutoff_hz < self.dataset.sample_rate_hz / 2.0)
        {
            bad.push("preprocess.filter.cutoff_hz");
        }
        if self.preprocess.filter.order == 0 {
            bad.push("preprocess.filter.order");
        }
        if self.features.entropy_bins < 2 {
            bad.push("features.entropy_bins");
        }
        if self.selection.k_neighbors == 0 {
            bad.push("selection.k_neighbors");
        }
        if self.selection.mrmr_bins < 2 {
            bad.push("selection.mrmr_bins");
        }
        if self.model.cv_folds < 2 {
            bad.push("model.cv_folds");
        }
        let g = &self.model.gpr;
        if !(g.signal_var > 0.0) {
            bad.push("model.gpr.signal_var");
        }
        if !(g.noise_var > 0.0) {
            bad.push("model.gpr.noise_var");
        }
        if g.length_scale.is_some_and(|l| !(l > 0.0)) {
            bad.push("model.gpr.length_scale");
        }
        if self.model.forest.n_trees == 0 {
            bad.push("model.forest.n_trees");
        }
        if self.model.forest.min_leaf == 0 {
            bad.push("model.forest.min_leaf");
        }
        if self.tune.budget == 0 {
            bad.push("tune.budget");
        }
        if self.tune.folds < 2 {
            bad.push("tune.folds");
        }
        if self.tune.kernels.is_empty() {
            bad.push("tune.kernels");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.into_iter().map(String::from).collect()))
        }
    }

    /// Dataset inputs must exist before ingestion.
    pub fn check_inputs(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !self.dataset.signal_dir.is_dir() {
            bad.push(format!("dataset.signal_dir ({} not found)", self.dataset.signal_dir.display()));
        }
        if !self.dataset.subject_table.is_file() {
            bad.push(format!("dataset.subject_table ({} not found)", self.dataset.subject_table.display()));
        }
        if let Some(p) = &self.dataset.column_map_file {
            if !p.is_file() {
                bad.push(format!("dataset.column_map_file ({} not found)", p.display()));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }

    /// SHA-256 of the configuration, excluding where outputs are written.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn seeds(&self) -> StageSeeds {
        StageSeeds {
            split: rng::sub_seed(self.seed, 1),
            selection: rng::sub_seed(self.seed, 2),
            cv: rng::sub_seed(self.seed, 3),
            forest: rng::sub_seed(self.seed, 4),
            tune: rng::sub_seed(self.seed, 5),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
[dataset]
signal_dir = "signals"
subject_table = "subjects.csv"
"#;

    #[test]
    fn minimal_file_gets_defaults() {
        let c = PipelineConfig::from_toml_str(MINIMAL, Path::new("/data")).unwrap();
        assert_eq!(c.dataset.signal_dir, PathBuf::from("/data/signals"));
        assert_eq!(c.output_dir, PathBuf::from("/data/out"));
        assert_eq!(c.qc.calibrate_to_count, Some(222));
        assert_eq!(c.split.test_fraction, 0.15);
        assert_eq!(c.model.cv_folds, 10);
        assert_eq!(c.tune.budget, 30);
        assert_eq!(c.selection.relieff_size_sbp, 11);
    }

    #[test]
    fn seed_is_required() {
        let text = MINIMAL.replace("seed = 7", "");
        assert!(PipelineConfig::from_toml_str(&text, Path::new(".")).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\n[qc]\nthreshold = 0.1\n");
        assert!(PipelineConfig::from_toml_str(&text, Path::new(".")).is_err());
    }

    #[test]
    fn validation_lists_every_bad_key() {
        let text = format!("{MINIMAL}\n[split]\ntest_fraction = 1.5\n[model]\ncv_folds = 1\n");
        match PipelineConfig::from_toml_str(&text, Path::new(".")) {
            Err(Error::Config(keys)) => assert_eq!(keys, vec!["split.test_fraction", "model.cv_folds"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip_and_hash() {
        let c = PipelineConfig::from_toml_str(MINIMAL, Path::new("/data")).unwrap();
        let back = PipelineConfig::from_toml_str(&c.to_toml().unwrap(), Path::new("/elsewhere")).unwrap();
        assert_eq!(back, c);
        let mut moved = c.clone();
        moved.output_dir = PathBuf::from("/tmp/other");
        assert_eq!(moved.hash(), c.hash());
        let mut reseeded = c.clone();
        reseeded.seed = 8;
        assert_ne!(reseeded.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn missing_inputs_are_named() {
        let c = PipelineConfig::from_toml_str(MINIMAL, Path::new("/nonexistent")).unwrap();
        match c.check_inputs() {
            Err(Error::Config(keys)) => assert_eq!(keys.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}

//! The 107-entry feature vector of one record.
//!
//! Layout: 1-24 pulse, 25-41 widths, 42-57 derivatives, 58-75 demographics
//! over intervals, 76-91 spectrum, 92-101 statistics, 102-107 demographics.

mod names;
mod spectral;
mod statistical;
mod time;

use serde::{Deserialize, Serialize};

pub use names::{col, index_of, FEATURE_NAMES};
pub use spectral::{band_area, fft_spectrum, frequency_features, spectral_peaks, SpectralConfig, Spectrum};
pub use statistical::{shannon_entropy, spectral_entropy, statistical_features, DEFAULT_ENTROPY_BINS};
pub use time::{
    demographic_time_features, derivative_features, time_domain_features, width_at_fraction, width_features,
};

use crate::dataset::Demographics;
use crate::error::Result;
use crate::fiducials::{FiducialSet, Flag};
use crate::preprocess::CleanSignal;

pub const N_FEATURES: usize = 107;

pub const BLOCK_TIME: &str = "time_domain";
pub const BLOCK_WIDTH: &str = "width";
pub const BLOCK_DERIVATIVE: &str = "derivative";
pub const BLOCK_DEMOGRAPHIC_TIME: &str = "demographic_time";
pub const BLOCK_FREQUENCY: &str = "frequency";
pub const BLOCK_STATISTICAL: &str = "statistical";
pub const BLOCK_DEMOGRAPHIC: &str = "demographic";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub spectral: SpectralConfig,
    pub entropy_bins: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            spectral: SpectralConfig::default(),
            entropy_bins: DEFAULT_ENTROPY_BINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// Low-confidence markers from fiducial detection and peak picking.
    pub flags: Vec<Flag>,
}

impl FeatureVector {
    pub fn names() -> &'static [&'static str; N_FEATURES] {
        &FEATURE_NAMES
    }

    /// Value of 1-based feature `number`.
    pub fn get(&self, number: usize) -> f64 {
        self.values[col(number)]
    }
}

/// Features 102-107. Heart rate falls back to `60 / tpp` when the table has none.
pub fn demographic_features(demo: &Demographics, fid: &FiducialSet) -> Result<Vec<f64>> {
    let hr = match demo.heart_rate_bpm {
        Some(hr) => hr,
        None => time::ratio(107, 60.0, fid.tpp_s)?,
    };
    Ok(vec![
        demo.height_cm,
        demo.weight_kg,
        demo.sex.code(),
        demo.age_years,
        demo.bmi_kg_m2,
        hr,
    ])
}

pub fn assemble_features(
    clean: &CleanSignal,
    fid: &FiducialSet,
    demo: &Demographics,
    cfg: &FeatureConfig,
) -> Result<FeatureVector> {
    let s = &clean.samples;
    let spec = fft_spectrum(s, clean.sample_rate_hz);
    let mut values = Vec::with_capacity(N_FEATURES);
    let mut flags = fid.flags.clone();

    values.extend(time_domain_features(fid, s).map_err(|e| e.in_block(BLOCK_TIME))?);
    values.extend(width_features(s, fid).map_err(|e| e.in_block(BLOCK_WIDTH))?);
    values.extend(derivative_features(fid).map_err(|e| e.in_block(BLOCK_DERIVATIVE))?);
    values.extend(demographic_time_features(fid, demo).map_err(|e| e.in_block(BLOCK_DEMOGRAPHIC_TIME))?);
    let (freq, flag) = frequency_features(&spec, &cfg.spectral).map_err(|e| e.in_block(BLOCK_FREQUENCY))?;
    values.extend(freq);
    flags.extend(flag);
    values.extend(statistical_features(s, &spec, cfg.entropy_bins).map_err(|e| e.in_block(BLOCK_STATISTICAL))?);
    values.extend(demographic_features(demo, fid).map_err(|e| e.in_block(BLOCK_DEMOGRAPHIC))?);

    debug_assert_eq!(values.len(), N_FEATURES);
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(time::degenerate(k + 1).in_block(block_of(k + 1)));
    }
    flags.sort_unstable();
    flags.dedup();
    Ok(FeatureVector { values, flags })
}

/// Name of the block that produces 1-based feature `number`.
pub fn block_of(number: usize) -> &'static str {
    match number {
        1..=24 => BLOCK_TIME,
        25..=41 => BLOCK_WIDTH,
        42..=57 => BLOCK_DERIVATIVE,
        58..=75 => BLOCK_DEMOGRAPHIC_TIME,
        76..=91 => BLOCK_FREQUENCY,
        92..=101 => BLOCK_STATISTICAL,
        _ => BLOCK_DEMOGRAPHIC,
    }
}

/// Features that are pure ratios of amplitudes or of times, so they do not
/// change when the signal is multiplied by a positive constant.
pub const AMPLITUDE_INVARIANT: &[usize] = &[
    11, 12, 13, 16, 17, 18, 19, 20, 27, 28, 29, 30, 31, 32, 33, 34, 35, 36, 37, 38, 39, 40, 41, 50, 51, 52, 53, 54,
    55, 56, 57, 84, 85, 86, 87, 88, 98, 99, 100, 101,
];

/// Features measured in seconds.
pub const TIME_VALUED: &[usize] = &[4, 5, 6, 7, 8, 9, 10, 25, 26];

//! Raw segment to clean waveform: z-score, zero-phase Butterworth low-pass,
//! polynomial baseline removal, always in that order.

mod butterworth;
mod detrend;

use serde::{Deserialize, Serialize};

pub use butterworth::{LowpassDesign, Section};
pub use detrend::{detrend_polynomial, orthonormal_basis, polynomial_trend};

use crate::dataset::RawSignal;
use crate::error::{Error, Result};
use crate::stats;

pub const STAGE_ZSCORE: &str = "zscore";
pub const STAGE_FILTER: &str = "butterworth_zero_phase";
pub const STAGE_DETREND: &str = "poly_detrend";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanSignal {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    pub provenance: Vec<String>,
}

impl CleanSignal {
    /// Wraps already-clean samples (fixtures, replays) without running any stage.
    pub fn from_samples(samples: Vec<f64>, sample_rate_hz: f64) -> Self {
        Self {
            samples,
            sample_rate_hz,
            provenance: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub enabled: bool,
    pub order: usize,
    pub cutoff_hz: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            order: 6,
            cutoff_hz: 25.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetrendConfig {
    pub enabled: bool,
    pub degree: usize,
}

impl Default for DetrendConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            degree: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub zscore: bool,
    pub filter: FilterConfig,
    pub detrend: DetrendConfig,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            zscore: true,
            filter: FilterConfig::default(),
            detrend: DetrendConfig::default(),
        }
    }
}

/// `(x - mean) / sample_std`.
pub fn zscore_normalize(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.len() < 2 {
        return Err(Error::Length {
            needed: 2,
            got: samples.len(),
        });
    }
    let mean = stats::mean(samples);
    let sd = stats::sample_std(samples);
    let scale = samples.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(sd > scale * 1e-12) {
        return Err(Error::DegenerateSignal("zero standard deviation".into()));
    }
    Ok(samples.iter().map(|v| (v - mean) / sd).collect())
}

pub fn lowpass_zero_phase(samples: &[f64], sample_rate_hz: f64, order: usize, cutoff_hz: f64) -> Result<Vec<f64>> {
    LowpassDesign::new(order, cutoff_hz, sample_rate_hz)?.filtfilt(samples)
}

pub fn preprocess(raw: &RawSignal, config: &PreprocessConfig) -> Result<CleanSignal> {
    if !(raw.sample_rate_hz > 0.0) {
        return Err(Error::Argument(format!("sample rate must be > 0, got {}", raw.sample_rate_hz)));
    }
    let mut samples = raw.samples.clone();
    let mut provenance = Vec::new();
    if config.zscore {
        samples = zscore_normalize(&samples).map_err(|e| e.in_stage(STAGE_ZSCORE))?;
        provenance.push(STAGE_ZSCORE.to_string());
    }
    if config.filter.enabled {
        samples = lowpass_zero_phase(&samples, raw.sample_rate_hz, config.filter.order, config.filter.cutoff_hz)
            .map_err(|e| e.in_stage(STAGE_FILTER))?;
        provenance.push(STAGE_FILTER.to_string());
    }
    if config.detrend.enabled {
        samples = detrend_polynomial(&samples, config.detrend.degree).map_err(|e| e.in_stage(STAGE_DETREND))?;
        provenance.push(STAGE_DETREND.to_string());
    }
    Ok(CleanSignal {
        samples,
        sample_rate_hz: raw.sample_rate_hz,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn raw(samples: Vec<f64>) -> RawSignal {
        RawSignal {
            samples,
            sample_rate_hz: 1000.0,
            subject_id: "1".into(),
            segment_id: 1,
        }
    }

    #[test]
    fn zscore_two_points() {
        let z = zscore_normalize(&[-1.0, 1.0]).unwrap();
        assert!((z[0] + 0.5f64.sqrt()).abs() < 1e-12);
        assert!((z[1] - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(matches!(zscore_normalize(&[3.0, 3.0, 3.0]), Err(Error::DegenerateSignal(_))));
    }

    #[test]
    fn zscore_is_idempotent() {
        let x: Vec<f64> = (0..300).map(|i| (i as f64 * 0.37).sin() + 0.01 * i as f64).collect();
        let z = zscore_normalize(&x).unwrap();
        assert!(stats::mean(&z).abs() < 1e-12);
        assert!((stats::sample_std(&z) - 1.0).abs() < 1e-12);
        let zz = zscore_normalize(&z).unwrap();
        for (a, b) in z.iter().zip(&zz) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_survives_filter() {
        let y = lowpass_zero_phase(&[2.5; 500], 1000.0, 6, 25.0).unwrap();
        assert!(y.iter().all(|v| (v - 2.5).abs() < 1e-9));
    }

    #[test]
    fn filter_rejects_short_input() {
        assert!(matches!(
            lowpass_zero_phase(&[1.0; 21], 1000.0, 6, 25.0),
            Err(Error::Length { needed: 22, .. })
        ));
    }

    #[test]
    fn pipeline_provenance_and_moments() {
        let x: Vec<f64> = (0..2100)
            .map(|i| {
                let t = i as f64 / 1000.0;
                500.0 + 80.0 * (2.0 * PI * 1.2 * t).sin() + 30.0 * (2.0 * PI * 2.4 * t).sin() + 40.0 * t
            })
            .collect();
        let clean = preprocess(&raw(x), &PreprocessConfig::default()).unwrap();
        assert_eq!(clean.provenance, vec![STAGE_ZSCORE, STAGE_FILTER, STAGE_DETREND]);
        assert_eq!(clean.samples.len(), 2100);
        assert!(stats::mean(&clean.samples).abs() < 1e-6);
        assert!((stats::sample_std(&clean.samples) - 1.0).abs() < 0.25);
    }

    #[test]
    fn constant_raw_fails_in_zscore_stage() {
        match preprocess(&raw(vec![7.0; 2100]), &PreprocessConfig::default()) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, STAGE_ZSCORE),
            other => panic!("expected stage error, got {other:?}"),
        }
    }

    #[test]
    fn drift_is_removed() {
        let x: Vec<f64> = (0..2100)
            .map(|i| {
                let t = i as f64 / 1000.0;
                (2.0 * PI * 1.3 * t).sin() + 3.0 * t
            })
            .collect();
        let clean = preprocess(&raw(x), &PreprocessConfig::default()).unwrap();
        let trend = polynomial_trend(&clean.samples, 4).unwrap();
        let max = trend.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(max < 0.05, "residual trend {max}");
    }

    #[test]
    fn sinusoid_plus_ramp_loses_the_ramp() {
        let n = 2100;
        let ramp: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * 1.7 * i as f64 / 1000.0).sin() + 5.0 * ramp[i])
            .collect();
        let r = detrend_polynomial(&x, 4).unwrap();
        // Residual of a projection is orthogonal to every basis polynomial, the ramp included.
        let corr = stats::pearson(&r, &ramp);
        assert!(corr.abs() < 1e-6, "corr {corr}");
    }

    proptest! {
        #[test]
        fn detrend_idempotent(xs in proptest::collection::vec(-5.0f64..5.0, 10..400)) {
            let once = detrend_polynomial(&xs, 4).unwrap();
            let twice = detrend_polynomial(&once, 4).unwrap();
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn stages_preserve_length(n in 30usize..600) {
            let x: Vec<f64> = (0..n).map(|i| ((i * 31 % 17) as f64).sin() + i as f64 * 0.01).collect();
            prop_assert_eq!(lowpass_zero_phase(&x, 1000.0, 6, 25.0).unwrap().len(), n);
            prop_assert_eq!(detrend_polynomial(&x, 4).unwrap().len(), n);
            prop_assert_eq!(zscore_normalize(&x).unwrap().len(), n);
        }
    }
}

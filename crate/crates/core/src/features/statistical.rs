//! Features 92-101, computed over the whole clean segment.

use crate::error::{Error, Result};
use crate::stats;

use super::spectral::Spectrum;

pub const DEFAULT_ENTROPY_BINS: usize = 16;

/// Base-2 entropy of a histogram with `bins` equal-width bins over `[min, max]`.
/// A constant input puts everything in one bin, giving 0.
pub fn shannon_entropy(samples: &[f64], bins: usize) -> f64 {
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) || bins < 2 {
        return 0.0;
    }
    let mut counts = vec![0usize; bins];
    let width = hi - lo;
    for &v in samples {
        let k = (((v - lo) / width) * bins as f64).floor() as usize;
        counts[k.min(bins - 1)] += 1;
    }
    entropy_bits(counts.iter().map(|&c| c as f64))
}

fn entropy_bits(weights: impl Iterator<Item = f64> + Clone) -> f64 {
    let total: f64 = weights.clone().sum();
    if !(total > 0.0) {
        return 0.0;
    }
    -weights
        .filter(|&w| w > 0.0)
        .map(|w| {
            let p = w / total;
            p * p.log2()
        })
        .sum::<f64>()
}

/// Entropy of the normalized power spectrum divided by `log2` of its bin count.
pub fn spectral_entropy(spec: &Spectrum) -> f64 {
    let n = spec.magnitude.len();
    if n < 2 {
        return 0.0;
    }
    entropy_bits(spec.magnitude.iter().map(|m| m * m)) / (n as f64).log2()
}

/// Mean, median, std, 75th percentile, mean absolute deviation, IQR,
/// skewness, excess kurtosis, Shannon entropy, spectral entropy.
pub fn statistical_features(samples: &[f64], spec: &Spectrum, entropy_bins: usize) -> Result<Vec<f64>> {
    if samples.len() < 8 {
        return Err(Error::Length {
            needed: 8,
            got: samples.len(),
        });
    }
    let mean = stats::mean(samples);
    let sd = stats::sample_std(samples);
    let scale = samples.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(sd > scale * 1e-12) {
        return Err(Error::DegenerateSignal("statistical features need nonzero spread".into()));
    }
    let sorted = stats::sorted(samples);
    let q1 = stats::percentile_sorted(&sorted, 0.25);
    let q3 = stats::percentile_sorted(&sorted, 0.75);
    let mad = samples.iter().map(|v| (v - mean).abs()).sum::<f64>() / samples.len() as f64;
    Ok(vec![
        mean,
        stats::percentile_sorted(&sorted, 0.5),
        sd,
        q3,
        mad,
        q3 - q1,
        stats::skewness(samples),
        stats::excess_kurtosis(samples),
        shannon_entropy(samples, entropy_bins),
        spectral_entropy(spec),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::spectral::fft_spectrum;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn small_vector_by_hand() {
        let x = [1.0, 2.0, 3.0, 4.0, 1.0, 2.0, 3.0, 4.0];
        let v = statistical_features(&x, &fft_spectrum(&x, 1000.0), 16).unwrap();
        assert_eq!(v[0], 2.5);
        assert_eq!(v[1], 2.5);
        assert_eq!(v[4], 1.0);
        // Type 7 quartiles of 1,1,2,2,3,3,4,4: 1.75 and 3.25.
        assert!((v[3] - 3.25).abs() < 1e-12);
        assert!((v[5] - 1.5).abs() < 1e-12);
        assert!(v[6].abs() < 1e-12);
    }

    #[test]
    fn uniform_occupancy_has_four_bits() {
        let x: Vec<f64> = (0..160).map(|i| (i / 10) as f64 + 0.5 * (i % 2) as f64 * 0.1).collect();
        assert!((shannon_entropy(&x, 16) - 4.0).abs() < 1e-12);
        assert_eq!(shannon_entropy(&[2.0; 30], 16), 0.0);
    }

    #[test]
    fn constant_signal_is_degenerate() {
        let x = [5.0; 64];
        assert!(matches!(
            statistical_features(&x, &fft_spectrum(&x, 1000.0), 16),
            Err(Error::DegenerateSignal(_))
        ));
    }

    #[test]
    fn gaussian_moments() {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..2100).map(|_| StandardNormal.sample(&mut r)).collect();
        let v = statistical_features(&x, &fft_spectrum(&x, 1000.0), 16).unwrap();
        assert!(v[6].abs() < 0.15, "skew {}", v[6]);
        assert!(v[7].abs() < 0.3, "kurt {}", v[7]);
        // White noise spreads power over all bins.
        assert!(v[9] > 0.8 && v[9] <= 1.0);
    }

    #[test]
    fn pure_tone_has_low_spectral_entropy() {
        let x: Vec<f64> = (0..2100).map(|i| (2.0 * std::f64::consts::PI * 10.0 * i as f64 / 2100.0).sin()).collect();
        assert!(spectral_entropy(&fft_spectrum(&x, 1000.0)) < 0.05);
    }
}

//! One-sided FFT magnitude spectrum and features 76-91.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fiducials::{local_maxima, prominence, Flag};

use super::time::{degenerate, ratio};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub freqs_hz: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub n_fft: usize,
}

impl Spectrum {
    pub fn bin_width_hz(&self) -> f64 {
        if self.freqs_hz.len() < 2 {
            0.0
        } else {
            self.freqs_hz[1]
        }
    }

    /// Squared magnitude per one-sided bin.
    pub fn power(&self) -> Vec<f64> {
        self.magnitude.iter().map(|m| m * m).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralConfig {
    /// Upper edge of the band searched for the three spectral peaks.
    pub peak_band_hz: f64,
    /// Minimum peak prominence relative to the largest non-DC magnitude.
    pub peak_prominence_frac: f64,
    /// Half-width, in bins, of the band around f_max counted for feature 91.
    pub energy_half_width_bins: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            peak_band_hz: 10.0,
            peak_prominence_frac: 0.01,
            energy_half_width_bins: 1,
        }
    }
}

/// |DFT| at bins `0..=n/2` with `n_fft` equal to the signal length.
pub fn fft_spectrum(samples: &[f64], sample_rate_hz: f64) -> Spectrum {
    let n = samples.len();
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
    if n > 0 {
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    }
    let bins = n / 2 + 1;
    Spectrum {
        freqs_hz: (0..bins).map(|k| k as f64 * sample_rate_hz / n as f64).collect(),
        magnitude: buf.iter().take(bins).map(|c| c.norm()).collect(),
        n_fft: n,
    }
}

/// Trapezoid area of the magnitude over `[lo, hi]` Hz, interpolating linearly at the band edges.
pub fn band_area(spec: &Spectrum, lo: f64, hi: f64) -> f64 {
    let f = &spec.freqs_hz;
    let m = &spec.magnitude;
    let at = |x: f64| {
        let k = f.partition_point(|&v| v <= x).clamp(1, f.len() - 1);
        let (f0, f1) = (f[k - 1], f[k]);
        m[k - 1] + (m[k] - m[k - 1]) * (x - f0) / (f1 - f0)
    };
    let mut pts: Vec<(f64, f64)> = vec![(lo, at(lo))];
    pts.extend(f.iter().zip(m).filter(|(v, _)| **v > lo && **v < hi).map(|(v, a)| (*v, *a)));
    pts.push((hi, at(hi)));
    pts.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum()
}

/// Up to three tallest prominent local maxima in `(0, band]` Hz, ordered by frequency.
pub fn spectral_peaks(spec: &Spectrum, cfg: &SpectralConfig) -> Vec<usize> {
    let m = &spec.magnitude;
    let global = m.iter().skip(1).fold(0.0f64, |a, &v| a.max(v));
    let mut peaks: Vec<usize> = local_maxima(m)
        .into_iter()
        .filter(|&k| k > 0 && spec.freqs_hz[k] <= cfg.peak_band_hz)
        .filter(|&k| prominence(m, k) >= cfg.peak_prominence_frac * global)
        .collect();
    peaks.sort_by(|&a, &b| m[b].total_cmp(&m[a]).then(a.cmp(&b)));
    peaks.truncate(3);
    peaks.sort_unstable();
    peaks
}

/// Features 76-91, plus [`Flag::PeakDeficit`] when fewer than three peaks exist.
pub fn frequency_features(spec: &Spectrum, cfg: &SpectralConfig) -> Result<(Vec<f64>, Option<Flag>)> {
    if spec.magnitude.len() < 3 {
        return Err(degenerate(76));
    }
    let mut peaks = spectral_peaks(spec, cfg);
    let flag = (peaks.len() < 3).then_some(Flag::PeakDeficit);
    let Some(&last) = peaks.last() else {
        return Err(degenerate(76));
    };
    peaks.resize(3, last);
    let (m, f) = (&spec.magnitude, &spec.freqs_hz);
    let amp = [m[peaks[0]], m[peaks[1]], m[peaks[2]]];
    let freq = [f[peaks[0]], f[peaks[1]], f[peaks[2]]];
    let a02 = band_area(spec, 0.0, 2.0);
    let a25 = band_area(spec, 2.0, 5.0);

    let kmax = 1 + crate::stats::argmax(&m[1..]);
    let power = spec.power();
    let total: f64 = power.iter().sum();
    let w = cfg.energy_half_width_bins;
    let near: f64 = power[kmax.saturating_sub(w)..=(kmax + w).min(power.len() - 1)].iter().sum();

    let values = vec![
        amp[0],
        amp[1],
        amp[2],
        freq[0],
        freq[1],
        freq[2],
        a02,
        a25,
        ratio(84, a02, a25)?,
        ratio(85, amp[0], amp[1])?,
        ratio(86, amp[0], amp[2])?,
        ratio(87, freq[0], freq[1])?,
        ratio(88, freq[0], freq[2])?,
        f[kmax],
        m[kmax],
        ratio(91, near, total)?,
    ];
    Ok((values, flag))
}

//! Butterworth low-pass design as cascaded second-order sections and
//! forward-backward (zero-phase) application.
//!
//! Poles of the analog prototype sit at angles `(2k + 1) pi / (2N)` from the
//! imaginary axis. Each conjugate pair becomes one biquad after the bilinear
//! transform with the cutoff pre-warped to `tan(pi fc / fs)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// One biquad, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Section {
    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// Direct-form II transposed state after an infinitely long unit step.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        [g - self.b[0], self.b[2] - self.a[2] * g]
    }

    /// Complex frequency response at normalized angular frequency `w` (rad/sample).
    pub fn magnitude(&self, w: f64) -> f64 {
        let eval = |c: &[f64; 3]| {
            let re = c[0] + c[1] * w.cos() + c[2] * (2.0 * w).cos();
            let im = -(c[1] * w.sin() + c[2] * (2.0 * w).sin());
            (re * re + im * im).sqrt()
        };
        eval(&self.b) / eval(&self.a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowpassDesign {
    pub order: usize,
    pub sections: Vec<Section>,
}

impl LowpassDesign {
    pub fn new(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::Argument("filter order must be positive".into()));
        }
        if !(sample_rate_hz > 0.0) {
            return Err(Error::Argument(format!("sample rate must be > 0, got {sample_rate_hz}")));
        }
        let nyquist = sample_rate_hz / 2.0;
        if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
            return Err(Error::Argument(format!(
                "cutoff {cutoff_hz} Hz must lie in (0, {nyquist}) Hz"
            )));
        }
        let wc = (PI * cutoff_hz / sample_rate_hz).tan();
        let wc2 = wc * wc;
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for k in 0..order / 2 {
            let damping = (PI * (2 * k + 1) as f64 / (2 * order) as f64).sin();
            let a0 = 1.0 + 2.0 * damping * wc + wc2;
            sections.push(Section {
                b: [wc2 / a0, 2.0 * wc2 / a0, wc2 / a0],
                a: [1.0, (2.0 * wc2 - 2.0) / a0, (1.0 - 2.0 * damping * wc + wc2) / a0],
            });
        }
        if order % 2 == 1 {
            let a0 = 1.0 + wc;
            sections.push(Section {
                b: [wc / a0, wc / a0, 0.0],
                a: [1.0, (wc - 1.0) / a0, 0.0],
            });
        }
        Ok(Self { order, sections })
    }

    /// Single-pass magnitude response at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / sample_rate_hz;
        self.sections.iter().map(|s| s.magnitude(w)).product()
    }

    /// Minimum edge padding accepted by [`Self::filtfilt`].
    pub fn min_pad_len(&self) -> usize {
        3 * (self.order + 1)
    }

    /// Largest pole radius over all sections.
    pub fn max_pole_radius(&self) -> f64 {
        self.sections
            .iter()
            .map(|s| {
                let (a1, a2) = (s.a[1], s.a[2]);
                let disc = a1 * a1 - 4.0 * a2;
                if disc < 0.0 {
                    a2.sqrt()
                } else {
                    ((-a1).abs() + disc.sqrt()) / 2.0
                }
            })
            .fold(0.0, f64::max)
    }

    /// Samples for the slowest mode to decay by 1e-14: past this many samples
    /// the start-up state no longer shows in the output.
    pub fn settle_len(&self) -> usize {
        let r = self.max_pole_radius();
        if r <= 0.0 {
            return 1;
        }
        (1e-14f64.ln() / r.ln()).ceil() as usize
    }

    /// Edge padding used for a signal of `n` samples: long enough for the
    /// start-up transient to vanish, never shorter than `3 (order + 1)` and
    /// never longer than `n - 1`.
    pub fn pad_len(&self, n: usize) -> usize {
        self.settle_len().max(self.min_pad_len()).min(n.saturating_sub(1))
    }

    /// Causal filtering starting from the steady state of a constant input equal to `x[0]`.
    pub fn filter_from_steady_state(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let mut level = x.first().copied().unwrap_or(0.0);
        for s in &self.sections {
            let zi = s.step_state();
            let mut z = [zi[0] * level, zi[1] * level];
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z[0];
                z[0] = s.b[1] * input - s.a[1] * out + z[1];
                z[1] = s.b[2] * input - s.a[2] * out;
                *v = out;
            }
            level *= s.dc_gain();
        }
        y
    }

    /// Zero-phase forward-backward filtering with odd (reflect-and-negate)
    /// extension at both ends. Output has the input's length. When the signal
    /// is long enough to hold [`Self::settle_len`] of padding, the result is
    /// time-reversal symmetric to rounding error.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = x.len();
        if n <= self.min_pad_len() {
            return Err(Error::Length {
                needed: self.min_pad_len() + 1,
                got: n,
            });
        }
        let pad = self.pad_len(n);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let mut y = self.filter_from_steady_state(&ext);
        y.reverse();
        let mut y = self.filter_from_steady_state(&y);
        y.reverse();
        Ok(y[pad..pad + n].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unity_dc_gain_and_half_power_at_cutoff() {
        let d = LowpassDesign::new(6, 25.0, 1000.0).unwrap();
        assert_eq!(d.sections.len(), 3);
        assert!((d.magnitude(0.0, 1000.0) - 1.0).abs() < 1e-12);
        assert!((d.magnitude(25.0, 1000.0) - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn odd_order_adds_first_order_section() {
        let d = LowpassDesign::new(3, 40.0, 1000.0).unwrap();
        assert_eq!(d.sections.len(), 2);
        assert!((d.magnitude(40.0, 1000.0) - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn rejects_cutoff_at_or_above_nyquist() {
        assert!(LowpassDesign::new(6, 500.0, 1000.0).is_err());
        assert!(LowpassDesign::new(6, 0.0, 1000.0).is_err());
        assert!(LowpassDesign::new(0, 25.0, 1000.0).is_err());
    }

    #[test]
    fn padding_bounds() {
        let d = LowpassDesign::new(6, 25.0, 1000.0).unwrap();
        assert!(d.max_pole_radius() < 1.0);
        assert!(d.settle_len() > d.min_pad_len());
        assert_eq!(d.pad_len(30), 29);
        assert_eq!(d.pad_len(100_000), d.settle_len());
    }

    #[test]
    fn steady_state_start_has_no_transient() {
        let d = LowpassDesign::new(6, 25.0, 1000.0).unwrap();
        let y = d.filter_from_steady_state(&[3.5; 200]);
        assert!(y.iter().all(|v| (v - 3.5).abs() < 1e-12));
    }
}

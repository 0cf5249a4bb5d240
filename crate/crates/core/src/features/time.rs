//! Features 1-75: amplitudes, intervals, widths, derivative landmarks and
//! demographic-over-interval ratios of the selected beat.

use crate::dataset::Demographics;
use crate::error::{Error, Result};
use crate::fiducials::FiducialSet;

use super::names::FEATURE_NAMES;

/// `num / den` for 1-based feature `number`; a zero or non-finite outcome is an error.
pub(crate) fn ratio(number: usize, num: f64, den: f64) -> Result<f64> {
    let v = num / den;
    if den == 0.0 || !v.is_finite() {
        return Err(degenerate(number));
    }
    Ok(v)
}

pub(crate) fn degenerate(number: usize) -> Error {
    Error::DegenerateFeature {
        index: number,
        name: FEATURE_NAMES[number - 1],
    }
}

/// Trapezoid area of `samples[from..=to] - base` with spacing `dt`.
fn area_above(samples: &[f64], from: usize, to: usize, base: f64, dt: f64) -> f64 {
    samples[from..=to]
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1] - 2.0 * base) * dt)
        .sum()
}

fn check_beat(samples: &[f64], fid: &FiducialSet) -> Result<()> {
    if fid.beat_end_idx >= samples.len() || fid.dia_idx > fid.beat_end_idx {
        return Err(Error::Geometry(format!(
            "beat end {} outside signal of {} samples",
            fid.beat_end_idx,
            samples.len()
        )));
    }
    fid.check_invariants()
}

/// Features 1-24.
pub fn time_domain_features(fid: &FiducialSet, samples: &[f64]) -> Result<Vec<f64>> {
    check_beat(samples, fid)?;
    let (x, y, z) = (fid.x, fid.y, fid.z);
    let (t1, t2, t3, tpi, tpp) = (fid.t1_s, fid.t2_s, fid.t3_s, fid.tpi_s, fid.tpp_s);
    let dt = t3 - t1;
    let step = 1.0 / fid.sample_rate_hz;
    let a1 = area_above(samples, fid.foot_idx, fid.notch_idx, fid.foot_amplitude, step);
    let a2 = area_above(samples, fid.notch_idx, fid.beat_end_idx, fid.foot_amplitude, step);
    Ok(vec![
        x,
        y,
        z,
        t1,
        t2,
        t3,
        dt,
        tpi,
        tpp,
        width_at_fraction(samples, fid, 0.5)?,
        ratio(11, a1, a2)?,
        ratio(12, y, x)?,
        ratio(13, x - y, x)?,
        ratio(14, t1, x)?,
        ratio(15, y, tpi - t3)?,
        ratio(16, t1, tpp)?,
        ratio(17, t2, tpp)?,
        ratio(18, t3, tpp)?,
        ratio(19, dt, tpp)?,
        ratio(20, z, x)?,
        ratio(21, t2, z)?,
        ratio(22, t3, y)?,
        ratio(23, x, tpi - t1)?,
        ratio(24, z, tpi - t2)?,
    ])
}

/// Time between the first upstroke crossing and the last downstroke crossing
/// of `foot + fraction * x` inside the beat, interpolated between samples.
pub fn width_at_fraction(samples: &[f64], fid: &FiducialSet, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Argument(format!("width fraction must lie in (0, 1), got {fraction}")));
    }
    let level = fid.foot_amplitude + fraction * fid.x;
    let end = fid.beat_end_idx.min(samples.len() - 1);
    let cross = |i: usize| {
        let (a, b) = (samples[i], samples[i + 1]);
        i as f64 + (level - a) / (b - a)
    };
    let rise = (fid.foot_idx..fid.sys_idx)
        .find(|&i| samples[i] < level && samples[i + 1] >= level)
        .map(cross);
    let fall = (fid.sys_idx..end)
        .rev()
        .find(|&i| samples[i] >= level && samples[i + 1] < level)
        .map(cross);
    match (rise, fall) {
        (Some(r), Some(f)) if f > r => Ok((f - r) / fid.sample_rate_hz),
        _ => Err(Error::Geometry(format!(
            "level at {:.0}% of the systolic amplitude is not crossed on both flanks",
            fraction * 100.0
        ))),
    }
}

/// Features 25-41.
pub fn width_features(samples: &[f64], fid: &FiducialSet) -> Result<Vec<f64>> {
    check_beat(samples, fid)?;
    let w25 = width_at_fraction(samples, fid, 0.25)?;
    let w50 = width_at_fraction(samples, fid, 0.5)?;
    let w75 = width_at_fraction(samples, fid, 0.75)?;
    let denominators = [fid.t1_s, fid.t2_s, fid.t3_s, fid.delta_t_s(), fid.tpi_s];
    let mut out = vec![w25, w75];
    for (block, w) in [w25, w50, w75].into_iter().enumerate() {
        for (k, d) in denominators.iter().enumerate() {
            out.push(ratio(27 + block * 5 + k, w, *d)?);
        }
    }
    Ok(out)
}

/// Features 42-57.
pub fn derivative_features(fid: &FiducialSet) -> Result<Vec<f64>> {
    let tpp = fid.tpp_s;
    Ok(vec![
        fid.a1,
        fid.ta1_s,
        fid.a2,
        fid.ta2_s,
        fid.b1,
        fid.tb1_s,
        fid.b2,
        fid.tb2_s,
        ratio(50, fid.b2, fid.a2)?,
        ratio(51, fid.b1, fid.a1)?,
        ratio(52, fid.ta1_s, tpp)?,
        ratio(53, fid.tb1_s, tpp)?,
        ratio(54, fid.tb2_s, tpp)?,
        ratio(55, fid.ta2_s, tpp)?,
        ratio(56, fid.ta1_s - fid.ta2_s, tpp)?,
        ratio(57, fid.tb1_s - fid.tb2_s, tpp)?,
    ])
}

/// Features 58-75: height, weight and BMI over ΔT, t1, t2, t3, tpi, tpp.
pub fn demographic_time_features(fid: &FiducialSet, demo: &Demographics) -> Result<Vec<f64>> {
    let intervals = [fid.delta_t_s(), fid.t1_s, fid.t2_s, fid.t3_s, fid.tpi_s, fid.tpp_s];
    let body = [demo.height_cm, demo.weight_kg, demo.bmi_kg_m2];
    let mut out = Vec::with_capacity(18);
    for (k, t) in intervals.iter().enumerate() {
        for (j, b) in body.iter().enumerate() {
            let number = 58 + 3 * k + j;
            if !(*t > 0.0) {
                return Err(degenerate(number));
            }
            out.push(ratio(number, *b, *t)?);
        }
    }
    Ok(out)
}

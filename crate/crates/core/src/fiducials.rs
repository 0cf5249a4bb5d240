//! Per-beat landmarks on a clean PPG segment and its first two derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::CleanSignal;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FiducialConfig {
    /// Centered moving-average length applied to the APG.
    pub apg_ma_ms: f64,
    /// Threshold = mean + k * std of the smoothed APG over the lookback window.
    pub foot_threshold_k: f64,
    pub foot_lookback_s: f64,
    /// Window searched for the signal minimum when the APG zone is empty.
    pub foot_fallback_s: f64,
    pub notch_window_ms: f64,
    pub min_peak_distance_s: f64,
    /// Peaks below this fraction of the largest prominence are ignored.
    pub peak_prominence_frac: f64,
}

impl Default for FiducialConfig {
    fn default() -> Self {
        Self {
            apg_ma_ms: 25.0,
            foot_threshold_k: 0.5,
            foot_lookback_s: 0.5,
            foot_fallback_s: 0.4,
            notch_window_ms: 50.0,
            min_peak_distance_s: 0.33,
            peak_prominence_frac: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    FootFallback,
    FootAtEdge,
    PulseEndFallback,
    TppFallback,
    NotchLowConfidence,
    DiastolicInflection,
    DerivativeFallback,
    PeakDeficit,
    AllBeatsFlagged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativePair {
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiducialSet {
    pub sample_rate_hz: f64,
    /// Position of the chosen beat among the detected systolic peaks.
    pub beat: usize,
    pub n_peaks: usize,
    pub foot_idx: usize,
    pub sys_idx: usize,
    pub notch_idx: usize,
    pub dia_idx: usize,
    pub beat_end_idx: usize,
    pub next_sys_idx: Option<usize>,
    pub foot_amplitude: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub t1_s: f64,
    pub t2_s: f64,
    pub t3_s: f64,
    pub tpi_s: f64,
    pub tpp_s: f64,
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub ta1_s: f64,
    pub tb1_s: f64,
    pub ta2_s: f64,
    pub tb2_s: f64,
    pub flags: Vec<Flag>,
}

impl FiducialSet {
    pub fn delta_t_s(&self) -> f64 {
        self.t3_s - self.t1_s
    }

    /// Checks the ordering and amplitude relations every beat must satisfy.
    pub fn check_invariants(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Geometry(m.to_string()));
        if !(self.foot_idx < self.sys_idx && self.sys_idx < self.notch_idx && self.notch_idx < self.dia_idx) {
            return bad("landmarks out of order");
        }
        if !(0.0 < self.t1_s && self.t1_s < self.t2_s && self.t2_s < self.t3_s && self.t3_s < self.tpi_s) {
            return bad("landmark times out of order");
        }
        if !(self.x >= self.z && self.x >= self.y) {
            return bad("systolic peak is not the beat maximum");
        }
        if !(self.ta1_s < self.tb1_s && self.ta2_s < self.tb2_s) {
            return bad("derivative landmarks out of order");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Min,
    Max,
}

/// Central differences scaled by the sample rate; second-order one-sided at the ends.
pub fn differentiate(samples: &[f64], sample_rate_hz: f64) -> Result<DerivativePair> {
    if samples.len() < 5 {
        return Err(Error::Length {
            needed: 5,
            got: samples.len(),
        });
    }
    let d1 = gradient(samples, sample_rate_hz);
    let d2 = gradient(&d1, sample_rate_hz);
    Ok(DerivativePair { d1, d2 })
}

fn gradient(x: &[f64], fs: f64) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (x[i + 1] - x[i - 1]) * 0.5 * fs;
    }
    d[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) * 0.5 * fs;
    d[n - 1] = (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) * 0.5 * fs;
    d
}

/// Local maxima; a flat top reports its middle sample.
pub fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut peaks = Vec::new();
    let n = x.len();
    let mut i = 1;
    while i + 1 < n {
        if x[i] > x[i - 1] {
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                peaks.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Height of a peak above the higher of its two bases, where each base is the
/// lowest point before the signal climbs above the peak again (or ends).
pub fn prominence(x: &[f64], peak: usize) -> f64 {
    let h = x[peak];
    let mut left_min = h;
    for i in (0..peak).rev() {
        if x[i] > h {
            break;
        }
        left_min = left_min.min(x[i]);
    }
    let mut right_min = h;
    for &v in &x[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

fn samples_for(seconds: f64, fs: f64) -> usize {
    (seconds * fs).round().max(0.0) as usize
}

pub fn detect_systolic_peaks(samples: &[f64], sample_rate_hz: f64) -> Result<Vec<usize>> {
    detect_systolic_peaks_with(samples, sample_rate_hz, &FiducialConfig::default())
}

pub fn detect_systolic_peaks_with(samples: &[f64], sample_rate_hz: f64, cfg: &FiducialConfig) -> Result<Vec<usize>> {
    let candidates: Vec<(usize, f64)> = local_maxima(samples)
        .into_iter()
        .map(|p| (p, prominence(samples, p)))
        .collect();
    let top = candidates.iter().map(|c| c.1).fold(0.0f64, f64::max);
    if !(top > 0.0) {
        return Err(Error::NoBeat("no local maximum in signal".into()));
    }
    let mut strong: Vec<usize> = candidates
        .iter()
        .filter(|c| c.1 >= cfg.peak_prominence_frac * top)
        .map(|c| c.0)
        .collect();
    // Tallest first, earlier index on ties, so suppression is order-independent.
    strong.sort_by(|&a, &b| samples[b].total_cmp(&samples[a]).then(a.cmp(&b)));
    let floor = samples_for(cfg.min_peak_distance_s, sample_rate_hz);
    // Half the dominant beat period keeps a tall reflected wave from passing
    // as its own beat when the rhythm is slow.
    let distance = dominant_period(samples, floor).map_or(floor, |p| floor.max(p / 2));
    let mut kept: Vec<usize> = Vec::new();
    for p in strong {
        if kept.iter().all(|&k| k.abs_diff(p) >= distance) {
            kept.push(p);
        }
    }
    kept.sort_unstable();
    Ok(kept)
}

/// Beat period in samples: the first autocorrelation peak beyond `min_lag`
/// that reaches 70% of the largest one. Lags up to 3/4 of the length are
/// searched, using the unbiased (overlap-normalized) estimate.
pub fn dominant_period(samples: &[f64], min_lag: usize) -> Option<usize> {
    let n = samples.len();
    let max_lag = n * 3 / 4;
    if min_lag + 2 >= max_lag {
        return None;
    }
    let m = stats::mean(samples);
    let x: Vec<f64> = samples.iter().map(|v| v - m).collect();
    let r: Vec<f64> = (min_lag..=max_lag)
        .map(|l| x[..n - l].iter().zip(&x[l..]).map(|(a, b)| a * b).sum::<f64>() / (n - l) as f64)
        .collect();
    let peaks = local_maxima(&r);
    let top = peaks.iter().map(|&i| r[i]).fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) {
        return None;
    }
    peaks.into_iter().find(|&i| r[i] >= 0.7 * top).map(|i| i + min_lag)
}

/// Centered moving average; the window shrinks at the edges.
pub fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Foot {
    pub idx: usize,
    pub flag: Option<Flag>,
}

pub fn detect_foot(samples: &[f64], apg: &[f64], sample_rate_hz: f64, sys_idx: usize) -> Result<Foot> {
    let cfg = FiducialConfig::default();
    let ma = moving_average(apg, samples_for(cfg.apg_ma_ms / 1000.0, sample_rate_hz).max(1));
    detect_foot_with(samples, apg, &ma, sample_rate_hz, sys_idx, &cfg)
}

/// Foot from a precomputed smoothed APG `apg_ma`.
pub fn detect_foot_with(
    samples: &[f64],
    apg: &[f64],
    apg_ma: &[f64],
    sample_rate_hz: f64,
    sys_idx: usize,
    cfg: &FiducialConfig,
) -> Result<Foot> {
    if sys_idx == 0 || sys_idx >= samples.len() || apg.len() != samples.len() || apg_ma.len() != samples.len() {
        return Err(Error::Argument(format!(
            "foot search needs 0 < sys_idx < {} with aligned APG",
            samples.len()
        )));
    }
    let start = sys_idx.saturating_sub(samples_for(cfg.foot_lookback_s, sample_rate_hz));
    let window = &apg_ma[start..sys_idx];
    let threshold = stats::mean(window) + cfg.foot_threshold_k * population_std(window);

    // Last run above threshold before the peak.
    let mut end = None;
    for i in (start..sys_idx).rev() {
        if apg_ma[i] > threshold {
            end = Some(i);
            break;
        }
    }
    if let Some(end) = end {
        let mut begin = end;
        while begin > start && apg_ma[begin - 1] > threshold {
            begin -= 1;
        }
        let idx = begin + stats::argmax(&apg[begin..=end]);
        let flag = (begin == 0).then_some(Flag::FootAtEdge);
        return Ok(Foot { idx, flag });
    }
    let lo = sys_idx.saturating_sub(samples_for(cfg.foot_fallback_s, sample_rate_hz));
    Ok(Foot {
        idx: lo + stats::argmin(&samples[lo..sys_idx]),
        flag: Some(Flag::FootFallback),
    })
}

fn population_std(x: &[f64]) -> f64 {
    stats::central_moment(x, 2).sqrt()
}

/// Extremum of `mode` within `idx ± window_ms / 2`, clamped to the signal.
/// Starts from `idx` and only moves on a strict improvement.
pub fn fix_index(samples: &[f64], idx: usize, window_ms: f64, mode: Extremum, sample_rate_hz: f64) -> usize {
    let half = samples_for(window_ms / 2000.0, sample_rate_hz);
    let lo = idx.saturating_sub(half);
    let hi = (idx + half).min(samples.len() - 1);
    extremum_in(samples, idx, lo, hi, mode)
}

fn extremum_in(samples: &[f64], start: usize, lo: usize, hi: usize, mode: Extremum) -> usize {
    let mut best = start;
    for i in lo..=hi {
        let better = match mode {
            Extremum::Min => samples[i] < samples[best],
            Extremum::Max => samples[i] > samples[best],
        };
        if better {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Notch {
    pub idx: usize,
    pub low_confidence: bool,
}

pub fn detect_notch(samples: &[f64], sys_idx: usize, dia_idx: usize, sample_rate_hz: f64) -> Result<Notch> {
    detect_notch_with(samples, sys_idx, dia_idx, sample_rate_hz, FiducialConfig::default().notch_window_ms)
}

/// Deepest point below the sys-dia chord, refined to the nearby minimum.
pub fn detect_notch_with(
    samples: &[f64],
    sys_idx: usize,
    dia_idx: usize,
    sample_rate_hz: f64,
    window_ms: f64,
) -> Result<Notch> {
    if dia_idx <= sys_idx + 2 || dia_idx >= samples.len() {
        return Err(Error::Geometry(format!(
            "notch search needs sys + 2 < dia, got sys {sys_idx}, dia {dia_idx}"
        )));
    }
    let (ys, yd) = (samples[sys_idx], samples[dia_idx]);
    let span = (dia_idx - sys_idx) as f64;
    let mut initial = sys_idx + 1;
    let mut deepest = f64::INFINITY;
    for i in sys_idx + 1..dia_idx {
        let chord = ys + (yd - ys) * (i - sys_idx) as f64 / span;
        let d = samples[i] - chord;
        if d < deepest {
            deepest = d;
            initial = i;
        }
    }
    let half = samples_for(window_ms / 2000.0, sample_rate_hz);
    let refine = |at: usize| {
        let lo = at.saturating_sub(half).max(sys_idx + 1);
        let hi = (at + half).min(dia_idx - 1);
        extremum_in(samples, at, lo, hi, Extremum::Min)
    };
    let is_local_min = |i: usize| samples[i] < samples[i - 1] && samples[i] <= samples[i + 1];
    let once = refine(initial);
    // A shallow valley can sit just outside the first window: keep sliding the
    // window downhill, but only accept the result if it ends in a true minimum.
    let mut idx = once;
    loop {
        let next = refine(idx);
        if next == idx {
            break;
        }
        idx = next;
    }
    if is_local_min(idx) {
        return Ok(Notch {
            idx,
            low_confidence: false,
        });
    }
    Ok(Notch {
        idx: once,
        low_confidence: !is_local_min(once),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Diastolic {
    pub idx: usize,
    pub inflection: bool,
}

fn highest_local_max(x: &[f64], lo: usize, hi: usize) -> Option<usize> {
    // Interior points of [lo, hi] only, so both neighbours lie in range.
    if hi < lo + 2 {
        return None;
    }
    local_maxima(&x[lo..=hi])
        .into_iter()
        .map(|i| i + lo)
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if x[b] >= x[i] => Some(b),
            _ => Some(i),
        })
}

/// Highest local maximum on `(from, beat_end)`; for a monotone decay, the
/// shoulder where the first derivative peaks instead, flagged.
pub fn detect_diastolic_peak(samples: &[f64], d1: &[f64], from: usize, beat_end_idx: usize) -> Result<Diastolic> {
    if beat_end_idx >= samples.len() || beat_end_idx <= from + 1 {
        return Err(Error::Geometry(format!(
            "no samples between {from} and beat end {beat_end_idx}"
        )));
    }
    if let Some(idx) = highest_local_max(samples, from, beat_end_idx) {
        return Ok(Diastolic { idx, inflection: false });
    }
    let lo = from + 1;
    let hi = (from + ((beat_end_idx - from) as f64 * 0.6).round() as usize).clamp(lo, beat_end_idx - 1);
    let idx = highest_local_max(d1, from, hi + 1)
        .filter(|&i| i <= hi)
        .unwrap_or_else(|| lo + stats::argmax(&d1[lo..=hi]));
    Ok(Diastolic { idx, inflection: true })
}

fn first_local(x: &[f64], after: usize, until: usize, mode: Extremum) -> Option<usize> {
    (after + 1..until.min(x.len() - 1)).find(|&i| match mode {
        Extremum::Max => x[i] > x[i - 1] && x[i] >= x[i + 1],
        Extremum::Min => x[i] < x[i - 1] && x[i] <= x[i + 1],
    })
}

struct Context<'a> {
    s: &'a [f64],
    d: &'a DerivativePair,
    apg_ma: Vec<f64>,
    peaks: Vec<usize>,
    fs: f64,
    cfg: &'a FiducialConfig,
}

impl Context<'_> {
    fn foot(&self, sys: usize) -> Result<Foot> {
        detect_foot_with(self.s, &self.d.d2, &self.apg_ma, self.fs, sys, self.cfg)
    }

    fn beat(&self, j: usize) -> Result<FiducialSet> {
        let (s, fs) = (self.s, self.fs);
        let n = s.len();
        let sys = self.peaks[j];
        let mut flags = Vec::new();
        let foot = self.foot(sys)?;
        flags.extend(foot.flag);

        let next_sys = self.peaks.get(j + 1).copied();
        let beat_end = match next_sys.map(|p| self.foot(p)).transpose()? {
            Some(f) if f.idx > sys + 2 => {
                flags.extend(f.flag);
                f.idx
            }
            _ => {
                flags.push(Flag::PulseEndFallback);
                n - 1
            }
        };

        let candidate = detect_diastolic_peak(s, &self.d.d1, sys, beat_end)?;
        let notch = detect_notch_with(s, sys, candidate.idx, fs, self.cfg.notch_window_ms)?;
        if notch.low_confidence {
            flags.push(Flag::NotchLowConfidence);
        }
        let dia = detect_diastolic_peak(s, &self.d.d1, notch.idx, beat_end)?;
        if dia.inflection {
            flags.push(Flag::DiastolicInflection);
        }

        let (d1, d2) = (&self.d.d1, &self.d.d2);
        let a1 = foot.idx + 1 + stats::argmax(&d1[foot.idx + 1..=sys]);
        let mut derivative_fallback = false;
        let mut first_or = |x: &[f64], after: usize, mode: Extremum| {
            first_local(x, after, beat_end, mode).unwrap_or_else(|| {
                derivative_fallback = true;
                let hi = beat_end.max(after + 1).min(n - 1);
                let seg = &x[after + 1..=hi];
                after
                    + 1
                    + match mode {
                        Extremum::Max => stats::argmax(seg),
                        Extremum::Min => stats::argmin(seg),
                    }
            })
        };
        let b1 = first_or(d1, a1, Extremum::Min);
        let a2 = first_or(d2, a1, Extremum::Max);
        let b2 = first_or(d2, a2, Extremum::Min);
        if derivative_fallback {
            flags.push(Flag::DerivativeFallback);
        }

        let t = |i: usize| (i as f64 - foot.idx as f64) / fs;
        let tpi_s = t(beat_end);
        let tpp_s = match next_sys {
            Some(p) => (p - sys) as f64 / fs,
            None => {
                flags.push(Flag::TppFallback);
                tpi_s
            }
        };
        let base = s[foot.idx];
        flags.sort_unstable();
        flags.dedup();
        let set = FiducialSet {
            sample_rate_hz: fs,
            beat: j,
            n_peaks: self.peaks.len(),
            foot_idx: foot.idx,
            sys_idx: sys,
            notch_idx: notch.idx,
            dia_idx: dia.idx,
            beat_end_idx: beat_end,
            next_sys_idx: next_sys,
            foot_amplitude: base,
            x: s[sys] - base,
            y: s[dia.idx] - base,
            z: s[notch.idx] - base,
            t1_s: t(sys),
            t2_s: t(notch.idx),
            t3_s: t(dia.idx),
            tpi_s,
            tpp_s,
            a1: d1[a1],
            b1: d1[b1],
            a2: d2[a2],
            b2: d2[b2],
            ta1_s: t(a1),
            tb1_s: t(b1),
            ta2_s: t(a2),
            tb2_s: t(b2),
            flags,
        };
        set.check_invariants()?;
        Ok(set)
    }
}

pub fn extract_fiducials(clean: &CleanSignal) -> Result<FiducialSet> {
    extract_fiducials_with(clean, &FiducialConfig::default())
}

/// Landmarks of the first complete beat without flags, else of the first
/// beat that resolves at all (marked [`Flag::AllBeatsFlagged`]).
pub fn extract_fiducials_with(clean: &CleanSignal, cfg: &FiducialConfig) -> Result<FiducialSet> {
    let s = &clean.samples;
    let fs = clean.sample_rate_hz;
    let d = differentiate(s, fs)?;
    let peaks = detect_systolic_peaks_with(s, fs, cfg)?;
    let apg_ma = moving_average(&d.d2, samples_for(cfg.apg_ma_ms / 1000.0, fs).max(1));
    let ctx = Context {
        s,
        d: &d,
        apg_ma,
        peaks,
        fs,
        cfg,
    };
    let mut fallback = None;
    let mut last_error = None;
    for j in 0..ctx.peaks.len() {
        match ctx.beat(j) {
            Ok(set) if set.flags.is_empty() => return Ok(set),
            Ok(set) => {
                fallback.get_or_insert(set);
            }
            Err(e) => last_error = Some(e),
        }
    }
    match fallback {
        Some(mut set) => {
            set.flags.push(Flag::AllBeatsFlagged);
            Ok(set)
        }
        None => Err(Error::NoBeat(match last_error {
            Some(e) => format!("no beat resolved: {e}"),
            None => "no beat resolved".into(),
        })),
    }
}

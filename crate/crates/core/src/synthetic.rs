//! Synthetic PPG: periodic sums of Gaussian pulses with analytically known
//! landmarks, plus a small generated cohort laid out like the public dataset.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{bmi, Sex};
use crate::error::Result;
use crate::rng;

/// One Gaussian lobe, timed from the beat onset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lobe {
    pub amplitude: f64,
    pub center_s: f64,
    pub width_s: f64,
}

impl Lobe {
    pub const fn new(amplitude: f64, center_s: f64, width_s: f64) -> Self {
        Self {
            amplitude,
            center_s,
            width_s,
        }
    }

    fn value(&self, u: f64) -> f64 {
        let d = (u - self.center_s) / self.width_s;
        self.amplitude * (-0.5 * d * d).exp()
    }

    fn second_derivative(&self, u: f64) -> f64 {
        let s2 = self.width_s * self.width_s;
        let d = u - self.center_s;
        (d * d / (s2 * s2) - 1.0 / s2) * self.value(u)
    }
}

/// Landmark times in seconds from the start of the signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmarks {
    pub foot_s: f64,
    pub sys_s: f64,
    pub notch_s: f64,
    pub dia_s: f64,
}

/// Infinite beat train: beat `k` starts at `first_onset_s + k * period_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrain {
    pub period_s: f64,
    pub first_onset_s: f64,
    pub lobes: Vec<Lobe>,
}

/// Onset of the first beat in every fixture.
pub const FIXTURE_ONSET_S: f64 = 0.15;

fn upstroke(width_s: f64) -> Lobe {
    // The second derivative of a Gaussian peaks sqrt(3) widths before its
    // center, so this places the maximum of the APG exactly 0.1 s after onset.
    Lobe::new(1.0, 0.1 + 3f64.sqrt() * width_s, width_s)
}

impl PulseTrain {
    /// Deep notch, no separate foot curvature: 72 bpm.
    pub fn flat_foot() -> Self {
        Self {
            period_s: 60.0 / 72.0,
            first_onset_s: FIXTURE_ONSET_S,
            lobes: vec![upstroke(0.05), Lobe::new(0.6, 0.43, 0.09)],
        }
    }

    /// Tall reflected wave riding on a slow third lobe: 64 bpm.
    pub fn prominent_foot() -> Self {
        Self {
            period_s: 60.0 / 64.0,
            first_onset_s: FIXTURE_ONSET_S,
            lobes: vec![upstroke(0.05), Lobe::new(0.55, 0.42, 0.08), Lobe::new(0.35, 0.62, 0.2)],
        }
    }

    /// Valley only a few percent of the systolic amplitude deep: 80 bpm.
    pub fn weak_notch() -> Self {
        Self {
            period_s: 60.0 / 80.0,
            first_onset_s: FIXTURE_ONSET_S,
            lobes: vec![upstroke(0.06), Lobe::new(0.4, 0.4, 0.08)],
        }
    }

    pub fn variants() -> Vec<(&'static str, Self)> {
        vec![
            ("flat_foot", Self::flat_foot()),
            ("prominent_foot", Self::prominent_foot()),
            ("weak_notch", Self::weak_notch()),
        ]
    }

    /// Same morphology with every time constant multiplied by `factor`.
    pub fn dilated(&self, factor: f64) -> Self {
        Self {
            period_s: self.period_s * factor,
            first_onset_s: self.first_onset_s * factor,
            lobes: self
                .lobes
                .iter()
                .map(|l| Lobe::new(l.amplitude, l.center_s * factor, l.width_s * factor))
                .collect(),
        }
    }

    fn sum(&self, t: f64, f: impl Fn(&Lobe, f64) -> f64) -> f64 {
        let k0 = ((t - self.first_onset_s) / self.period_s).floor() as i64;
        let mut acc = 0.0;
        for k in (k0 - 3)..=(k0 + 1) {
            let u = t - self.first_onset_s - k as f64 * self.period_s;
            for lobe in &self.lobes {
                acc += f(lobe, u);
            }
        }
        acc
    }

    pub fn value(&self, t: f64) -> f64 {
        self.sum(t, Lobe::value)
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        self.sum(t, Lobe::second_derivative)
    }

    pub fn sample(&self, sample_rate_hz: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.value(i as f64 / sample_rate_hz)).collect()
    }

    /// Landmarks of beat `beat`, located on a 10 us grid of the analytic waveform.
    pub fn landmarks(&self, beat: usize) -> Landmarks {
        const STEP: f64 = 1e-5;
        let onset = self.first_onset_s + beat as f64 * self.period_s;
        let grid = |a: f64, b: f64| {
            let n = ((b - a) / STEP).round() as usize;
            (0..=n).map(move |i| a + i as f64 * STEP)
        };
        let arg = |a: f64, b: f64, f: &dyn Fn(f64) -> f64| {
            grid(a, b)
                .map(|t| (t, f(t)))
                .fold((a, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
                .0
        };
        let end = onset + self.period_s - 0.05;
        let sys_s = arg(onset, end, &|t| self.value(t));
        let foot_s = arg(onset - 0.05, sys_s, &|t| self.second_derivative(t));

        let ts: Vec<f64> = grid(sys_s, end).collect();
        let vs: Vec<f64> = ts.iter().map(|&t| self.value(t)).collect();
        let notch = (1..vs.len() - 1)
            .find(|&i| vs[i] < vs[i - 1] && vs[i] <= vs[i + 1])
            .expect("fixture beat has no valley");
        let dia = (notch + 1..vs.len() - 1)
            .find(|&i| vs[i] > vs[i - 1] && vs[i] >= vs[i + 1])
            .expect("fixture beat has no diastolic peak");
        Landmarks {
            foot_s,
            sys_s,
            notch_s: ts[notch],
            dia_s: ts[dia],
        }
    }
}

/// Parameters of a generated cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortSpec {
    pub subjects: usize,
    pub segments_per_subject: u32,
    pub samples_per_segment: usize,
    pub sample_rate_hz: f64,
    /// Probability that a segment carries a motion artifact.
    pub artifact_rate: f64,
    pub seed: u64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            subjects: 60,
            segments_per_subject: 3,
            samples_per_segment: 2100,
            sample_rate_hz: 1000.0,
            artifact_rate: 0.15,
            seed: 7,
        }
    }
}

struct Subject {
    id: usize,
    sex: Sex,
    age: f64,
    height: f64,
    weight: f64,
    hr: f64,
    sbp: f64,
    dbp: f64,
}

fn draw_subject(id: usize, r: &mut rng::PipelineRng) -> Subject {
    let n = |mu: f64, sd: f64, r: &mut rng::PipelineRng| Normal::new(mu, sd).unwrap().sample(r);
    let sex = if r.random_bool(0.5) { Sex::Male } else { Sex::Female };
    let age = r.random_range(20.0..80.0f64);
    let height = match sex {
        Sex::Male => n(172.0, 7.0, r),
        Sex::Female => n(160.0, 6.0, r),
    }
    .clamp(145.0, 195.0);
    let weight = (n(23.5, 3.5, r).clamp(16.0, 38.0) * (height / 100.0).powi(2)).round();
    let hr = n(74.0, 9.0, r).clamp(55.0, 100.0);
    let b = bmi(weight, height);
    let sbp = 100.0 + 0.55 * (age - 20.0) + 0.9 * (b - 22.0) + n(0.0, 5.0, r);
    let dbp = (58.0 + 0.3 * (sbp - 100.0) + 0.12 * (age - 20.0) + n(0.0, 3.5, r)).min(sbp - 20.0);
    Subject {
        id,
        sex,
        age: age.round(),
        height: height.round(),
        weight,
        hr: hr.round(),
        sbp: sbp.round(),
        dbp: dbp.round(),
    }
}

/// Stiffer arteries return the reflected wave earlier and smaller.
fn subject_train(s: &Subject, hr: f64, onset: f64) -> PulseTrain {
    let stiff = ((s.sbp - 100.0) / 80.0).clamp(-0.2, 1.2);
    let w1 = 0.045 + 0.012 * (s.age - 20.0) / 60.0;
    let up = Lobe::new(1.0, 0.03 + 3f64.sqrt() * w1, w1);
    let delay = 0.27 - 0.07 * stiff;
    let reflected = Lobe::new(0.62 - 0.25 * stiff, up.center_s + delay, 0.075);
    PulseTrain {
        period_s: 60.0 / hr,
        first_onset_s: onset,
        lobes: vec![up, reflected],
    }
}

fn segment_samples(s: &Subject, spec: &CohortSpec, r: &mut rng::PipelineRng) -> Vec<f64> {
    let hr = s.hr + r.random_range(-2.0..2.0);
    let train = subject_train(s, hr, r.random_range(0.0..60.0 / hr));
    let fs = spec.sample_rate_hz;
    let wander_f = r.random_range(0.15..0.35);
    let wander_phase = r.random_range(0.0..std::f64::consts::TAU);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let artifact = r.random_bool(spec.artifact_rate);
    let dip_at = r.random_range(0.3..1.8);
    let gain = r.random_range(600.0..1000.0);
    (0..spec.samples_per_segment)
        .map(|i| {
            let t = i as f64 / fs;
            let mut v = train.value(t) + 0.15 * (std::f64::consts::TAU * wander_f * t + wander_phase).sin();
            v += noise.sample(r);
            if artifact {
                let d = (t - dip_at) / 0.12;
                v -= 2.5 * (-0.5 * d * d).exp();
            }
            (2048.0 + gain * v).round()
        })
        .collect()
}

/// Writes `subjects.csv` and `signals/<subject>_<segment>.txt` under `dir`.
pub fn write_cohort(dir: &Path, spec: &CohortSpec) -> Result<()> {
    let signal_dir = dir.join("signals");
    fs::create_dir_all(&signal_dir)?;
    let mut table = csv::Writer::from_path(dir.join("subjects.csv"))?;
    table.write_record(["subject_id", "sex", "age", "height", "weight", "sbp", "dbp", "hr", "bmi"])?;
    for idx in 0..spec.subjects {
        let mut r = rng::seeded(rng::sub_seed(spec.seed, idx as u64));
        let s = draw_subject(idx + 1, &mut r);
        let sex = match s.sex {
            Sex::Male => "M",
            Sex::Female => "F",
        };
        table.write_record([
            s.id.to_string(),
            sex.to_string(),
            s.age.to_string(),
            s.height.to_string(),
            s.weight.to_string(),
            s.sbp.to_string(),
            s.dbp.to_string(),
            s.hr.to_string(),
            format!("{:.2}", bmi(s.weight, s.height)),
        ])?;
        for seg in 1..=spec.segments_per_subject {
            let samples = segment_samples(&s, spec, &mut r);
            let mut f = std::io::BufWriter::new(fs::File::create(signal_dir.join(format!("{}_{seg}.txt", s.id)))?);
            let line: Vec<String> = samples.iter().map(|v| format!("{v}")).collect();
            writeln!(f, "{}", line.join("\t"))?;
        }
    }
    table.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upstroke_places_apg_peak_at_onset_plus_100ms() {
        for (_, train) in PulseTrain::variants() {
            let lm = train.landmarks(0);
            assert!((lm.foot_s - (FIXTURE_ONSET_S + 0.1)).abs() < 1e-3, "{lm:?}");
            assert!(lm.foot_s < lm.sys_s && lm.sys_s < lm.notch_s && lm.notch_s < lm.dia_s);
        }
    }

    #[test]
    fn landmarks_repeat_every_period() {
        let train = PulseTrain::weak_notch();
        let (a, b) = (train.landmarks(0), train.landmarks(1));
        assert!((b.sys_s - a.sys_s - train.period_s).abs() < 2e-5);
        assert!((b.notch_s - a.notch_s - train.period_s).abs() < 2e-5);
    }

    #[test]
    fn weak_notch_is_shallow() {
        let train = PulseTrain::weak_notch();
        let lm = train.landmarks(0);
        let x = train.value(lm.sys_s) - train.value(lm.foot_s);
        let depth = train.value(lm.dia_s) - train.value(lm.notch_s);
        assert!(depth > 0.0 && depth < 0.05 * x, "depth {depth}, x {x}");
    }

    #[test]
    fn dilation_scales_landmarks() {
        let train = PulseTrain::flat_foot();
        let (a, b) = (train.landmarks(0), train.dilated(2.0).landmarks(0));
        assert!((b.sys_s - 2.0 * a.sys_s).abs() < 5e-5);
        assert!((b.dia_s - 2.0 * a.dia_s).abs() < 5e-5);
    }

    #[test]
    fn cohort_layout() {
        let dir = tempfile::tempdir().unwrap();
        let spec = CohortSpec {
            subjects: 3,
            segments_per_subject: 2,
            ..CohortSpec::default()
        };
        write_cohort(dir.path(), &spec).unwrap();
        let rows = crate::dataset::parse_subject_table(&dir.path().join("subjects.csv"), &Default::default()).unwrap();
        assert_eq!(rows.len(), 3);
        let records = crate::dataset::load_records(&dir.path().join("signals"), &rows).unwrap();
        assert_eq!(records.len(), 6);
        assert!(records.iter().all(|r| r.signal.samples.len() == 2100));
    }
}

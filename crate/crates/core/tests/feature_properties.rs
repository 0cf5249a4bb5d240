use ppgbp::dataset::{bmi, Demographics, RawSignal, Sex};
use ppgbp::features::{assemble_features, FeatureConfig, AMPLITUDE_INVARIANT, N_FEATURES, TIME_VALUED};
use ppgbp::fiducials::extract_fiducials;
use ppgbp::preprocess::{preprocess, CleanSignal, PreprocessConfig};
use ppgbp::synthetic::PulseTrain;

fn demo() -> Demographics {
    Demographics {
        sex: Sex::Male,
        age_years: 52.0,
        height_cm: 176.0,
        weight_kg: 81.0,
        bmi_kg_m2: bmi(81.0, 176.0),
        heart_rate_bpm: Some(71.0),
    }
}

fn clean(train: &PulseTrain, n: usize) -> CleanSignal {
    let raw = RawSignal {
        samples: train.sample(1000.0, n),
        sample_rate_hz: 1000.0,
        subject_id: "9".into(),
        segment_id: 2,
    };
    preprocess(&raw, &PreprocessConfig::default()).unwrap()
}

fn features(c: &CleanSignal) -> Vec<f64> {
    let fid = extract_fiducials(c).unwrap();
    assemble_features(c, &fid, &demo(), &FeatureConfig::default()).unwrap().values
}

#[test]
fn ratio_features_ignore_amplitude_scale() {
    for (name, train) in PulseTrain::variants() {
        let base = clean(&train, 2100);
        let f0 = features(&base);
        for c in [0.1, 10.0] {
            let scaled = CleanSignal::from_samples(base.samples.iter().map(|v| v * c).collect(), 1000.0);
            let f1 = features(&scaled);
            assert_eq!(f1.len(), N_FEATURES);
            for &k in AMPLITUDE_INVARIANT {
                let (a, b) = (f0[k - 1], f1[k - 1]);
                assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{name} x{c} feature {k}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn time_features_double_under_dilation() {
    for (name, train) in PulseTrain::variants() {
        let f1 = features(&clean(&train, 2100));
        let f2 = features(&clean(&train.dilated(2.0), 4200));
        for &k in TIME_VALUED {
            let r = f2[k - 1] / f1[k - 1];
            assert!((r - 2.0).abs() < 0.02, "{name} feature {k}: ratio {r}");
        }
    }
}

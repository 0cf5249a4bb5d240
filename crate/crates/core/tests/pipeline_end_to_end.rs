use std::fs;
use std::path::Path;

use ppgbp::dataset::Target;
use ppgbp::features::{FEATURE_NAMES, N_FEATURES};
use ppgbp::pipeline::{artifacts, with_jobs, Pipeline, PipelineConfig};
use ppgbp::synthetic::{write_cohort, CohortSpec};
use ppgbp::Error;

fn cohort(dir: &Path) -> PipelineConfig {
    let spec = CohortSpec {
        subjects: 40,
        segments_per_subject: 3,
        ..CohortSpec::default()
    };
    write_cohort(dir, &spec).unwrap();
    let mut cfg = PipelineConfig::new(11, dir.join("signals"), dir.join("subjects.csv"), dir.join("out"));
    cfg.qc.calibrate_to_count = Some(100);
    cfg.tune.budget = 6;
    cfg
}

#[test]
fn full_chain_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = cohort(dir.path());
    let p = Pipeline::new(cfg).unwrap();
    let reports = p.run_all().unwrap();

    let features = fs::read_to_string(p.path(artifacts::FEATURES)).unwrap();
    let header: Vec<&str> = features.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 5 + N_FEATURES);
    assert_eq!(&header[5..], &FEATURE_NAMES[..]);
    for name in [
        artifacts::RECORDS,
        artifacts::ACCEPTED,
        artifacts::REJECTED,
        artifacts::SPLIT,
        artifacts::SELECTION,
        artifacts::CV,
        artifacts::TUNE,
        artifacts::PREDICTIONS,
        artifacts::REPORT_JSON,
        artifacts::REPORT_MD,
        artifacts::MANIFEST,
        "model.sbp.bin",
        "model.dbp.bin",
        "scatter.sbp.csv",
    ] {
        assert!(p.path(name).is_file(), "{name}");
    }
    let qc: ppgbp::pipeline::QcSummary =
        serde_json::from_str(&fs::read_to_string(p.path(artifacts::QC)).unwrap()).unwrap();
    assert_eq!(qc.n_accepted, 100);
    assert_eq!(qc.n_input, 120);
    assert!(reports.sbp.rmse.is_finite() && reports.dbp.rmse.is_finite());
    assert_eq!(reports.sbp.n_records, 15);
}

#[test]
fn replay_is_bit_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cohort(dir.path());
    cfg.model.tune = false;
    let mut outputs = Vec::new();
    for (jobs, sub) in [(1, "a"), (4, "b")] {
        let mut c = cfg.clone();
        c.output_dir = dir.path().join(sub);
        let p = Pipeline::new(c).unwrap();
        with_jobs(Some(jobs), || p.run_all()).unwrap().unwrap();
        outputs.push((
            fs::read(p.path(artifacts::FEATURES)).unwrap(),
            fs::read(p.path(artifacts::PREDICTIONS)).unwrap(),
            p.config_hash().to_string(),
        ));
    }
    assert!(outputs[0].0 == outputs[1].0, "features.csv differs");
    assert!(outputs[0].1 == outputs[1].1, "predictions.csv differs");
    assert_eq!(outputs[0].2, outputs[1].2);
}

#[test]
fn downstream_stages_name_their_producer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = cohort(dir.path());
    let p = Pipeline::new(cfg).unwrap();
    match p.evaluate() {
        Err(e @ Error::MissingArtifact { producer: "train", .. }) => {
            assert!(e.to_string().contains("run `train` first"));
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(p.qc(), Err(Error::MissingArtifact { producer: "ingest", .. })));
    p.ingest().unwrap();
    p.qc().unwrap();
    p.extract().unwrap();
    assert!(matches!(p.train(&[Target::Sbp]), Err(Error::MissingArtifact { producer: "select", .. })));
}

#[test]
fn report_refuses_mixed_lineage() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cohort(dir.path());
    cfg.model.tune = false;
    let p = Pipeline::new(cfg.clone()).unwrap();
    p.run_all().unwrap();

    // The same directory seen through a different config.
    let mut other = cfg;
    other.model.gpr.noise_var = 0.5;
    let q = Pipeline::new(other).unwrap();
    assert!(matches!(q.report(), Err(Error::Lineage(_))));

    // Editing an artifact by hand breaks the recorded digest.
    fs::write(p.path(artifacts::PREDICTIONS), "target,subject_id,segment_id,actual,predicted\n").unwrap();
    assert!(matches!(p.report(), Err(Error::Lineage(_))));
}

#[test]
fn forest_model_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cohort(dir.path());
    cfg.model.kind = ppgbp::regress::ModelKind::Forest;
    cfg.model.forest.n_trees = 20;
    cfg.selection.method = ppgbp::select::Method::Mrmr;
    let p = Pipeline::new(cfg).unwrap();
    let r = p.run_all().unwrap();
    assert!(r.dbp.mae.is_finite());
    assert!(!p.path(artifacts::TUNE).exists());
}

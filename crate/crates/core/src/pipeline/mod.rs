//! End-to-end pipeline over flat-file artifacts in one output directory.

pub mod artifacts;
pub mod config;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use artifacts::{FeatureRow, Manifest, PredictionRow, Side};
pub use config::{PipelineConfig, StageSeeds};

use crate::dataset::{self, PpgRecord, Screened, SplitMode, Target};
use crate::error::{Error, Result};
use crate::eval::{self, EvaluationPair, PredictionSet};
use crate::features::{assemble_features, FEATURE_NAMES};
use crate::fiducials::{extract_fiducials_with, FiducialSet, Flag};
use crate::preprocess::preprocess;
use crate::regress::{
    forest_fit, kfold_cv, tune_gpr, CvReport, ForestTrainer, GprRegressor, GprSettings, GprTrainer, Model, ModelFile,
    ModelKind, TuneResult,
};
use crate::select::{run_selection, FeatureMatrix, SelectionResult};
use artifacts as art;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Runs `f` on a thread pool of `jobs` workers (all cores when `None`).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j.max(1));
    }
    let pool = b.build().map_err(|e| Error::Argument(e.to_string()))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcSummary {
    pub config_hash: String,
    pub threshold: f64,
    pub calibrated: bool,
    pub n_input: usize,
    pub n_accepted: usize,
    pub n_rejected: usize,
    pub n_subjects_accepted: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RecordKey {
    pub subject_id: String,
    pub segment_id: u32,
}

impl RecordKey {
    fn of(r: &PpgRecord) -> Self {
        Self {
            subject_id: r.subject_id().to_string(),
            segment_id: r.segment_id(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFile {
    pub config_hash: String,
    pub seed: u64,
    pub mode: SplitMode,
    pub test_fraction: f64,
    pub train: Vec<RecordKey>,
    pub test: Vec<RecordKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionFailure {
    pub key: RecordKey,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractSummary {
    pub config_hash: String,
    pub n_extracted: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub failures: Vec<ExtractionFailure>,
    pub flag_counts: BTreeMap<Flag, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiducialLine {
    pub key: RecordKey,
    pub fiducials: FiducialSet,
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub result: SelectionResult,
    pub chosen_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerTarget<T> {
    pub config_hash: String,
    pub targets: BTreeMap<Target, T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub config_hash: String,
    pub reports: EvaluationPair,
}

pub struct Pipeline {
    pub config: PipelineConfig,
    hash: String,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let hash = config.hash();
        fs::create_dir_all(&config.output_dir)?;
        Ok(Self { config, hash })
    }

    pub fn out(&self) -> &Path {
        &self.config.output_dir
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out().join(name)
    }

    fn require(&self, name: &str, producer: &'static str) -> Result<PathBuf> {
        let p = self.path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact { path: p, producer })
        }
    }

    fn manifest(&self) -> Result<Manifest> {
        let base = Manifest {
            tool_version: TOOL_VERSION.into(),
            config_hash: self.hash.clone(),
            seed: self.config.seed,
            seeds: self.config.seeds(),
            config: serde_json::to_value(&self.config)?,
            artifacts: BTreeMap::new(),
        };
        Ok(match Manifest::load(self.out())? {
            Some(m) => Manifest {
                artifacts: m.artifacts,
                ..base
            },
            None => base,
        })
    }

    fn emit(&self, stage: &str, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = art::write_atomic(self.out(), name, bytes)?;
        let mut m = self.manifest()?;
        m.artifacts.insert(
            name.to_string(),
            art::ArtifactEntry {
                stage: stage.into(),
                sha256: art::sha256_hex(bytes),
                config_hash: self.hash.clone(),
            },
        );
        m.save(self.out())?;
        log::info!("{stage}: wrote {}", p.display());
        Ok(p)
    }

    /// Loads a per-target artifact if it was produced under this config.
    fn per_target<T: serde::de::DeserializeOwned>(&self, name: &str) -> Result<BTreeMap<Target, T>> {
        let p = self.path(name);
        if !p.is_file() {
            return Ok(BTreeMap::new());
        }
        let f: PerTarget<T> = art::read_json(&p)?;
        if f.config_hash != self.hash {
            log::warn!("{name} came from another config; replacing it");
            return Ok(BTreeMap::new());
        }
        Ok(f.targets)
    }

    fn emit_per_target<T: Serialize>(&self, stage: &str, name: &str, targets: BTreeMap<Target, T>) -> Result<()> {
        let f = PerTarget {
            config_hash: self.hash.clone(),
            targets,
        };
        self.emit(stage, name, &art::json_bytes(&f)?)?;
        Ok(())
    }

    pub fn ingest(&self) -> Result<usize> {
        let c = &self.config.dataset;
        self.config.check_inputs()?;
        let subjects = dataset::parse_subject_table(&c.subject_table, &c.columns()?).map_err(|e| e.in_stage("ingest"))?;
        let mut records = dataset::load_records(&c.signal_dir, &subjects).map_err(|e| e.in_stage("ingest"))?;
        for r in &mut records {
            r.signal.sample_rate_hz = c.sample_rate_hz;
        }
        log::info!("ingest: {} subjects, {} segments", subjects.len(), records.len());
        self.emit("ingest", art::RECORDS, &art::write_jsonl(&records)?)?;
        Ok(records.len())
    }

    pub fn qc(&self) -> Result<QcSummary> {
        let records: Vec<PpgRecord> = art::read_jsonl(&self.require(art::RECORDS, "ingest")?)?;
        let q = &self.config.qc;
        let (threshold, calibrated) = match (q.sqi_threshold, q.calibrate_to_count) {
            (Some(t), _) => (t, false),
            (None, Some(keep)) => {
                let sqis: Vec<f64> =
                    records.iter().filter_map(|r| dataset::skewness_sqi(&r.signal.samples).ok()).collect();
                (dataset::calibrate_threshold(&sqis, keep).map_err(|e| e.in_stage("qc"))?, true)
            }
            (None, None) => return Err(Error::Config(vec!["qc.calibrate_to_count".into()])),
        };
        let n_input = records.len();
        let (accepted, rejected) = dataset::qc_filter(records, threshold);
        let subjects: BTreeSet<&str> = accepted.iter().map(|s| s.record.subject_id()).collect();
        let summary = QcSummary {
            config_hash: self.hash.clone(),
            threshold,
            calibrated,
            n_input,
            n_accepted: accepted.len(),
            n_rejected: rejected.len(),
            n_subjects_accepted: subjects.len(),
        };
        log::info!("qc: threshold {threshold:.4}, kept {} of {n_input}", accepted.len());

        let keys: Vec<RecordKey> = accepted.iter().map(|s| RecordKey::of(&s.record)).collect();
        let seed = self.config.seeds().split;
        let frac = self.config.split.test_fraction;
        let (train, test) = match self.config.split.mode {
            SplitMode::BySignal => dataset::split_train_test(keys, frac, seed),
            SplitMode::BySubject => dataset::split_by_subject(keys, |k| k.subject_id.clone(), frac, seed),
        }
        .map_err(|e| e.in_stage("qc"))?;
        let split = SplitFile {
            config_hash: self.hash.clone(),
            seed,
            mode: self.config.split.mode,
            test_fraction: frac,
            train,
            test,
        };
        self.emit("qc", art::ACCEPTED, &art::write_jsonl(&accepted)?)?;
        self.emit("qc", art::REJECTED, &art::write_jsonl(&rejected)?)?;
        self.emit("qc", art::SPLIT, &art::json_bytes(&split)?)?;
        self.emit("qc", art::QC, &art::json_bytes(&summary)?)?;
        Ok(summary)
    }

    pub fn extract(&self) -> Result<ExtractSummary> {
        let accepted: Vec<Screened<PpgRecord>> = art::read_jsonl(&self.require(art::ACCEPTED, "qc")?)?;
        let split: SplitFile = art::read_json(&self.require(art::SPLIT, "qc")?)?;
        let test: BTreeSet<&RecordKey> = split.test.iter().collect();
        let c = &self.config;
        let results: Vec<Result<(FeatureRow, FiducialLine)>> = accepted
            .par_iter()
            .map(|s| {
                let r = &s.record;
                let clean = preprocess(&r.signal, &c.preprocess).map_err(|e| e.in_stage("preprocess"))?;
                let fid = extract_fiducials_with(&clean, &c.fiducials).map_err(|e| e.in_stage("fiducials"))?;
                let fv = assemble_features(&clean, &fid, &r.demo, &c.features).map_err(|e| e.in_stage("features"))?;
                let key = RecordKey::of(r);
                let row = FeatureRow {
                    subject_id: key.subject_id.clone(),
                    segment_id: key.segment_id,
                    side: if test.contains(&key) { Side::Test } else { Side::Train },
                    sbp: r.truth.sbp_mmhg,
                    dbp: r.truth.dbp_mmhg,
                    values: fv.values,
                };
                Ok((
                    row,
                    FiducialLine {
                        key,
                        fiducials: fid,
                        flags: fv.flags,
                    },
                ))
            })
            .collect();

        let mut rows = Vec::new();
        let mut fids = Vec::new();
        let mut failures = Vec::new();
        let mut flag_counts = BTreeMap::new();
        for (s, res) in accepted.iter().zip(results) {
            match res {
                Ok((row, line)) => {
                    for f in &line.flags {
                        *flag_counts.entry(*f).or_insert(0) += 1;
                    }
                    rows.push(row);
                    fids.push(line);
                }
                Err(e) => {
                    log::warn!("extract: dropping {}_{}: {e}", s.record.subject_id(), s.record.segment_id());
                    failures.push(ExtractionFailure {
                        key: RecordKey::of(&s.record),
                        error: e.to_string(),
                    });
                }
            }
        }
        let summary = ExtractSummary {
            config_hash: self.hash.clone(),
            n_extracted: rows.len(),
            n_train: rows.iter().filter(|r| r.side == Side::Train).count(),
            n_test: rows.iter().filter(|r| r.side == Side::Test).count(),
            failures,
            flag_counts,
        };
        self.emit("extract", art::FEATURES, &art::write_features_csv(&rows)?)?;
        self.emit("extract", art::FIDUCIALS, &art::write_jsonl(&fids)?)?;
        self.emit("extract", art::EXTRACT, &art::json_bytes(&summary)?)?;
        Ok(summary)
    }

    fn feature_rows(&self) -> Result<Vec<FeatureRow>> {
        art::read_features_csv(&self.require(art::FEATURES, "extract")?)
    }

    fn training_matrix(&self, rows: &[FeatureRow], target: Target) -> Result<FeatureMatrix> {
        let train: Vec<&FeatureRow> = rows.iter().filter(|r| r.side == Side::Train).collect();
        FeatureMatrix::new(
            train.iter().map(|r| r.values.clone()).collect(),
            train.iter().map(|r| r.target(target)).collect(),
            FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        )
    }

    pub fn select(&self, targets: &[Target]) -> Result<BTreeMap<Target, SelectionEntry>> {
        let rows = self.feature_rows()?;
        let mut all = self.per_target::<SelectionEntry>(art::SELECTION)?;
        for &t in targets {
            let m = self.training_matrix(&rows, t)?;
            let result = run_selection(&m, t, &self.config.selection, self.config.seeds().selection)
                .map_err(|e| e.in_stage("select"))?;
            let chosen_names = result.chosen.iter().map(|&j| FEATURE_NAMES[j].to_string()).collect();
            log::info!("select {t}: {:?}", &chosen_names);
            all.insert(t, SelectionEntry { result, chosen_names });
        }
        self.emit_per_target("select", art::SELECTION, all.clone())?;
        Ok(all)
    }

    fn selected(&self, t: Target) -> Result<SelectionEntry> {
        let p = self.require(art::SELECTION, "select")?;
        let f: PerTarget<SelectionEntry> = art::read_json(&p)?;
        f.targets.get(&t).cloned().ok_or(Error::MissingArtifact {
            path: p,
            producer: "select",
        })
    }

    fn train_xy(&self, rows: &[FeatureRow], sel: &SelectionEntry, t: Target) -> (Vec<Vec<f64>>, Vec<f64>) {
        rows.iter()
            .filter(|r| r.side == Side::Train)
            .map(|r| (sel.result.chosen.iter().map(|&j| r.values[j]).collect(), r.target(t)))
            .unzip()
    }

    fn fit_and_save(
        &self,
        stage: &str,
        t: Target,
        sel: &SelectionEntry,
        x: &[Vec<f64>],
        y: &[f64],
        gpr: &GprSettings,
    ) -> Result<CvReport> {
        let seeds = self.config.seeds();
        let folds = self.config.model.cv_folds;
        let (model, cv) = match self.config.model.kind {
            ModelKind::Gpr => (
                Model::Gpr(GprRegressor::fit(x, y, gpr)?),
                kfold_cv(x, y, folds, &GprTrainer(*gpr), seeds.cv)?,
            ),
            ModelKind::Forest => {
                let trainer = ForestTrainer {
                    config: self.config.model.forest.clone(),
                    seed: seeds.forest,
                };
                (
                    Model::Forest(forest_fit(x, y, &trainer.config, trainer.seed)?),
                    kfold_cv(x, y, folds, &trainer, seeds.cv)?,
                )
            }
        };
        let file = ModelFile::new(t, self.hash.clone(), sel.result.chosen.clone(), sel.chosen_names.clone(), model);
        self.emit(stage, &art::model_file(t), file.to_json()?.as_bytes())?;
        log::info!("{stage} {t}: CV RMSE {:.3}, R {:.3}", cv.aggregate.rmse, cv.aggregate.r);
        Ok(cv)
    }

    pub fn train(&self, targets: &[Target]) -> Result<BTreeMap<Target, CvReport>> {
        let rows = self.feature_rows()?;
        let mut cvs = self.per_target::<CvReport>(art::CV)?;
        for &t in targets {
            let sel = self.selected(t)?;
            let (x, y) = self.train_xy(&rows, &sel, t);
            let cv = self
                .fit_and_save("train", t, &sel, &x, &y, &self.config.model.gpr)
                .map_err(|e| e.in_stage("train"))?;
            cvs.insert(t, cv);
        }
        self.emit_per_target("train", art::CV, cvs.clone())?;
        Ok(cvs)
    }

    pub fn tune(&self, targets: &[Target]) -> Result<BTreeMap<Target, TuneResult>> {
        if self.config.model.kind != ModelKind::Gpr {
            return Err(Error::Config(vec!["model.kind (tuning needs gpr)".into()]));
        }
        let rows = self.feature_rows()?;
        let mut tunes = self.per_target::<TuneResult>(art::TUNE)?;
        let mut cvs = self.per_target::<CvReport>(art::CV)?;
        for &t in targets {
            let sel = self.selected(t)?;
            let (x, y) = self.train_xy(&rows, &sel, t);
            let res = tune_gpr(&x, &y, &self.config.tune, self.config.seeds().tune).map_err(|e| e.in_stage("tune"))?;
            log::info!("tune {t}: best CV MSE {:.3} with {:?}", res.best_objective, res.best);
            let cv = self
                .fit_and_save("tune", t, &sel, &x, &y, &GprSettings::from(res.best))
                .map_err(|e| e.in_stage("tune"))?;
            tunes.insert(t, res);
            cvs.insert(t, cv);
        }
        self.emit_per_target("tune", art::TUNE, tunes.clone())?;
        self.emit_per_target("tune", art::CV, cvs)?;
        Ok(tunes)
    }

    pub fn predict(&self, targets: &[Target]) -> Result<Vec<PredictionRow>> {
        let models = targets
            .iter()
            .map(|&t| {
                let p = self.require(&art::model_file(t), "train")?;
                ModelFile::load(&p)
            })
            .collect::<Result<Vec<_>>>()?;
        let rows = self.feature_rows()?;
        let test: Vec<&FeatureRow> = rows.iter().filter(|r| r.side == Side::Test).collect();
        let full: Vec<Vec<f64>> = test.iter().map(|r| r.values.clone()).collect();

        let mut out: Vec<PredictionRow> = match self.path(art::PREDICTIONS) {
            p if p.is_file() => art::read_predictions_csv(&p)?
                .into_iter()
                .filter(|r| !targets.contains(&r.target))
                .collect(),
            _ => Vec::new(),
        };
        for (&t, m) in targets.iter().zip(&models) {
            if m.target != t {
                return Err(Error::ModelFormat(format!("{} holds a {} model", art::model_file(t), m.target)));
            }
            let pred = m.predict_full(&full).map_err(|e| e.in_stage("predict"))?;
            out.extend(test.iter().zip(pred).map(|(r, p)| PredictionRow {
                target: t,
                subject_id: r.subject_id.clone(),
                segment_id: r.segment_id,
                actual: r.target(t),
                predicted: p,
            }));
        }
        // Stable: keeps test-row order within each target.
        out.sort_by_key(|r| r.target);
        self.emit("predict", art::PREDICTIONS, &art::write_predictions_csv(&out)?)?;
        Ok(out)
    }

    fn prediction_sets(&self) -> Result<(PredictionSet, PredictionSet)> {
        for t in Target::BOTH {
            self.require(&art::model_file(t), "train")?;
        }
        let p = self.require(art::PREDICTIONS, "predict")?;
        let rows = art::read_predictions_csv(&p)?;
        let set = |t: Target| {
            let r: Vec<&PredictionRow> = rows.iter().filter(|r| r.target == t).collect();
            if r.is_empty() {
                return Err(Error::MissingArtifact {
                    path: p.clone(),
                    producer: "predict",
                });
            }
            PredictionSet::new(
                r.iter().map(|r| r.predicted).collect(),
                r.iter().map(|r| r.actual).collect(),
                r.iter().map(|r| r.subject_id.clone()).collect(),
            )
        };
        Ok((set(Target::Sbp)?, set(Target::Dbp)?))
    }

    pub fn evaluate(&self) -> Result<EvaluationPair> {
        let (s, d) = self.prediction_sets()?;
        let bundle = eval::build_report(&s, &d).map_err(|e| e.in_stage("evaluate"))?;
        let file = ReportFile {
            config_hash: self.hash.clone(),
            reports: bundle.reports.clone(),
        };
        self.emit("evaluate", art::REPORT_JSON, &art::json_bytes(&file)?)?;
        Ok(bundle.reports)
    }

    /// Every upstream artifact must come from the current config and be
    /// unchanged since it was written.
    pub fn check_lineage(&self, names: &[String]) -> Result<()> {
        let m = Manifest::load(self.out())?.ok_or_else(|| Error::Lineage("no manifest in output directory".into()))?;
        for name in names {
            let e = m
                .artifacts
                .get(name)
                .ok_or_else(|| Error::Lineage(format!("{name} is not recorded in the manifest")))?;
            if e.config_hash != self.hash {
                return Err(Error::Lineage(format!(
                    "{name} was produced by config {} but the current config is {}",
                    &e.config_hash[..12],
                    &self.hash[..12]
                )));
            }
            let bytes = fs::read(self.path(name))?;
            if art::sha256_hex(&bytes) != e.sha256 {
                return Err(Error::Lineage(format!("{name} changed after `{}` wrote it", e.stage)));
            }
        }
        Ok(())
    }

    pub fn report(&self) -> Result<String> {
        let report_path = self.require(art::REPORT_JSON, "evaluate")?;
        let mut upstream: Vec<String> = vec![art::FEATURES.into(), art::SELECTION.into()];
        upstream.extend(Target::BOTH.map(art::model_file));
        upstream.extend([art::PREDICTIONS.into(), art::REPORT_JSON.into()]);
        self.check_lineage(&upstream)?;
        let stored: ReportFile = art::read_json(&report_path)?;
        let (s, d) = self.prediction_sets()?;
        let bundle = eval::build_report(&s, &d)?;
        if bundle.reports != stored.reports {
            return Err(Error::Lineage("report.json does not match predictions.csv".into()));
        }
        let cv = self.per_target::<CvReport>(art::CV)?;
        let sel = self.per_target::<SelectionEntry>(art::SELECTION)?;
        let md = render_markdown(self, &bundle.reports, &cv, &sel);
        self.emit("report", art::ERRORS_CSV, bundle.records_csv.as_bytes())?;
        self.emit("report", &art::scatter_file(Target::Sbp), bundle.scatter_sbp_csv.as_bytes())?;
        self.emit("report", &art::scatter_file(Target::Dbp), bundle.scatter_dbp_csv.as_bytes())?;
        self.emit("report", art::REPORT_MD, md.as_bytes())?;
        Ok(md)
    }

    pub fn run_all(&self) -> Result<EvaluationPair> {
        self.ingest()?;
        self.qc()?;
        self.extract()?;
        self.select(&Target::BOTH)?;
        if self.config.model.tune && self.config.model.kind == ModelKind::Gpr {
            self.tune(&Target::BOTH)?;
        } else {
            self.train(&Target::BOTH)?;
        }
        self.predict(&Target::BOTH)?;
        let reports = self.evaluate()?;
        self.report()?;
        Ok(reports)
    }
}

fn render_markdown(
    p: &Pipeline,
    r: &EvaluationPair,
    cv: &BTreeMap<Target, CvReport>,
    sel: &BTreeMap<Target, SelectionEntry>,
) -> String {
    let mut s = String::new();
    let pair = [(Target::Sbp, &r.sbp), (Target::Dbp, &r.dbp)];
    let _ = writeln!(s, "# Blood pressure estimation report\n");
    let _ = writeln!(s, "Config `{}`, seed {}, model {:?}.\n", &p.hash[..12], p.config.seed, p.config.model.kind);
    let _ = writeln!(s, "## Held-out test set\n");
    let _ = writeln!(s, "| Target | Records | Subjects | MAE | MSE | RMSE | R |");
    let _ = writeln!(s, "|---|---|---|---|---|---|---|");
    for (t, e) in pair {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {:.2} | {:.2} | {:.2} | {:.3}{} |",
            t.as_str().to_uppercase(),
            e.n_records,
            e.n_subjects,
            e.mae,
            e.mse,
            e.rmse,
            e.r,
            if e.worse_than_baseline { " (below baseline)" } else { "" }
        );
    }
    if !cv.is_empty() {
        let _ = writeln!(s, "\n## Cross-validation on the training set\n");
        let _ = writeln!(s, "| Target | Folds | MAE | RMSE | R |");
        let _ = writeln!(s, "|---|---|---|---|---|");
        for (t, c) in cv {
            let a = &c.aggregate;
            let _ = writeln!(s, "| {} | {} | {:.2} | {:.2} | {:.3} |", t.as_str().to_uppercase(), c.k, a.mae, a.rmse, a.r);
        }
    }
    let _ = writeln!(s, "\n## AAMI\n");
    let _ = writeln!(s, "| Target | Mean error | SD | Subjects | Verdict |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for (t, e) in pair {
        let a = &e.aami;
        let _ = writeln!(
            s,
            "| {} | {:.2} | {:.2} | {} | {} |",
            t.as_str().to_uppercase(),
            a.mean_error,
            a.sd_error,
            a.n_subjects,
            if a.pass { "pass" } else { "fail" }
        );
    }
    let _ = writeln!(s, "\n## BHS\n");
    let _ = writeln!(s, "| Target | <=5 mmHg | <=10 mmHg | <=15 mmHg | Grade |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for (t, e) in pair {
        let b = &e.bhs;
        let _ = writeln!(
            s,
            "| {} | {:.1}% | {:.1}% | {:.1}% | {} |",
            t.as_str().to_uppercase(),
            b.pct_le_5,
            b.pct_le_10,
            b.pct_le_15,
            b.grade
        );
    }
    if !sel.is_empty() {
        let _ = writeln!(s, "\n## Selected features\n");
        for (t, e) in sel {
            let _ = writeln!(s, "- {}: {}", t.as_str().to_uppercase(), e.chosen_names.join(", "));
        }
    }
    let _ = writeln!(
        s,
        "\nScatter data: `{}`, `{}`.",
        art::scatter_file(Target::Sbp),
        art::scatter_file(Target::Dbp)
    );
    s
}

//! Error metrics and grading against the AAMI and BHS protocols.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::Target;
use crate::error::{Error, Result};
use crate::stats;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// AAMI limits: |mean error| and error SD in mmHg, and the minimum subject count.
pub const AAMI_MAX_MEAN: f64 = 5.0;
pub const AAMI_MAX_SD: f64 = 8.0;
pub const AAMI_MIN_SUBJECTS: usize = 85;

/// BHS cumulative percentage requirements at 5, 10 and 15 mmHg.
pub const BHS_TABLE: [(BhsGrade, [f64; 3]); 3] = [
    (BhsGrade::A, [60.0, 85.0, 95.0]),
    (BhsGrade::B, [50.0, 75.0, 90.0]),
    (BhsGrade::C, [40.0, 65.0, 85.0]),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub predicted: Vec<f64>,
    pub actual: Vec<f64>,
    pub subject_ids: Vec<String>,
}

impl PredictionSet {
    pub fn new(predicted: Vec<f64>, actual: Vec<f64>, subject_ids: Vec<String>) -> Result<Self> {
        let p = Self {
            predicted,
            actual,
            subject_ids,
        };
        p.validate()?;
        Ok(p)
    }

    /// Every record gets its own subject id.
    pub fn anonymous(predicted: Vec<f64>, actual: Vec<f64>) -> Result<Self> {
        let ids = (0..actual.len()).map(|i| i.to_string()).collect();
        Self::new(predicted, actual, ids)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.actual.len();
        if n == 0 {
            return Err(Error::Report("prediction set is empty".into()));
        }
        if self.predicted.len() != n || self.subject_ids.len() != n {
            return Err(Error::Report(format!(
                "prediction set lengths differ: {} predicted, {} actual, {} subject ids",
                self.predicted.len(),
                n,
                self.subject_ids.len()
            )));
        }
        if self.predicted.iter().chain(&self.actual).any(|v| !v.is_finite()) {
            return Err(Error::Report("prediction set has a non-finite value".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.actual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actual.is_empty()
    }

    /// Signed errors, predicted minus actual.
    pub fn errors(&self) -> Vec<f64> {
        self.predicted.iter().zip(&self.actual).map(|(p, a)| p - a).collect()
    }

    pub fn n_subjects(&self) -> usize {
        self.subject_ids.iter().collect::<BTreeSet<_>>().len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub r: f64,
    /// The model did worse than predicting the mean; `r` was set to 0.
    pub worse_than_baseline: bool,
}

/// MAE, MSE and RMSE; defined for a single record.
pub fn error_metrics(p: &PredictionSet) -> Result<(f64, f64, f64)> {
    p.validate()?;
    let n = p.len() as f64;
    let mut abs = 0.0;
    let mut sq = 0.0;
    for e in p.errors() {
        abs += e.abs();
        sq += e * e;
    }
    let mse = sq / n;
    Ok((abs / n, mse, mse.sqrt()))
}

pub fn regression_metrics(p: &PredictionSet) -> Result<Metrics> {
    let (mae, mse, rmse) = error_metrics(p)?;
    let mean = stats::mean(&p.actual);
    let baseline = p.actual.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / p.len() as f64;
    if !(baseline > 0.0) {
        return Err(Error::Report("R is undefined: actual values are constant".into()));
    }
    let worse = mse > baseline;
    let r = if worse { 0.0 } else { (1.0 - mse / baseline).sqrt() };
    Ok(Metrics {
        mae,
        mse,
        rmse,
        r,
        worse_than_baseline: worse,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AamiVerdict {
    pub mean_error: f64,
    pub sd_error: f64,
    pub n_subjects: usize,
    pub mean_ok: bool,
    pub sd_ok: bool,
    pub subjects_ok: bool,
    pub pass: bool,
}

pub fn aami_verdict(mean_error: f64, sd_error: f64, n_subjects: usize) -> AamiVerdict {
    let mean_ok = mean_error.abs() <= AAMI_MAX_MEAN;
    let sd_ok = sd_error <= AAMI_MAX_SD;
    let subjects_ok = n_subjects >= AAMI_MIN_SUBJECTS;
    AamiVerdict {
        mean_error,
        sd_error,
        n_subjects,
        mean_ok,
        sd_ok,
        subjects_ok,
        pass: mean_ok && sd_ok && subjects_ok,
    }
}

/// Sample SD of the signed errors; a single record has SD 0.
pub fn aami_check(p: &PredictionSet) -> Result<AamiVerdict> {
    p.validate()?;
    let e = p.errors();
    let sd = if e.len() > 1 { stats::sample_std(&e) } else { 0.0 };
    Ok(aami_verdict(stats::mean(&e), sd, p.n_subjects()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BhsGrade {
    A,
    B,
    C,
    #[serde(rename = "fail")]
    Fail,
}

impl fmt::Display for BhsGrade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BhsGrade::A => "A",
            BhsGrade::B => "B",
            BhsGrade::C => "C",
            BhsGrade::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhsResult {
    pub grade: BhsGrade,
    pub pct_le_5: f64,
    pub pct_le_10: f64,
    pub pct_le_15: f64,
}

pub fn grade_from_percentages(pct: [f64; 3]) -> BhsGrade {
    BHS_TABLE
        .iter()
        .find(|(_, need)| pct.iter().zip(need).all(|(p, n)| p >= n))
        .map_or(BhsGrade::Fail, |(g, _)| *g)
}

pub fn bhs_grade(p: &PredictionSet) -> Result<BhsResult> {
    p.validate()?;
    let e = p.errors();
    let n = e.len() as f64;
    let pct = |t: f64| 100.0 * e.iter().filter(|v| v.abs() <= t).count() as f64 / n;
    let pcts = [pct(5.0), pct(10.0), pct(15.0)];
    Ok(BhsResult {
        grade: grade_from_percentages(pcts),
        pct_le_5: pcts[0],
        pct_le_10: pcts[1],
        pct_le_15: pcts[2],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub target: Target,
    pub n_records: usize,
    pub n_subjects: usize,
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub r: f64,
    pub worse_than_baseline: bool,
    pub error_mean: f64,
    pub error_sd: f64,
    pub aami: AamiVerdict,
    pub bhs: BhsResult,
}

pub fn evaluate(target: Target, p: &PredictionSet) -> Result<EvaluationReport> {
    let m = regression_metrics(p)?;
    let aami = aami_check(p)?;
    Ok(EvaluationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        target,
        n_records: p.len(),
        n_subjects: p.n_subjects(),
        mae: m.mae,
        mse: m.mse,
        rmse: m.rmse,
        r: m.r,
        worse_than_baseline: m.worse_than_baseline,
        error_mean: aami.mean_error,
        error_sd: aami.sd_error,
        bhs: bhs_grade(p)?,
        aami,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationPair {
    pub sbp: EvaluationReport,
    pub dbp: EvaluationReport,
}

/// Rendered report: JSON of both evaluations, a per-record CSV and one
/// actual-vs-predicted CSV per target.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub reports: EvaluationPair,
    pub json: String,
    pub records_csv: String,
    pub scatter_sbp_csv: String,
    pub scatter_dbp_csv: String,
}

fn csv_string(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

fn scatter_csv(p: &PredictionSet) -> Result<String> {
    csv_string(
        &["actual", "predicted"],
        p.actual.iter().zip(&p.predicted).map(|(a, q)| vec![a.to_string(), q.to_string()]),
    )
}

pub fn build_report(sbp: &PredictionSet, dbp: &PredictionSet) -> Result<ReportBundle> {
    let reports = EvaluationPair {
        sbp: evaluate(Target::Sbp, sbp)?,
        dbp: evaluate(Target::Dbp, dbp)?,
    };
    let json = serde_json::to_string_pretty(&reports)?;
    let rows = [(Target::Sbp, sbp), (Target::Dbp, dbp)].into_iter().flat_map(|(t, p)| {
        (0..p.len()).map(move |i| {
            vec![
                t.to_string(),
                p.subject_ids[i].clone(),
                p.actual[i].to_string(),
                p.predicted[i].to_string(),
                (p.predicted[i] - p.actual[i]).to_string(),
            ]
        })
    });
    Ok(ReportBundle {
        json,
        records_csv: csv_string(&["target", "subject_id", "actual", "predicted", "error"], rows)?,
        scatter_sbp_csv: scatter_csv(sbp)?,
        scatter_dbp_csv: scatter_csv(dbp)?,
        reports,
    })
}

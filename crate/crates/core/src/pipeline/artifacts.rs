use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::StageSeeds;
use crate::dataset::Target;
use crate::error::{Error, Result};
use crate::features::{FEATURE_NAMES, N_FEATURES};

pub const RECORDS: &str = "records.jsonl";
pub const ACCEPTED: &str = "accepted.jsonl";
pub const REJECTED: &str = "rejected.jsonl";
pub const QC: &str = "qc.json";
pub const SPLIT: &str = "split.json";
pub const FEATURES: &str = "features.csv";
pub const FIDUCIALS: &str = "fiducials.jsonl";
pub const EXTRACT: &str = "extract.json";
pub const SELECTION: &str = "selection.json";
pub const CV: &str = "cv.json";
pub const TUNE: &str = "tune.json";
pub const PREDICTIONS: &str = "predictions.csv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MD: &str = "report.md";
pub const ERRORS_CSV: &str = "errors.csv";
pub const MANIFEST: &str = "manifest.json";

pub fn model_file(target: Target) -> String {
    format!("model.{target}.bin")
}

pub fn scatter_file(target: Target) -> String {
    format!("scatter.{target}.csv")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub stage: String,
    pub sha256: String,
    pub config_hash: String,
}

/// Replay record for an output directory. Contains no timestamps so that
/// identical runs write identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub seeds: StageSeeds,
    pub config: serde_json::Value,
    pub artifacts: BTreeMap<String, ArtifactEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Option<Manifest>> {
        let p = dir.join(MANIFEST);
        if !p.exists() {
            return Ok(None);
        }
        Ok(Some(serde_json::from_str(&fs::read_to_string(p)?)?))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

pub fn write_jsonl<T: Serialize>(items: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for it in items {
        serde_json::to_writer(&mut out, it)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for line in f.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v)?;
    s.push(b'\n');
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Train,
    Test,
}

/// One row of features.csv.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub subject_id: String,
    pub segment_id: u32,
    pub side: Side,
    pub sbp: f64,
    pub dbp: f64,
    pub values: Vec<f64>,
}

impl FeatureRow {
    pub fn target(&self, t: Target) -> f64 {
        match t {
            Target::Sbp => self.sbp,
            Target::Dbp => self.dbp,
        }
    }
}

const META_COLUMNS: [&str; 5] = ["subject_id", "segment_id", "split", "sbp", "dbp"];

pub fn write_features_csv(rows: &[FeatureRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(META_COLUMNS.iter().chain(FEATURE_NAMES.iter()))?;
    for r in rows {
        let side = match r.side {
            Side::Train => "train",
            Side::Test => "test",
        };
        let mut rec = vec![
            r.subject_id.clone(),
            r.segment_id.to_string(),
            side.to_string(),
            r.sbp.to_string(),
            r.dbp.to_string(),
        ];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn read_features_csv(path: &Path) -> Result<Vec<FeatureRow>> {
    let mut rd = csv::Reader::from_path(path)?;
    let header: Vec<String> = rd.headers()?.iter().map(String::from).collect();
    let expected: Vec<&str> = META_COLUMNS.iter().chain(FEATURE_NAMES.iter()).copied().collect();
    if header != expected {
        return Err(Error::Schema(
            expected
                .iter()
                .filter(|c| !header.iter().any(|h| h == *c))
                .map(|c| c.to_string())
                .collect(),
        ));
    }
    let num = |s: &str, line: usize| {
        s.parse::<f64>().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            offset: line,
            token: s.to_string(),
        })
    };
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let side = match &rec[2] {
            "train" => Side::Train,
            "test" => Side::Test,
            other => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    offset: line,
                    token: other.to_string(),
                })
            }
        };
        let values = (5..5 + N_FEATURES).map(|j| num(&rec[j], line)).collect::<Result<Vec<_>>>()?;
        rows.push(FeatureRow {
            subject_id: rec[0].to_string(),
            segment_id: rec[1].parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                offset: line,
                token: rec[1].to_string(),
            })?,
            side,
            sbp: num(&rec[3], line)?,
            dbp: num(&rec[4], line)?,
            values,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub target: Target,
    pub subject_id: String,
    pub segment_id: u32,
    pub actual: f64,
    pub predicted: f64,
}

pub fn write_predictions_csv(rows: &[PredictionRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["target", "subject_id", "segment_id", "actual", "predicted"])?;
    for r in rows {
        w.write_record([
            r.target.to_string(),
            r.subject_id.clone(),
            r.segment_id.to_string(),
            r.actual.to_string(),
            r.predicted.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn read_predictions_csv(path: &Path) -> Result<Vec<PredictionRow>> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rd.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// Writes `bytes` to `dir/name` only through a temp file, so a crash never
/// leaves a half-written artifact under the final name.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_csv_round_trip_is_exact() {
        let row = FeatureRow {
            subject_id: "12".into(),
            segment_id: 3,
            side: Side::Test,
            sbp: 121.0,
            dbp: 77.5,
            values: (0..N_FEATURES).map(|i| (i as f64 + 0.1).sqrt() * 1e-3 - 0.2).collect(),
        };
        let dir = tempfile::tempdir().unwrap();
        let p = write_atomic(dir.path(), FEATURES, &write_features_csv(&[row.clone()]).unwrap()).unwrap();
        let back = read_features_csv(&p).unwrap();
        assert_eq!(back, vec![row]);
        let header = fs::read_to_string(&p).unwrap();
        let first = header.lines().next().unwrap();
        assert_eq!(first.split(',').count(), 5 + N_FEATURES);
    }

    #[test]
    fn predictions_round_trip() {
        let rows = vec![PredictionRow {
            target: Target::Dbp,
            subject_id: "4".into(),
            segment_id: 1,
            actual: 80.0,
            predicted: 78.123456789,
        }];
        let dir = tempfile::tempdir().unwrap();
        let p = write_atomic(dir.path(), PREDICTIONS, &write_predictions_csv(&rows).unwrap()).unwrap();
        assert_eq!(read_predictions_csv(&p).unwrap(), rows);
    }
}

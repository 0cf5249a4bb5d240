//! Loading PPG segments and subject demographics, skewness-based quality
//! screening and train/test splitting.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::stats;

/// Sample rate of the reference recordings.
pub const REFERENCE_SAMPLE_RATE_HZ: f64 = 1000.0;
/// Shortest segment accepted when assembling records.
pub const MIN_SIGNAL_LEN: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSignal {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    pub subject_id: String,
    pub segment_id: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    /// Encoding used in the feature vector.
    pub fn code(self) -> f64 {
        match self {
            Sex::Male => 0.0,
            Sex::Female => 1.0,
        }
    }

    fn parse(s: &str) -> Option<Sex> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "m" | "male" | "0" => Some(Sex::Male),
            "f" | "female" | "1" => Some(Sex::Female),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    pub sex: Sex,
    pub age_years: f64,
    pub height_cm: f64,
    pub weight_kg: f64,
    pub bmi_kg_m2: f64,
    /// From the subject table; feature extraction falls back to 60 / tpp when absent.
    pub heart_rate_bpm: Option<f64>,
}

pub fn bmi(weight_kg: f64, height_cm: f64) -> f64 {
    let h = height_cm / 100.0;
    weight_kg / (h * h)
}

impl Demographics {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("age", self.age_years),
            ("height", self.height_cm),
            ("weight", self.weight_kg),
            ("bmi", self.bmi_kg_m2),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Invariant(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if let Some(hr) = self.heart_rate_bpm {
            if !(hr.is_finite() && hr > 0.0) {
                return Err(Error::Invariant(format!("heart rate must be finite and > 0, got {hr}")));
            }
        }
        let expected = bmi(self.weight_kg, self.height_cm);
        if (self.bmi_kg_m2 - expected).abs() > 0.01 * expected {
            return Err(Error::Invariant(format!(
                "bmi {} differs from weight/height^2 = {expected:.3} by more than 1%",
                self.bmi_kg_m2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub sbp_mmhg: f64,
    pub dbp_mmhg: f64,
}

impl GroundTruth {
    pub fn new(sbp_mmhg: f64, dbp_mmhg: f64) -> Result<Self> {
        if !(sbp_mmhg > dbp_mmhg && dbp_mmhg > 0.0) {
            return Err(Error::Invariant(format!(
                "expected sbp > dbp > 0, got sbp={sbp_mmhg} dbp={dbp_mmhg}"
            )));
        }
        Ok(Self { sbp_mmhg, dbp_mmhg })
    }

    pub fn get(&self, target: Target) -> f64 {
        match target {
            Target::Sbp => self.sbp_mmhg,
            Target::Dbp => self.dbp_mmhg,
        }
    }
}

/// Regression target; SBP and DBP are always modelled separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Sbp,
    Dbp,
}

impl Target {
    pub const BOTH: [Target; 2] = [Target::Sbp, Target::Dbp];

    pub fn as_str(self) -> &'static str {
        match self {
            Target::Sbp => "sbp",
            Target::Dbp => "dbp",
        }
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sbp" => Ok(Target::Sbp),
            "dbp" => Ok(Target::Dbp),
            other => Err(Error::Argument(format!("unknown target {other:?}, expected sbp or dbp"))),
        }
    }
}

/// One row of the subject table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRow {
    pub subject_id: String,
    pub demo: Demographics,
    pub truth: GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpgRecord {
    pub signal: RawSignal,
    pub demo: Demographics,
    pub truth: GroundTruth,
}

impl PpgRecord {
    pub fn subject_id(&self) -> &str {
        &self.signal.subject_id
    }

    pub fn segment_id(&self) -> u32 {
        self.signal.segment_id
    }
}

/// Splits `"<subject>_<segment>.txt"` into its two parts.
pub fn parse_signal_file_name(path: &Path) -> Result<(String, u32)> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::FileName(path.to_path_buf()))?;
    let stem = name
        .strip_suffix(".txt")
        .ok_or_else(|| Error::FileName(path.to_path_buf()))?;
    let (subject, segment) = stem
        .rsplit_once('_')
        .ok_or_else(|| Error::FileName(path.to_path_buf()))?;
    if subject.is_empty() {
        return Err(Error::FileName(path.to_path_buf()));
    }
    let segment = segment
        .parse::<u32>()
        .map_err(|_| Error::FileName(path.to_path_buf()))?;
    Ok((subject.to_string(), segment))
}

/// Parses whitespace-separated amplitudes.
pub fn parse_samples(text: &str, path: &Path) -> Result<Vec<f64>> {
    let mut samples = Vec::with_capacity(2100);
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let token = &text[start..i];
        match token.parse::<f64>() {
            Ok(v) if v.is_finite() => samples.push(v),
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    offset: start,
                    token: token.to_string(),
                })
            }
        }
    }
    if samples.is_empty() {
        return Err(Error::EmptySignal(path.to_path_buf()));
    }
    Ok(samples)
}

pub fn parse_signal_file(path: &Path) -> Result<RawSignal> {
    let (subject_id, segment_id) = parse_signal_file_name(path)?;
    let text = fs::read_to_string(path)?;
    let samples = parse_samples(&text, path)?;
    Ok(RawSignal {
        samples,
        sample_rate_hz: REFERENCE_SAMPLE_RATE_HZ,
        subject_id,
        segment_id,
    })
}

/// Maps canonical column roles onto the header names used by a particular table export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMapping {
    pub subject_id: String,
    pub sex: String,
    pub age: String,
    pub height: String,
    pub weight: String,
    pub sbp: String,
    pub dbp: String,
    pub heart_rate: String,
    pub bmi: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            subject_id: "subject_id".into(),
            sex: "sex".into(),
            age: "age".into(),
            height: "height".into(),
            weight: "weight".into(),
            sbp: "sbp".into(),
            dbp: "dbp".into(),
            heart_rate: "hr".into(),
            bmi: "bmi".into(),
        }
    }
}

impl ColumnMapping {
    /// Header names of the public PPG-BP info sheet exported to CSV.
    pub fn ppg_bp() -> Self {
        Self {
            subject_id: "subject_ID".into(),
            sex: "Sex(M/F)".into(),
            age: "Age(year)".into(),
            height: "Height(cm)".into(),
            weight: "Weight(kg)".into(),
            sbp: "Systolic Blood Pressure(mmHg)".into(),
            dbp: "Diastolic Blood Pressure(mmHg)".into(),
            heart_rate: "Heart Rate(b/m)".into(),
            bmi: "BMI(kg/m^2)".into(),
        }
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        Ok(toml::from_str(&fs::read_to_string(path)?)?)
    }
}

fn parse_number(field: &str, column: &str, row: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Invariant(format!("row {row}: column {column:?} is not numeric: {field:?}")))
}

pub fn parse_subject_table(path: &Path, mapping: &ColumnMapping) -> Result<Vec<SubjectRow>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let position = |name: &str| headers.iter().position(|h| h == name);

    let required = [
        &mapping.subject_id,
        &mapping.sex,
        &mapping.age,
        &mapping.height,
        &mapping.weight,
        &mapping.sbp,
        &mapping.dbp,
    ];
    let missing: Vec<String> = required
        .iter()
        .filter(|name| position(name).is_none())
        .map(|name| name.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Schema(missing));
    }
    let col = |name: &str| position(name).expect("checked above");
    let (c_id, c_sex, c_age, c_h, c_w, c_sbp, c_dbp) = (
        col(&mapping.subject_id),
        col(&mapping.sex),
        col(&mapping.age),
        col(&mapping.height),
        col(&mapping.weight),
        col(&mapping.sbp),
        col(&mapping.dbp),
    );
    let c_hr = position(&mapping.heart_rate);
    let c_bmi = position(&mapping.bmi);

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2;
        let get = |c: usize| record.get(c).unwrap_or("");
        let optional = |c: Option<usize>, name: &str| -> Result<Option<f64>> {
            match c.map(get) {
                Some(s) if !s.trim().is_empty() => parse_number(s, name, row).map(Some),
                _ => Ok(None),
            }
        };
        let sex = Sex::parse(get(c_sex))
            .ok_or_else(|| Error::Invariant(format!("row {row}: unknown sex {:?}", get(c_sex))))?;
        let height_cm = parse_number(get(c_h), &mapping.height, row)?;
        let weight_kg = parse_number(get(c_w), &mapping.weight, row)?;
        let computed = bmi(weight_kg, height_cm);
        let bmi_kg_m2 = match optional(c_bmi, &mapping.bmi)? {
            Some(b) if (b - computed).abs() <= 0.01 * computed => b,
            Some(b) => {
                warn!("row {row}: bmi {b} inconsistent with height/weight, using {computed:.3}");
                computed
            }
            None => computed,
        };
        let demo = Demographics {
            sex,
            age_years: parse_number(get(c_age), &mapping.age, row)?,
            height_cm,
            weight_kg,
            bmi_kg_m2,
            heart_rate_bpm: optional(c_hr, &mapping.heart_rate)?,
        };
        demo.validate()
            .map_err(|e| Error::Invariant(format!("row {row}: {e}")))?;
        let truth = GroundTruth::new(
            parse_number(get(c_sbp), &mapping.sbp, row)?,
            parse_number(get(c_dbp), &mapping.dbp, row)?,
        )
        .map_err(|e| Error::Invariant(format!("row {row}: {e}")))?;
        rows.push(SubjectRow {
            subject_id: get(c_id).trim().to_string(),
            demo,
            truth,
        });
    }
    Ok(rows)
}

/// Reads every `<subject>_<segment>.txt` in `signal_dir` and links it to its
/// subject row. Records come back sorted by (subject, segment) with numeric
/// subject ids ordered numerically.
pub fn load_records(signal_dir: &Path, subjects: &[SubjectRow]) -> Result<Vec<PpgRecord>> {
    let by_id: HashMap<&str, &SubjectRow> =
        subjects.iter().map(|s| (s.subject_id.as_str(), s)).collect();
    let mut paths: Vec<PathBuf> = fs::read_dir(signal_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();

    let mut records = Vec::new();
    for path in paths {
        let signal = match parse_signal_file(&path) {
            Ok(s) => s,
            Err(Error::FileName(p)) => {
                warn!("skipping {}: not a segment file", p.display());
                continue;
            }
            Err(e) => return Err(e),
        };
        if signal.samples.len() < MIN_SIGNAL_LEN {
            warn!(
                "skipping {}: {} samples is below the {MIN_SIGNAL_LEN}-sample minimum",
                path.display(),
                signal.samples.len()
            );
            continue;
        }
        let Some(row) = by_id.get(signal.subject_id.as_str()) else {
            warn!("skipping {}: subject {} not in table", path.display(), signal.subject_id);
            continue;
        };
        records.push(PpgRecord {
            demo: row.demo.clone(),
            truth: row.truth,
            signal,
        });
    }
    records.sort_by(|a, b| record_order(a).cmp(&record_order(b)));
    Ok(records)
}

fn record_order(r: &PpgRecord) -> (u64, String, u32) {
    (
        r.subject_id().parse::<u64>().unwrap_or(u64::MAX),
        r.subject_id().to_string(),
        r.segment_id(),
    )
}

/// Skewness signal-quality index: population third standardized moment.
pub fn skewness_sqi(samples: &[f64]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::Length {
            needed: 3,
            got: samples.len(),
        });
    }
    let m2 = stats::central_moment(samples, 2);
    let scale = samples.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m2 <= (scale * 1e-12).powi(2) {
        return Err(Error::DegenerateSignal("constant signal has no skewness".into()));
    }
    Ok(stats::central_moment(samples, 3) / m2.powf(1.5))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Screened<T> {
    pub record: T,
    pub sqi: Option<f64>,
}

/// Partition records by `sqi >= threshold`, preserving order. Records whose
/// SQI cannot be computed are rejected.
pub fn qc_filter(records: Vec<PpgRecord>, threshold: f64) -> (Vec<Screened<PpgRecord>>, Vec<Screened<PpgRecord>>) {
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for record in records {
        let sqi = skewness_sqi(&record.signal.samples).ok();
        let item = Screened { record, sqi };
        match sqi {
            Some(s) if s >= threshold => accepted.push(item),
            _ => rejected.push(item),
        }
    }
    (accepted, rejected)
}

/// Largest threshold that keeps at least `keep` signals: the `keep`-th highest SQI.
pub fn calibrate_threshold(sqis: &[f64], keep: usize) -> Result<f64> {
    if keep == 0 || keep > sqis.len() {
        return Err(Error::Argument(format!(
            "cannot keep {keep} of {} signals",
            sqis.len()
        )));
    }
    let mut s = sqis.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s[keep - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    BySignal,
    BySubject,
}

fn check_fraction(test_fraction: f64) -> Result<()> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    Ok(())
}

/// Seeded random split; both halves keep input order.
pub fn split_train_test<T>(items: Vec<T>, test_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    check_fraction(test_fraction)?;
    if items.is_empty() {
        return Err(Error::Argument("cannot split an empty list".into()));
    }
    let n = items.len();
    let n_test = (test_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    rng::shuffle(&mut order, &mut rng::seeded(seed));
    let test_set: BTreeSet<usize> = order[..n_test].iter().copied().collect();
    Ok(partition_by(items, |i| test_set.contains(&i)))
}

/// Subject-disjoint split: whole subjects move to the test side until it holds
/// at least `round(test_fraction * n)` records.
pub fn split_by_subject<T>(
    items: Vec<T>,
    subject_of: impl Fn(&T) -> String,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    check_fraction(test_fraction)?;
    if items.is_empty() {
        return Err(Error::Argument("cannot split an empty list".into()));
    }
    let n_test = (test_fraction * items.len() as f64).round() as usize;
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, item) in items.iter().enumerate() {
        groups.entry(subject_of(item)).or_default().push(i);
    }
    let mut subjects: Vec<&Vec<usize>> = groups.values().collect();
    rng::shuffle(&mut subjects, &mut rng::seeded(seed));
    let mut test_set = BTreeSet::new();
    for members in subjects {
        if test_set.len() >= n_test {
            break;
        }
        test_set.extend(members.iter().copied());
    }
    Ok(partition_by(items, |i| test_set.contains(&i)))
}

fn partition_by<T>(items: Vec<T>, is_test: impl Fn(usize) -> bool) -> (Vec<T>, Vec<T>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, item) in items.into_iter().enumerate() {
        if is_test(i) {
            test.push(item);
        } else {
            train.push(item);
        }
    }
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn reads_reference_length_segment() {
        let dir = tempfile::tempdir().unwrap();
        let body: Vec<String> = (0..2100).map(|i| format!("{}", 2000 + i % 7)).collect();
        let p = write(dir.path(), "2_1.txt", &body.join("\t"));
        let s = parse_signal_file(&p).unwrap();
        assert_eq!(s.samples.len(), 2100);
        assert_eq!(s.subject_id, "2");
        assert_eq!(s.segment_id, 1);
        assert_eq!(s.sample_rate_hz, 1000.0);
    }

    #[test]
    fn zeros_read_back_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "7_3.txt", "0 0 0");
        assert_eq!(parse_signal_file(&p).unwrap().samples, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn malformed_token_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "1_1.txt", "1.0 2.0 1.5e3x 4");
        match parse_signal_file(&p) {
            Err(Error::Parse { offset, token, .. }) => {
                assert_eq!(offset, 8);
                assert_eq!(token, "1.5e3x");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "1_1.txt", " \n\t ");
        assert!(matches!(parse_signal_file(&p), Err(Error::EmptySignal(_))));
    }

    #[test]
    fn bad_file_name_is_rejected() {
        assert!(parse_signal_file_name(Path::new("foo.txt")).is_err());
        assert!(parse_signal_file_name(Path::new("3_x.txt")).is_err());
        assert_eq!(
            parse_signal_file_name(Path::new("/a/b/12_3.txt")).unwrap(),
            ("12".to_string(), 3)
        );
    }

    const HEADER: &str = "subject_id,sex,age,height,weight,sbp,dbp,hr,bmi\n";

    #[test]
    fn subject_table_recomputes_missing_bmi() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "s.csv", &format!("{HEADER}1,Female,45,160,64,120,80,70,\n"));
        let rows = parse_subject_table(&p, &ColumnMapping::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].demo.bmi_kg_m2 - 25.0).abs() < 1e-12);
        assert_eq!(rows[0].demo.sex, Sex::Female);
        assert_eq!(rows[0].demo.heart_rate_bpm, Some(70.0));
    }

    #[test]
    fn subject_table_rejects_inverted_pressures() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "s.csv", &format!("{HEADER}1,M,45,160,64,70,80,70,25\n"));
        assert!(matches!(
            parse_subject_table(&p, &ColumnMapping::default()),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn subject_table_lists_missing_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "s.csv", "subject_id,sex,age,height\n1,M,40,170\n");
        match parse_subject_table(&p, &ColumnMapping::default()) {
            Err(Error::Schema(missing)) => assert_eq!(missing, vec!["weight", "sbp", "dbp"]),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn skewness_of_symmetric_and_skewed() {
        assert!(skewness_sqi(&[-1.0, 0.0, 1.0]).unwrap().abs() < 1e-15);
        // [0,0,0,1]: mean 1/4, m2 = 3/16, m3 = 3/32 -> g1 = (3/32)/(3/16)^1.5
        let expected = (3.0 / 32.0) / (3.0f64 / 16.0).powf(1.5);
        assert!((skewness_sqi(&[0.0, 0.0, 0.0, 1.0]).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 1.1547005383792515).abs() < 1e-12);
        assert!(matches!(skewness_sqi(&[5.0, 5.0, 5.0]), Err(Error::DegenerateSignal(_))));
    }

    fn record(subject: &str, seg: u32, samples: Vec<f64>) -> PpgRecord {
        PpgRecord {
            signal: RawSignal {
                samples,
                sample_rate_hz: 1000.0,
                subject_id: subject.into(),
                segment_id: seg,
            },
            demo: Demographics {
                sex: Sex::Male,
                age_years: 40.0,
                height_cm: 170.0,
                weight_kg: 70.0,
                bmi_kg_m2: bmi(70.0, 170.0),
                heart_rate_bpm: None,
            },
            truth: GroundTruth::new(120.0, 80.0).unwrap(),
        }
    }

    #[test]
    fn qc_extreme_thresholds() {
        let recs = vec![
            record("1", 1, vec![0.0, 0.0, 1.0]),
            record("2", 1, vec![0.0, 1.0, 1.0]),
        ];
        let (a, r) = qc_filter(recs.clone(), f64::NEG_INFINITY);
        assert_eq!((a.len(), r.len()), (2, 0));
        let (a, r) = qc_filter(recs.clone(), f64::INFINITY);
        assert_eq!((a.len(), r.len()), (0, 2));
        let (a, r) = qc_filter(recs, 0.0);
        assert_eq!((a.len(), r.len()), (1, 1));
        assert_eq!(a[0].record.subject_id(), "1");
        let (a, r) = qc_filter(Vec::new(), 0.0);
        assert!(a.is_empty() && r.is_empty());
    }

    #[test]
    fn calibration_keeps_requested_count() {
        let sqis = [0.3, -0.1, 0.9, 0.5, 0.2];
        let t = calibrate_threshold(&sqis, 3).unwrap();
        assert_eq!(t, 0.3);
        assert_eq!(sqis.iter().filter(|&&s| s >= t).count(), 3);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let items: Vec<usize> = (0..222).collect();
        let (train, test) = split_train_test(items.clone(), 0.15, 42).unwrap();
        assert_eq!((train.len(), test.len()), (189, 33));
        let again = split_train_test(items, 0.15, 42).unwrap();
        assert_eq!((train, test), again);

        let (train, test) = split_train_test(vec![1], 0.15, 1).unwrap();
        assert_eq!((train.len(), test.len()), (1, 0));
        assert!(split_train_test(vec![1, 2], 1.0, 1).is_err());
        assert!(split_train_test(vec![1, 2], 0.0, 1).is_err());
    }

    #[test]
    fn subject_split_is_disjoint() {
        let items: Vec<(u32, u32)> = (0..60).flat_map(|s| (0..3).map(move |g| (s, g))).collect();
        let (train, test) = split_by_subject(items, |x| x.0.to_string(), 0.15, 3).unwrap();
        assert_eq!(train.len() + test.len(), 180);
        assert!(test.len() >= 27);
        let test_subjects: BTreeSet<u32> = test.iter().map(|x| x.0).collect();
        assert!(train.iter().all(|x| !test_subjects.contains(&x.0)));
    }

    proptest! {
        #[test]
        fn qc_partition_is_exhaustive(threshold in -3.0f64..3.0, seeds in proptest::collection::vec(0u64..1000, 0..12)) {
            let recs: Vec<PpgRecord> = seeds.iter().enumerate().map(|(i, s)| {
                let samples = (0..20).map(|k| ((k as u64 * 7919 + s) % 13) as f64).collect();
                record(&i.to_string(), 1, samples)
            }).collect();
            let n = recs.len();
            let (a, r) = qc_filter(recs, threshold);
            prop_assert_eq!(a.len() + r.len(), n);
        }

        #[test]
        fn sqi_affine_invariant(xs in proptest::collection::vec(-10.0f64..10.0, 5..60), a in 0.01f64..100.0, b in -50.0f64..50.0) {
            prop_assume!(stats::central_moment(&xs, 2) > 1e-3);
            let s0 = skewness_sqi(&xs).unwrap();
            let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let s1 = skewness_sqi(&ys).unwrap();
            prop_assert!((s0 - s1).abs() < 1e-9);
        }
    }
}

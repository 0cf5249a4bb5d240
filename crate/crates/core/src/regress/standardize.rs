use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Per-column z-scoring fitted on training rows. Zero-variance columns are
/// dropped from the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub n_input: usize,
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = x.first() else {
            return Err(Error::Argument("cannot standardize an empty matrix".into()));
        };
        let p = first.len();
        check_width(x, p)?;
        let mut s = Standardizer {
            n_input: p,
            kept: Vec::new(),
            dropped: Vec::new(),
            mean: Vec::new(),
            std: Vec::new(),
        };
        for j in 0..p {
            let col: Vec<f64> = x.iter().map(|r| r[j]).collect();
            let sd = if col.len() > 1 { stats::sample_std(&col) } else { 0.0 };
            if sd > 0.0 && sd.is_finite() {
                s.kept.push(j);
                s.mean.push(stats::mean(&col));
                s.std.push(sd);
            } else {
                s.dropped.push(j);
            }
        }
        if !s.dropped.is_empty() {
            log::warn!("dropping zero-variance columns {:?}", s.dropped);
        }
        Ok(s)
    }

    pub fn n_output(&self) -> usize {
        self.kept.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_input {
            return Err(Error::Shape {
                expected: self.n_input,
                got: row.len(),
            });
        }
        Ok(self
            .kept
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&j, (m, s))| (row[j] - m) / s)
            .collect())
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }
}

fn check_width(x: &[Vec<f64>], p: usize) -> Result<()> {
    match x.iter().find(|r| r.len() != p) {
        Some(r) => Err(Error::Shape {
            expected: p,
            got: r.len(),
        }),
        None => Ok(()),
    }
}

/// Fits on `train` and applies the same statistics to every matrix in `others`.
pub fn standardize_fit_apply(
    train: &[Vec<f64>],
    others: &[&[Vec<f64>]],
) -> Result<(Standardizer, Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>)> {
    let s = Standardizer::fit(train)?;
    let t = s.transform(train)?;
    let o = others.iter().map(|m| s.transform(m)).collect::<Result<_>>()?;
    Ok((s, t, o))
}

/// Target centring and scaling; a constant target keeps unit scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub mean: f64,
    pub std: f64,
}

impl TargetScale {
    pub fn fit(y: &[f64]) -> Self {
        let sd = if y.len() > 1 { stats::sample_std(y) } else { 0.0 };
        TargetScale {
            mean: stats::mean(y),
            std: if sd > 0.0 { sd } else { 1.0 },
        }
    }

    pub fn forward(&self, y: f64) -> f64 {
        (y - self.mean) / self.std
    }

    pub fn inverse(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{self, Metrics, PredictionSet};
use crate::rng;

pub trait Predictor {
    fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>>;
}

pub trait Trainer: Sync {
    type Model: Predictor + Send;
    fn train(&self, x: &[Vec<f64>], y: &[f64]) -> Result<Self::Model>;
}

/// Fold id per row: a seeded shuffle cut into `k` contiguous runs whose
/// sizes differ by at most one.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(Error::Argument(format!("k-fold needs 2 <= k <= {n}, got {k}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    rng::shuffle(&mut order, &mut rng::seeded(seed));
    let mut fold = vec![0; n];
    let (base, extra) = (n / k, n % k);
    let mut pos = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        for &row in &order[pos..pos + size] {
            fold[row] = f;
        }
        pos += size;
    }
    Ok(fold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n: usize,
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    /// Absent when the fold's targets are constant.
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub assignment: Vec<usize>,
    pub folds: Vec<FoldMetrics>,
    /// Metrics of the pooled out-of-fold predictions.
    pub aggregate: Metrics,
    pub out_of_fold: Vec<f64>,
}

fn take(x: &[Vec<f64>], rows: &[usize]) -> Vec<Vec<f64>> {
    rows.iter().map(|&i| x[i].clone()).collect()
}

pub fn kfold_cv<T: Trainer>(x: &[Vec<f64>], y: &[f64], k: usize, trainer: &T, seed: u64) -> Result<CvReport> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!("{} rows but {} targets", x.len(), y.len())));
    }
    let assignment = fold_assignment(y.len(), k, seed)?;
    let per_fold: Vec<(Vec<usize>, Vec<f64>)> = (0..k)
        .into_par_iter()
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| assignment[i] == f);
            let ty: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let model = trainer.train(&take(x, &train), &ty)?;
            let pred = model.predict(&take(x, &test))?;
            Ok((test, pred))
        })
        .collect::<Result<_>>()?;

    let mut out_of_fold = vec![0.0; y.len()];
    let mut folds = Vec::with_capacity(k);
    for (f, (rows, pred)) in per_fold.into_iter().enumerate() {
        let actual: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
        let set = PredictionSet::anonymous(pred.clone(), actual)?;
        let (mae, mse, rmse) = eval::error_metrics(&set)?;
        folds.push(FoldMetrics {
            fold: f,
            n: rows.len(),
            mae,
            mse,
            rmse,
            r: eval::regression_metrics(&set).ok().map(|m| m.r),
        });
        for (i, p) in rows.into_iter().zip(pred) {
            out_of_fold[i] = p;
        }
    }
    let aggregate = eval::regression_metrics(&PredictionSet::anonymous(out_of_fold.clone(), y.to_vec())?)?;
    Ok(CvReport {
        k,
        seed,
        assignment,
        folds,
        aggregate,
        out_of_fold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Looks up the training target of an identical row.
    struct Memorize;
    struct Table(Vec<(Vec<f64>, f64)>);

    impl Predictor for Table {
        fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
            Ok(x.iter()
                .map(|r| self.0.iter().find(|(k, _)| k == r).map_or(f64::NAN, |e| e.1))
                .collect())
        }
    }

    impl Trainer for Memorize {
        type Model = Table;
        fn train(&self, x: &[Vec<f64>], y: &[f64]) -> Result<Table> {
            Ok(Table(x.iter().cloned().zip(y.iter().copied()).collect()))
        }
    }

    #[test]
    fn partition_and_sizes() {
        let a = fold_assignment(4, 2, 3).unwrap();
        assert_eq!(a.iter().filter(|&&f| f == 0).count(), 2);
        let a = fold_assignment(23, 10, 1).unwrap();
        let mut sizes = vec![0; 10];
        for f in &a {
            sizes[*f] += 1;
        }
        assert!(sizes.iter().all(|&s| s == 2 || s == 3));
        assert_eq!(sizes.iter().sum::<usize>(), 23);
        assert_eq!(a, fold_assignment(23, 10, 1).unwrap());
        assert!(fold_assignment(3, 4, 0).is_err());
    }

    #[test]
    fn leave_one_out_on_duplicated_rows() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..6 {
            for _ in 0..2 {
                x.push(vec![i as f64]);
                y.push(i as f64 * 10.0);
            }
        }
        let rep = kfold_cv(&x, &y, 12, &Memorize, 4).unwrap();
        assert_eq!(rep.aggregate.rmse, 0.0);
        assert_eq!(rep.folds.len(), 12);
    }

    #[test]
    fn folds_never_see_their_own_rows() {
        // A memorizer with unique rows can only answer NaN out of fold.
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(kfold_cv(&x, &y, 5, &Memorize, 0).is_err());
    }
}

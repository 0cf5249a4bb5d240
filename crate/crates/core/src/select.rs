//! Filter-style feature ranking: RReliefF, correlation-based selection (CFS)
//! and minimum-redundancy maximum-relevance (mRMR, MID form).

use serde::{Deserialize, Serialize};

use crate::dataset::Target;
use crate::error::{Error, Result};
use crate::rng;
use crate::stats;

/// Row-major design matrix with one regression target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub column_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<Vec<f64>>, target: Vec<f64>, column_names: Vec<String>) -> Result<Self> {
        let m = Self {
            rows,
            target,
            column_names,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.len() != self.target.len() {
            return Err(Error::Shape {
                expected: self.rows.len(),
                got: self.target.len(),
            });
        }
        let p = self.column_names.len();
        for (i, r) in self.rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::Shape {
                    expected: p,
                    got: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invariant(format!("row {i} has a non-finite value")));
            }
        }
        if self.target.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invariant("target has a non-finite value".into()));
        }
        Ok(())
    }

    fn require_rows(&self, needed: usize) -> Result<()> {
        self.validate()?;
        if self.n_rows() < needed {
            return Err(Error::Length {
                needed,
                got: self.n_rows(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Relieff,
    Cfs,
    Mrmr,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Relieff => "relieff",
            Method::Cfs => "cfs",
            Method::Mrmr => "mrmr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: Method,
    /// Column indices, best first; covers every column.
    pub ranked: Vec<usize>,
    /// Per column. For RReliefF the RReliefF weight; for CFS and mRMR
    /// `1 - position / n_cols`, so weights descend along `ranked`.
    pub weights: Vec<f64>,
    /// Score each column had when it was ranked (RReliefF weight, CFS merit
    /// after adding it, or mRMR MID score), aligned with `ranked`.
    pub scores: Vec<f64>,
    pub chosen: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub method: Method,
    pub k_neighbors: usize,
    /// RReliefF instances sampled; `None` visits every row once.
    pub n_iterations: Option<usize>,
    pub relieff_size_sbp: usize,
    pub relieff_size_dbp: usize,
    pub mrmr_size: usize,
    pub mrmr_bins: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            method: Method::Relieff,
            k_neighbors: 10,
            n_iterations: None,
            relieff_size_sbp: 11,
            relieff_size_dbp: 10,
            mrmr_size: 13,
            mrmr_bins: 8,
        }
    }
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
}

/// Columns rescaled to [0, 1]; constant columns become all zeros.
fn unit_columns(m: &FeatureMatrix) -> Vec<Vec<f64>> {
    (0..m.n_cols())
        .map(|j| {
            let c = m.column(j);
            let (lo, hi) = min_max(&c);
            let span = hi - lo;
            c.iter().map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 }).collect()
        })
        .collect()
}

/// RReliefF weights in [-1, 1] using `k` nearest neighbours (Manhattan
/// distance on [0, 1]-scaled columns, equal neighbour influence).
pub fn rrelieff(m: &FeatureMatrix, k: usize, n_iterations: Option<usize>, seed: u64) -> Result<Vec<f64>> {
    m.require_rows(2)?;
    let n = m.n_rows();
    let p = m.n_cols();
    if k == 0 || k >= n {
        return Err(Error::Argument(format!("k_neighbors must lie in 1..{n}, got {k}")));
    }
    let (ylo, yhi) = min_max(&m.target);
    if !(yhi > ylo) {
        return Err(Error::Argument("RReliefF needs a non-constant target".into()));
    }
    let cols = unit_columns(m);
    let ydiff = |a: usize, b: usize| (m.target[a] - m.target[b]).abs() / (yhi - ylo);

    let instances: Vec<usize> = match n_iterations {
        None => (0..n).collect(),
        Some(it) => {
            let mut r = rng::seeded(seed);
            (0..it).map(|_| rng::index(&mut r, n)).collect()
        }
    };
    let iters = instances.len() as f64;
    let influence = 1.0 / k as f64;
    let mut n_dc = 0.0;
    let mut n_da = vec![0.0; p];
    let mut n_dcda = vec![0.0; p];
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &i in &instances {
        dist.clear();
        for j in (0..n).filter(|&j| j != i) {
            let d: f64 = cols.iter().map(|c| (c[i] - c[j]).abs()).sum();
            dist.push((d, j));
        }
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in &dist[..k] {
            let dy = ydiff(i, j);
            n_dc += dy * influence;
            for a in 0..p {
                let da = (cols[a][i] - cols[a][j]).abs();
                n_da[a] += da * influence;
                n_dcda[a] += dy * da * influence;
            }
        }
    }
    if !(n_dc > 0.0 && iters - n_dc > 0.0) {
        return Err(Error::Argument("RReliefF target differences are degenerate".into()));
    }
    Ok((0..p)
        .map(|a| n_dcda[a] / n_dc - (n_da[a] - n_dcda[a]) / (iters - n_dc))
        .collect())
}

/// Indices of the `k` largest weights, best first; ties go to the lower index.
pub fn select_top_k(weights: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..weights.len()).collect();
    idx.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// CFS merit `k r_cf / sqrt(k + k (k - 1) r_ff)` of a subset.
pub fn cfs_merit(subset: &[usize], corr_fy: &[f64], corr_ff: &[Vec<f64>]) -> f64 {
    let k = subset.len() as f64;
    if subset.is_empty() {
        return 0.0;
    }
    let rcf = subset.iter().map(|&i| corr_fy[i]).sum::<f64>() / k;
    let mut rff = 0.0;
    let mut pairs = 0.0;
    for (a, &i) in subset.iter().enumerate() {
        for &j in &subset[a + 1..] {
            rff += corr_ff[i][j];
            pairs += 1.0;
        }
    }
    let rff = if pairs > 0.0 { rff / pairs } else { 0.0 };
    k * rcf / (k + k * (k - 1.0) * rff).sqrt()
}

struct Cfs {
    ranked: Vec<usize>,
    merits: Vec<f64>,
    chosen: usize,
}

fn cfs_search(m: &FeatureMatrix) -> Result<Cfs> {
    m.require_rows(10)?;
    let p = m.n_cols();
    let cols: Vec<Vec<f64>> = (0..p).map(|j| m.column(j)).collect();
    let usable: Vec<usize> = (0..p)
        .filter(|&j| {
            let (lo, hi) = min_max(&cols[j]);
            hi > lo
        })
        .collect();
    let corr_fy: Vec<f64> = cols.iter().map(|c| stats::pearson(c, &m.target).abs()).collect();
    let mut corr_ff = vec![vec![0.0; p]; p];
    for (a, &i) in usable.iter().enumerate() {
        for &j in &usable[a + 1..] {
            let r = stats::pearson(&cols[i], &cols[j]).abs();
            corr_ff[i][j] = r;
            corr_ff[j][i] = r;
        }
    }
    let mut ranked: Vec<usize> = Vec::new();
    let mut merits = Vec::new();
    let mut chosen = None;
    let mut best = f64::NEG_INFINITY;
    let mut remaining = usable.clone();
    while !remaining.is_empty() {
        let mut pick = (0, f64::NEG_INFINITY);
        for (pos, &j) in remaining.iter().enumerate() {
            ranked.push(j);
            let merit = cfs_merit(&ranked, &corr_fy, &corr_ff);
            ranked.pop();
            if merit > pick.1 {
                pick = (pos, merit);
            }
        }
        let j = remaining.remove(pick.0);
        // The search keeps going past the stopping point only to complete the ranking.
        if chosen.is_none() && !(pick.1 > best) {
            chosen = Some(ranked.len());
        }
        best = best.max(pick.1);
        ranked.push(j);
        merits.push(pick.1);
    }
    let chosen = chosen.unwrap_or(ranked.len());
    // Zero-variance columns trail the ranking.
    for j in (0..p).filter(|j| !usable.contains(j)) {
        ranked.push(j);
        merits.push(0.0);
    }
    Ok(Cfs { ranked, merits, chosen })
}

/// Greedy forward CFS; stops when adding a feature no longer raises the merit.
pub fn cfs_select(m: &FeatureMatrix) -> Result<Vec<usize>> {
    let c = cfs_search(m)?;
    Ok(c.ranked[..c.chosen].to_vec())
}

/// Equal-frequency bin per value; tied values share the bin of their first rank.
pub fn equal_frequency_bins(x: &[f64], bins: usize) -> Vec<usize> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut out = vec![0; n];
    let mut first_rank = 0;
    for (rank, &i) in order.iter().enumerate() {
        if rank > 0 && x[i] != x[order[rank - 1]] {
            first_rank = rank;
        }
        out[i] = (first_rank * bins / n).min(bins - 1);
    }
    out
}

/// Plug-in mutual information in bits between two discrete codes.
pub fn mutual_information(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let na = a.iter().max().map_or(0, |m| m + 1);
    let nb = b.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![0.0; na * nb];
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    for (&x, &y) in a.iter().zip(b) {
        joint[x * nb + y] += 1.0;
        pa[x] += 1.0;
        pb[y] += 1.0;
    }
    let mut mi = 0.0;
    for x in 0..na {
        for y in 0..nb {
            let c = joint[x * nb + y];
            if c > 0.0 {
                mi += c / n * (c * n / (pa[x] * pb[y])).log2();
            }
        }
    }
    mi.max(0.0)
}

struct Mrmr {
    ranked: Vec<usize>,
    scores: Vec<f64>,
}

fn mrmr_search(m: &FeatureMatrix, bins: usize) -> Result<Mrmr> {
    m.require_rows(10)?;
    if bins < 2 {
        return Err(Error::Argument(format!("mRMR needs at least 2 bins, got {bins}")));
    }
    let p = m.n_cols();
    let codes: Vec<Vec<usize>> = (0..p).map(|j| equal_frequency_bins(&m.column(j), bins)).collect();
    let y = equal_frequency_bins(&m.target, bins);
    let relevance: Vec<f64> = codes.iter().map(|c| mutual_information(c, &y)).collect();
    let mut redundancy = vec![0.0; p];
    let mut ranked = Vec::with_capacity(p);
    let mut scores = Vec::with_capacity(p);
    let mut remaining: Vec<usize> = (0..p).collect();
    while !remaining.is_empty() {
        let s = ranked.len() as f64;
        let score = |j: usize| if s == 0.0 { relevance[j] } else { relevance[j] - redundancy[j] / s };
        let mut pick = 0;
        for pos in 1..remaining.len() {
            if score(remaining[pos]) > score(remaining[pick]) {
                pick = pos;
            }
        }
        let j = remaining.remove(pick);
        scores.push(score(j));
        ranked.push(j);
        for &r in &remaining {
            redundancy[r] += mutual_information(&codes[r], &codes[j]);
        }
    }
    Ok(Mrmr { ranked, scores })
}

/// MID-scheme mRMR ranking of the first `n_select` columns.
pub fn mrmr_rank(m: &FeatureMatrix, n_select: usize, bins: usize) -> Result<Vec<usize>> {
    let r = mrmr_search(m, bins)?;
    Ok(r.ranked.into_iter().take(n_select).collect())
}

fn position_weights(ranked: &[usize]) -> Vec<f64> {
    let p = ranked.len();
    let mut w = vec![0.0; p];
    for (pos, &j) in ranked.iter().enumerate() {
        w[j] = 1.0 - pos as f64 / p as f64;
    }
    w
}

/// Runs the configured method and picks its subset for `target`.
pub fn run_selection(m: &FeatureMatrix, target: Target, cfg: &SelectionConfig, seed: u64) -> Result<SelectionResult> {
    match cfg.method {
        Method::Relieff => {
            m.require_rows(10)?;
            let weights = rrelieff(m, cfg.k_neighbors, cfg.n_iterations, seed)?;
            let ranked = select_top_k(&weights, weights.len());
            let size = match target {
                Target::Sbp => cfg.relieff_size_sbp,
                Target::Dbp => cfg.relieff_size_dbp,
            };
            Ok(SelectionResult {
                method: Method::Relieff,
                scores: ranked.iter().map(|&j| weights[j]).collect(),
                chosen: ranked[..size.min(ranked.len())].to_vec(),
                ranked,
                weights,
            })
        }
        Method::Cfs => {
            let c = cfs_search(m)?;
            Ok(SelectionResult {
                method: Method::Cfs,
                weights: position_weights(&c.ranked),
                chosen: c.ranked[..c.chosen].to_vec(),
                scores: c.merits,
                ranked: c.ranked,
            })
        }
        Method::Mrmr => {
            let r = mrmr_search(m, cfg.mrmr_bins)?;
            Ok(SelectionResult {
                method: Method::Mrmr,
                weights: position_weights(&r.ranked),
                chosen: r.ranked[..cfg.mrmr_size.min(r.ranked.len())].to_vec(),
                scores: r.scores,
                ranked: r.ranked,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn matrix(cols: Vec<Vec<f64>>, y: Vec<f64>) -> FeatureMatrix {
        let n = y.len();
        let names = (0..cols.len()).map(|j| format!("f{j}")).collect();
        let rows = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        FeatureMatrix::new(rows, y, names).unwrap()
    }

    fn normal(r: &mut rng::PipelineRng, n: usize) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(r)).collect()
    }

    #[test]
    fn top_k_examples() {
        assert_eq!(select_top_k(&[0.3, 0.9, 0.1], 2), vec![1, 0]);
        assert_eq!(select_top_k(&[0.5, 0.5, 0.5], 3), vec![0, 1, 2]);
        assert_eq!(select_top_k(&[0.2, 0.7, 0.7, 0.1], 1), vec![1]);
    }

    #[test]
    fn relieff_prefers_relevant_feature() {
        let mut r = rng::seeded(1);
        let x1: Vec<f64> = (0..200).map(|_| r.random_range(0.0..1.0)).collect();
        let x2: Vec<f64> = (0..200).map(|_| r.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = x1.iter().map(|v| v + 0.1 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r)).collect();
        let w = rrelieff(&matrix(vec![x1, x2], y), 10, None, 0).unwrap();
        assert!(w[0] > w[1], "{w:?}");
    }

    #[test]
    fn relieff_target_copy_first_and_constant_zero() {
        let mut r = rng::seeded(2);
        let noise = normal(&mut r, 80);
        let y = normal(&mut r, 80);
        let m = matrix(vec![noise, vec![4.0; 80], y.clone()], y);
        let w = rrelieff(&m, 10, None, 0).unwrap();
        assert_eq!(select_top_k(&w, 1), vec![2]);
        assert_eq!(w[1], 0.0);
        assert!(w.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn relieff_sampled_iterations_are_seeded() {
        let mut r = rng::seeded(3);
        let m = matrix(vec![normal(&mut r, 50), normal(&mut r, 50)], normal(&mut r, 50));
        let a = rrelieff(&m, 5, Some(20), 9).unwrap();
        let b = rrelieff(&m, 5, Some(20), 9).unwrap();
        assert_eq!(a, b);
        assert!(rrelieff(&m, 50, None, 0).is_err());
    }

    #[test]
    fn cfs_keeps_one_of_two_duplicates() {
        let mut r = rng::seeded(4);
        let x = normal(&mut r, 300);
        let noise = normal(&mut r, 300);
        let y: Vec<f64> = x.iter().map(|v| v + 0.5 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r)).collect();
        let chosen = cfs_select(&matrix(vec![x.clone(), x, noise], y)).unwrap();
        assert_eq!(chosen.iter().filter(|&&j| j < 2).count(), 1, "{chosen:?}");
    }

    #[test]
    fn cfs_singleton_merit_is_abs_correlation() {
        let mut r = rng::seeded(5);
        let x = normal(&mut r, 100);
        let y: Vec<f64> = x.iter().map(|v| -v + 0.7 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r)).collect();
        let c = stats::pearson(&x, &y).abs();
        let merit = cfs_merit(&[0], &[c], &[vec![0.0]]);
        assert_eq!(merit, c);
        let m = matrix(vec![x], y);
        assert_eq!(cfs_select(&m).unwrap(), vec![0]);
        let full = run_selection(&m, Target::Sbp, &SelectionConfig { method: Method::Cfs, ..Default::default() }, 0).unwrap();
        assert!((full.scores[0] - c).abs() < 1e-12);
    }

    #[test]
    fn cfs_on_noise_stays_small() {
        let mut r = rng::seeded(6);
        let cols: Vec<Vec<f64>> = (0..10).map(|_| normal(&mut r, 500)).collect();
        let y = normal(&mut r, 500);
        let cfg = SelectionConfig { method: Method::Cfs, ..Default::default() };
        let res = run_selection(&matrix(cols, y), Target::Sbp, &cfg, 0).unwrap();
        let best = res.scores.iter().cloned().fold(0.0, f64::max);
        assert!(best < 0.2, "{best}");
    }

    #[test]
    fn cfs_skips_constant_columns() {
        let mut r = rng::seeded(7);
        let x = normal(&mut r, 40);
        let m = matrix(vec![vec![1.0; 40], x.clone()], x);
        assert_eq!(cfs_select(&m).unwrap(), vec![1]);
    }

    #[test]
    fn equal_frequency_binning() {
        let x: Vec<f64> = (0..16).map(|i| i as f64).collect();
        assert_eq!(equal_frequency_bins(&x, 8), (0..16).map(|i| i / 2).collect::<Vec<_>>());
        assert_eq!(equal_frequency_bins(&[3.0; 10], 8), vec![0; 10]);
    }

    #[test]
    fn mutual_information_of_copies_and_independent_codes() {
        let a: Vec<usize> = (0..64).map(|i| i % 8).collect();
        assert!((mutual_information(&a, &a) - 3.0).abs() < 1e-12);
        let b: Vec<usize> = (0..64).map(|i| i / 8).collect();
        assert!(mutual_information(&a, &b).abs() < 1e-12);
    }

    #[test]
    fn mrmr_demotes_duplicate() {
        let mut r = rng::seeded(8);
        let x1: Vec<f64> = (0..400).map(|_| r.random_range(0.0..1.0)).collect();
        let x3: Vec<f64> = (0..400).map(|_| r.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = x1.iter().zip(&x3).map(|(a, b)| a + 0.8 * b).collect();
        let ranked = mrmr_rank(&matrix(vec![x1.clone(), x1, x3], y), 3, 8).unwrap();
        assert_eq!(ranked[0], 0);
        assert_eq!(ranked[1], 2);
    }

    #[test]
    fn mrmr_target_copy_first_and_noise_low() {
        let mut r = rng::seeded(9);
        let y: Vec<f64> = (0..1000).map(|_| r.random_range(0.0..1.0)).collect();
        let noise: Vec<Vec<f64>> = (0..4).map(|_| (0..1000).map(|_| r.random_range(0.0..1.0)).collect()).collect();
        let mut cols = noise.clone();
        cols.push(y.clone());
        let m = matrix(cols, y.clone());
        assert_eq!(mrmr_rank(&m, 1, 8).unwrap(), vec![4]);
        let yb = equal_frequency_bins(&y, 8);
        for c in &noise {
            assert!(mutual_information(&equal_frequency_bins(c, 8), &yb) < 0.05);
        }
    }

    #[test]
    fn results_are_prefix_consistent() {
        let mut r = rng::seeded(10);
        let cols: Vec<Vec<f64>> = (0..6).map(|_| normal(&mut r, 60)).collect();
        let y: Vec<f64> = (0..60).map(|i| cols[2][i] - cols[4][i]).collect();
        let m = matrix(cols, y);
        for method in [Method::Relieff, Method::Cfs, Method::Mrmr] {
            let cfg = SelectionConfig {
                method,
                relieff_size_sbp: 3,
                mrmr_size: 3,
                k_neighbors: 5,
                ..Default::default()
            };
            let res = run_selection(&m, Target::Sbp, &cfg, 1).unwrap();
            let mut sorted = res.ranked.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..6).collect::<Vec<_>>());
            assert!(res.ranked.windows(2).all(|w| res.weights[w[0]] >= res.weights[w[1]]));
            assert_eq!(res.chosen, res.ranked[..res.chosen.len()].to_vec());
            assert_eq!(res, run_selection(&m, Target::Sbp, &cfg, 1).unwrap());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn relieff_ignores_affine_rescaling(scale in 0.01f64..100.0, shift in -50.0f64..50.0, seed in 0u64..1000) {
            let mut r = rng::seeded(seed);
            let cols: Vec<Vec<f64>> = (0..3).map(|_| normal(&mut r, 40)).collect();
            let y: Vec<f64> = (0..40).map(|i| cols[0][i] + 0.3 * cols[1][i]).collect();
            let base = rrelieff(&matrix(cols.clone(), y.clone()), 5, None, 0).unwrap();
            let mut moved = cols;
            moved[1] = moved[1].iter().map(|v| v * scale + shift).collect();
            let w = rrelieff(&matrix(moved, y), 5, None, 0).unwrap();
            for (a, b) in base.iter().zip(&w) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

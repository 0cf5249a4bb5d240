//! Bagged CART regression trees.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_leaf: usize,
    /// Resample rows with replacement for each tree.
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            min_leaf: 8,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
        n: usize,
    },
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value, .. } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn leaf_sizes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { n, .. } => Some(*n),
                Node::Split { .. } => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub trees: Vec<Tree>,
    pub seeds: Vec<u64>,
    pub min_leaf: usize,
    pub n_trees: usize,
    pub n_features: usize,
}

impl TreeEnsemble {
    pub fn predict(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.iter()
            .map(|row| {
                if row.len() != self.n_features {
                    return Err(Error::Shape {
                        expected: self.n_features,
                        got: row.len(),
                    });
                }
                let s: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
                Ok(s / self.trees.len() as f64)
            })
            .collect()
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    min_leaf: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        let value = rows.iter().map(|&i| self.y[i]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf { value, n: rows.len() });
        self.nodes.len() - 1
    }

    /// Best (feature, threshold, left count) over all features and midpoints.
    fn best_split(&self, rows: &[usize]) -> Option<(usize, f64, f64)> {
        let n = rows.len();
        let total: f64 = rows.iter().map(|&i| self.y[i]).sum();
        let total_sq: f64 = rows.iter().map(|&i| self.y[i] * self.y[i]).sum();
        let parent = total_sq - total * total / n as f64;
        if !(parent > 1e-12 * total_sq.max(1.0)) {
            return None;
        }
        let p = self.x[rows[0]].len();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = rows.to_vec();
        for f in 0..p {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left_sum = 0.0;
            let mut left_sq = 0.0;
            for k in 0..n - 1 {
                let yi = self.y[order[k]];
                left_sum += yi;
                left_sq += yi * yi;
                let nl = k + 1;
                let nr = n - nl;
                if nl < self.min_leaf || nr < self.min_leaf {
                    continue;
                }
                let (lo, hi) = (self.x[order[k]][f], self.x[order[k + 1]][f]);
                if !(hi > lo) {
                    continue;
                }
                let rs = total - left_sum;
                let sse = (left_sq - left_sum * left_sum / nl as f64) + (total_sq - left_sq - rs * rs / nr as f64);
                if best.is_none_or(|b| sse < b.2) {
                    let mid = lo + (hi - lo) / 2.0;
                    best = Some((f, mid, sse));
                }
            }
        }
        best.filter(|b| b.2 < parent)
    }

    fn grow(&mut self, rows: Vec<usize>) -> usize {
        if rows.len() < 2 * self.min_leaf {
            return self.leaf(&rows);
        }
        let Some((feature, threshold, _)) = self.best_split(&rows) else {
            return self.leaf(&rows);
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0, n: 0 });
        let left = self.grow(l);
        let right = self.grow(r);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
}

pub fn fit_tree(x: &[Vec<f64>], y: &[f64], rows: Vec<usize>, min_leaf: usize) -> Tree {
    let mut b = Builder {
        x,
        y,
        min_leaf,
        nodes: Vec::new(),
    };
    b.grow(rows);
    Tree { nodes: b.nodes }
}

pub fn forest_fit(x: &[Vec<f64>], y: &[f64], cfg: &ForestConfig, seed: u64) -> Result<TreeEnsemble> {
    let n = x.len();
    if n == 0 || y.len() != n {
        return Err(Error::Argument(format!("forest needs matching nonempty x and y, got {n} and {}", y.len())));
    }
    if cfg.min_leaf == 0 || cfg.min_leaf > n {
        return Err(Error::Argument(format!("min_leaf must lie in 1..={n}, got {}", cfg.min_leaf)));
    }
    if cfg.n_trees == 0 {
        return Err(Error::Argument("n_trees must be positive".into()));
    }
    let p = x[0].len();
    if let Some(r) = x.iter().find(|r| r.len() != p) {
        return Err(Error::Shape {
            expected: p,
            got: r.len(),
        });
    }
    let seeds: Vec<u64> = (0..cfg.n_trees as u64).map(|t| rng::sub_seed(seed, t)).collect();
    let trees = seeds
        .par_iter()
        .map(|&s| {
            let rows = if cfg.bootstrap {
                let mut r = rng::seeded(s);
                (0..n).map(|_| rng::index(&mut r, n)).collect()
            } else {
                (0..n).collect()
            };
            fit_tree(x, y, rows, cfg.min_leaf)
        })
        .collect();
    Ok(TreeEnsemble {
        trees,
        seeds,
        min_leaf: cfg.min_leaf,
        n_trees: cfg.n_trees,
        n_features: p,
    })
}

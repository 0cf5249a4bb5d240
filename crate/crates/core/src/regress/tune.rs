//! GPR hyperparameter search: the default point, a Latin hypercube, then
//! expected-improvement (or random) refinement.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::cv::kfold_cv;
use super::gpr::{Gp, GprHyper, Kernel};
use super::{GprRegressor, GprSettings, GprTrainer, Standardizer};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Acquisition {
    ExpectedImprovement,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuneObjective {
    /// Pooled out-of-fold MSE.
    CvMse,
    /// Negative log marginal likelihood on all rows.
    Nlml,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneConfig {
    pub budget: usize,
    pub folds: usize,
    pub acquisition: Acquisition,
    pub objective: TuneObjective,
    pub kernels: Vec<Kernel>,
    /// log10 bounds.
    pub length_scale_range: (f64, f64),
    pub signal_var_range: (f64, f64),
    pub noise_var_range: (f64, f64),
    /// Random points scored by the acquisition function per step.
    pub n_candidates: usize,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            budget: 30,
            folds: 10,
            acquisition: Acquisition::ExpectedImprovement,
            objective: TuneObjective::CvMse,
            kernels: vec![Kernel::SquaredExponential, Kernel::Matern52],
            length_scale_range: (-2.0, 2.0),
            signal_var_range: (-2.0, 2.0),
            noise_var_range: (-4.0, 1.0),
            n_candidates: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Default,
    Initial,
    Refine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub iteration: usize,
    pub phase: Phase,
    pub hyper: GprHyper,
    /// `None` when the candidate could not be fitted.
    pub objective: Option<f64>,
    pub best_so_far: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best: GprHyper,
    pub best_objective: f64,
    pub objective: TuneObjective,
    pub trace: Vec<Trial>,
}

/// A point of the unit cube plus a kernel index.
#[derive(Debug, Clone, Copy)]
struct Point {
    u: [f64; 3],
    kernel: usize,
}

impl TuneConfig {
    fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.budget == 0 {
            bad.push("budget");
        }
        if self.kernels.is_empty() {
            bad.push("kernels");
        }
        for (name, (lo, hi)) in [
            ("length_scale_range", self.length_scale_range),
            ("signal_var_range", self.signal_var_range),
            ("noise_var_range", self.noise_var_range),
        ] {
            if !(hi >= lo && lo.is_finite() && hi.is_finite()) {
                bad.push(name);
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.into_iter().map(String::from).collect()))
        }
    }

    fn ranges(&self) -> [(f64, f64); 3] {
        [self.length_scale_range, self.signal_var_range, self.noise_var_range]
    }

    fn decode(&self, p: Point) -> GprHyper {
        let r = self.ranges();
        let v = |i: usize| 10f64.powf(r[i].0 + p.u[i] * (r[i].1 - r[i].0));
        GprHyper {
            kernel: self.kernels[p.kernel],
            length_scale: v(0),
            signal_var: v(1),
            noise_var: v(2),
        }
    }

    fn encode(&self, h: &GprHyper) -> Point {
        let r = self.ranges();
        let u = |i: usize, v: f64| {
            let span = r[i].1 - r[i].0;
            if span > 0.0 {
                ((v.log10() - r[i].0) / span).clamp(0.0, 1.0)
            } else {
                0.0
            }
        };
        Point {
            u: [u(0, h.length_scale), u(1, h.signal_var), u(2, h.noise_var)],
            kernel: self.kernels.iter().position(|k| *k == h.kernel).unwrap_or(0),
        }
    }

    fn features(&self, p: Point) -> Vec<f64> {
        let k = if self.kernels.len() > 1 {
            p.kernel as f64 / (self.kernels.len() - 1) as f64
        } else {
            0.0
        };
        vec![p.u[0], p.u[1], p.u[2], k]
    }
}

fn latin_hypercube(n: usize, n_kernels: usize, r: &mut rng::PipelineRng) -> Vec<Point> {
    let mut strata: Vec<Vec<usize>> = (0..4)
        .map(|_| {
            let mut s: Vec<usize> = (0..n).collect();
            rng::shuffle(&mut s, r);
            s
        })
        .collect();
    let kernel_order = strata.pop().unwrap();
    (0..n)
        .map(|i| Point {
            u: [0, 1, 2].map(|d| (strata[d][i] as f64 + r.random_range(0.0..1.0)) / n as f64),
            kernel: kernel_order[i] % n_kernels,
        })
        .collect()
}

fn random_point(n_kernels: usize, r: &mut rng::PipelineRng) -> Point {
    Point {
        u: [0; 3].map(|_| r.random_range(0.0..1.0)),
        kernel: rng::index(r, n_kernels),
    }
}

/// Surrogate GP over (point features, objective) with a small grid search on
/// its own hyperparameters.
fn surrogate(xs: &[Vec<f64>], ys: &[f64]) -> Option<(Gp, f64, f64)> {
    if xs.len() < 2 {
        return None;
    }
    let mean = crate::stats::mean(ys);
    let sd = crate::stats::sample_std(ys);
    let sd = if sd > 0.0 { sd } else { 1.0 };
    let z: Vec<f64> = ys.iter().map(|y| (y - mean) / sd).collect();
    let mut best: Option<Gp> = None;
    for ell in [0.1, 0.2, 0.4, 0.8] {
        for noise in [1e-4, 1e-3, 1e-2, 1e-1] {
            let h = GprHyper {
                kernel: Kernel::Matern52,
                signal_var: 1.0,
                length_scale: ell,
                noise_var: noise,
            };
            if let Ok(gp) = Gp::fit(xs, &z, h) {
                if best.as_ref().is_none_or(|b| gp.nlml() < b.nlml()) {
                    best = Some(gp);
                }
            }
        }
    }
    best.map(|gp| (gp, mean, sd))
}

/// Expected improvement below `best` for a Gaussian prediction.
pub fn expected_improvement(mean: f64, var: f64, best: f64) -> f64 {
    let s = var.max(0.0).sqrt();
    if s < 1e-12 {
        return (best - mean).max(0.0);
    }
    let z = (best - mean) / s;
    let n = Normal::standard();
    (best - mean) * n.cdf(z) + s * n.pdf(z)
}

fn evaluate(x: &[Vec<f64>], y: &[f64], h: GprHyper, cfg: &TuneConfig, cv_seed: u64) -> Option<f64> {
    let settings = GprSettings::from(h);
    let v = match cfg.objective {
        TuneObjective::CvMse => kfold_cv(x, y, cfg.folds, &GprTrainer(settings), cv_seed).map(|r| r.aggregate.mse),
        TuneObjective::Nlml => GprRegressor::fit(x, y, &settings).map(|m| m.gp.nlml()),
    };
    match v {
        Ok(v) if v.is_finite() => Some(v),
        Ok(_) => None,
        Err(e) => {
            log::debug!("candidate {h:?} failed: {e}");
            None
        }
    }
}

/// Fold seed the tuner uses for every candidate, so callers can score other
/// hyperparameters on the same folds.
pub fn cv_seed(seed: u64) -> u64 {
    rng::sub_seed(seed, 0)
}

pub fn tune_gpr(x: &[Vec<f64>], y: &[f64], cfg: &TuneConfig, seed: u64) -> Result<TuneResult> {
    cfg.validate()?;
    let dim = Standardizer::fit(x)?.n_output();
    let cv_seed = cv_seed(seed);
    let mut r = rng::seeded(rng::sub_seed(seed, 1));
    let nk = cfg.kernels.len();

    let default = cfg.encode(&GprSettings::default().resolve(dim));
    let n_init = (cfg.budget / 3).max(1);
    let mut initial = vec![(Phase::Default, default)];
    initial.extend(latin_hypercube(n_init - 1, nk, &mut r).into_iter().map(|p| (Phase::Initial, p)));
    initial.truncate(cfg.budget);

    let scored: Vec<Option<f64>> = initial
        .par_iter()
        .map(|(_, p)| evaluate(x, y, cfg.decode(*p), cfg, cv_seed))
        .collect();
    let mut evaluated: Vec<(Phase, Point, Option<f64>)> =
        initial.into_iter().zip(scored).map(|((ph, p), s)| (ph, p, s)).collect();

    while evaluated.len() < cfg.budget {
        let pool: Vec<Point> = (0..cfg.n_candidates.max(1)).map(|_| random_point(nk, &mut r)).collect();
        let pick = match cfg.acquisition {
            Acquisition::Random => pool[0],
            Acquisition::ExpectedImprovement => {
                let ok: Vec<(Vec<f64>, f64)> = evaluated
                    .iter()
                    .filter_map(|(_, p, s)| s.map(|v| (cfg.features(*p), transform(v, cfg.objective))))
                    .collect();
                let (fx, fy): (Vec<Vec<f64>>, Vec<f64>) = ok.into_iter().unzip();
                match surrogate(&fx, &fy) {
                    None => pool[0],
                    Some((gp, mean, sd)) => {
                        let best = fy.iter().cloned().fold(f64::INFINITY, f64::min);
                        let best = (best - mean) / sd;
                        let feats: Vec<Vec<f64>> = pool.iter().map(|p| cfg.features(*p)).collect();
                        let (m, v) = gp.predict(&feats)?;
                        let mut idx = 0;
                        let mut top = f64::NEG_INFINITY;
                        for i in 0..pool.len() {
                            // Noise variance is not part of the latent uncertainty.
                            let ei = expected_improvement(m[i], (v[i] - gp.hyper.noise_var).max(0.0), best);
                            if ei > top {
                                top = ei;
                                idx = i;
                            }
                        }
                        pool[idx]
                    }
                }
            }
        };
        let s = evaluate(x, y, cfg.decode(pick), cfg, cv_seed);
        evaluated.push((Phase::Refine, pick, s));
    }

    let mut trace = Vec::with_capacity(evaluated.len());
    let mut best: Option<(f64, GprHyper)> = None;
    for (i, (phase, p, s)) in evaluated.into_iter().enumerate() {
        let h = cfg.decode(p);
        if let Some(v) = s {
            if best.is_none_or(|b| v < b.0) {
                best = Some((v, h));
            }
        }
        trace.push(Trial {
            iteration: i + 1,
            phase,
            hyper: h,
            objective: s,
            best_so_far: best.map(|b| b.0),
        });
    }
    let (best_objective, best) = best.ok_or_else(|| Error::Tuning("no candidate could be fitted".into()))?;
    Ok(TuneResult {
        best,
        best_objective,
        objective: cfg.objective,
        trace,
    })
}

/// Surrogates model log-MSE; NLML is already on a log scale.
fn transform(v: f64, objective: TuneObjective) -> f64 {
    match objective {
        TuneObjective::CvMse => v.max(1e-300).ln(),
        TuneObjective::Nlml => v,
    }
}

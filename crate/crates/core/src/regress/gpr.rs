//! Exact Gaussian process regression with a zero prior mean.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const JITTER_STEPS: [f64; 3] = [1e-10, 1e-8, 1e-6];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    SquaredExponential,
    Matern52,
}

impl Kernel {
    /// Correlation at distance `r`; equals 1 at `r = 0`.
    pub fn correlation(self, r: f64, length_scale: f64) -> f64 {
        let s = r / length_scale;
        match self {
            Kernel::SquaredExponential => (-0.5 * s * s).exp(),
            Kernel::Matern52 => {
                let a = 5f64.sqrt() * s;
                (1.0 + a + a * a / 3.0) * (-a).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GprHyper {
    pub kernel: Kernel,
    pub signal_var: f64,
    pub length_scale: f64,
    pub noise_var: f64,
}

impl GprHyper {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("signal_var", self.signal_var),
            ("length_scale", self.length_scale),
            ("noise_var", self.noise_var),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn k(&self, a: &[f64], b: &[f64]) -> f64 {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        self.signal_var * self.kernel.correlation(d2.sqrt(), self.length_scale)
    }
}

/// A fitted GP: training data, `alpha = (K + sn2 I)^-1 y` and the lower
/// Cholesky factor (row-major) of `K + sn2 I + jitter I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gp {
    pub hyper: GprHyper,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub alpha: Vec<f64>,
    pub chol: Vec<f64>,
    pub jitter: f64,
}

fn cholesky(a: &DMatrix<f64>) -> Option<Vec<f64>> {
    let n = a.nrows();
    let c = a.clone().cholesky()?;
    let l = c.l();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            out[i * n + j] = l[(i, j)];
        }
    }
    Some(out)
}

impl Gp {
    pub fn fit(x: &[Vec<f64>], y: &[f64], hyper: GprHyper) -> Result<Gp> {
        hyper.validate()?;
        let n = x.len();
        if n == 0 || y.len() != n {
            return Err(Error::Argument(format!("GP needs matching nonempty x and y, got {n} and {}", y.len())));
        }
        let d = x[0].len();
        if let Some(r) = x.iter().find(|r| r.len() != d) {
            return Err(Error::Shape {
                expected: d,
                got: r.len(),
            });
        }
        let mut k = DMatrix::from_fn(n, n, |i, j| hyper.k(&x[i], &x[j]));
        for i in 0..n {
            k[(i, i)] += hyper.noise_var;
        }
        let mean_diag = k.diagonal().sum() / n as f64;
        let mut jitter = 0.0;
        let mut chol = cholesky(&k);
        for step in JITTER_STEPS {
            if chol.is_some() {
                break;
            }
            let add = step * mean_diag;
            for i in 0..n {
                k[(i, i)] += add - jitter;
            }
            jitter = add;
            log::debug!("retrying Cholesky with jitter {jitter:e}");
            chol = cholesky(&k);
        }
        let chol = chol.ok_or(Error::Conditioning)?;
        let alpha = back_sub(&chol, n, &forward_sub(&chol, n, y));
        Ok(Gp {
            hyper,
            x: x.to_vec(),
            y: y.to_vec(),
            alpha,
            chol,
            jitter,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    /// Posterior mean and predictive variance (including observation noise).
    pub fn predict(&self, xs: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.n();
        let mut mean = Vec::with_capacity(xs.len());
        let mut var = Vec::with_capacity(xs.len());
        for row in xs {
            if row.len() != self.dim() {
                return Err(Error::Shape {
                    expected: self.dim(),
                    got: row.len(),
                });
            }
            let ks: Vec<f64> = self.x.iter().map(|xi| self.hyper.k(xi, row)).collect();
            mean.push(ks.iter().zip(&self.alpha).map(|(a, b)| a * b).sum());
            let v = forward_sub(&self.chol, n, &ks);
            let prior = self.hyper.k(row, row) + self.hyper.noise_var;
            let s = prior - v.iter().map(|t| t * t).sum::<f64>();
            if s < 0.0 {
                log::warn!("clamping negative predictive variance {s:e}");
            }
            var.push(s.max(0.0));
        }
        Ok((mean, var))
    }

    /// Negative log marginal likelihood of the training targets.
    pub fn nlml(&self) -> f64 {
        let n = self.n();
        let fit: f64 = self.y.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        let logdet: f64 = (0..n).map(|i| self.chol[i * n + i].ln()).sum();
        0.5 * fit + logdet + 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
    }
}

fn forward_sub(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|j| l[i * n + j] * x[j]).sum();
        x[i] = (b[i] - s) / l[i * n + i];
    }
    x
}

fn back_sub(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| l[j * n + i] * x[j]).sum();
        x[i] = (b[i] - s) / l[i * n + i];
    }
    x
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    /// Gauss-Jordan inverse with partial pivoting and the determinant.
    pub(crate) fn dense_inverse(a: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
        let n = a.len();
        let mut m: Vec<Vec<f64>> = a
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut row = r.clone();
                row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
                row
            })
            .collect();
        let mut det = 1.0;
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
            if p != c {
                m.swap(p, c);
                det = -det;
            }
            let piv = m[c][c];
            det *= piv;
            for v in m[c].iter_mut() {
                *v /= piv;
            }
            for r in 0..n {
                if r != c {
                    let f = m[r][c];
                    let pivot_row = m[c].clone();
                    for (v, pv) in m[r].iter_mut().zip(pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        (m.into_iter().map(|r| r[n..].to_vec()).collect(), det)
    }

    pub(crate) struct Oracle {
        pub mean: Vec<f64>,
        pub var: Vec<f64>,
        pub nlml: f64,
    }

    pub(crate) fn oracle(x: &[Vec<f64>], y: &[f64], h: GprHyper, xs: &[Vec<f64>]) -> Oracle {
        let n = x.len();
        let k: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| h.k(&x[i], &x[j]) + if i == j { h.noise_var } else { 0.0 }).collect())
            .collect();
        let (kinv, det) = dense_inverse(&k);
        let kinv_y: Vec<f64> = kinv.iter().map(|r| r.iter().zip(y).map(|(a, b)| a * b).sum()).collect();
        let mut mean = Vec::new();
        let mut var = Vec::new();
        for s in xs {
            let ks: Vec<f64> = x.iter().map(|xi| h.k(xi, s)).collect();
            mean.push(ks.iter().zip(&kinv_y).map(|(a, b)| a * b).sum());
            let mut q = 0.0;
            for i in 0..n {
                for j in 0..n {
                    q += ks[i] * kinv[i][j] * ks[j];
                }
            }
            var.push(h.signal_var + h.noise_var - q);
        }
        let fit: f64 = y.iter().zip(&kinv_y).map(|(a, b)| a * b).sum();
        let nlml = 0.5 * fit + 0.5 * det.ln() + 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        Oracle { mean, var, nlml }
    }

    pub(crate) fn random_fixture(seed: u64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>, GprHyper) {
        let mut r = rng::seeded(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<f64> = x.iter().map(|row| row[0].sin() + r.random_range(-0.3..0.3)).collect();
        let h = GprHyper {
            kernel: if seed % 2 == 0 { Kernel::SquaredExponential } else { Kernel::Matern52 },
            signal_var: r.random_range(0.5..2.0),
            length_scale: r.random_range(0.5..2.0),
            noise_var: r.random_range(0.05..0.5),
        };
        (x, y, h)
    }

    fn se(s: f64, l: f64, n: f64) -> GprHyper {
        GprHyper {
            kernel: Kernel::SquaredExponential,
            signal_var: s,
            length_scale: l,
            noise_var: n,
        }
    }

    #[test]
    fn kernel_values() {
        assert_eq!(Kernel::SquaredExponential.correlation(0.0, 1.0), 1.0);
        assert_eq!(Kernel::Matern52.correlation(0.0, 1.0), 1.0);
        assert!((Kernel::SquaredExponential.correlation(1.0, 1.0) - (-0.5f64).exp()).abs() < 1e-15);
        let a = 5f64.sqrt();
        assert!((Kernel::Matern52.correlation(2.0, 2.0) - (1.0 + a + 5.0 / 3.0) * (-a).exp()).abs() < 1e-15);
    }

    #[test]
    fn single_point_closed_forms() {
        let h = se(2.0, 1.0, 0.5);
        let gp = Gp::fit(&[vec![0.3]], &[4.0], h).unwrap();
        let (m, _) = gp.predict(&[vec![0.3]]).unwrap();
        assert!((m[0] - 4.0 * 2.0 / 2.5).abs() < 1e-12);
        let v = 2.5f64;
        let want = 0.5 * 16.0 / v + 0.5 * v.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((gp.nlml() - want).abs() < 1e-12);
        let zero = Gp::fit(&[vec![0.3]], &[0.0], h).unwrap();
        assert!((zero.nlml() - 0.5 * v.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
    }

    #[test]
    fn matches_dense_oracle() {
        for seed in 0..10 {
            let (x, y, h) = random_fixture(seed, 10, 2);
            let xs: Vec<Vec<f64>> = vec![vec![0.1, -0.4], vec![1.5, 1.5], x[3].clone()];
            let gp = Gp::fit(&x, &y, h).unwrap();
            let o = oracle(&x, &y, h, &xs);
            let (m, v) = gp.predict(&xs).unwrap();
            for i in 0..xs.len() {
                assert!((m[i] - o.mean[i]).abs() < 1e-8);
                assert!((v[i] - o.var[i]).abs() < 1e-8);
            }
            assert!((gp.nlml() - o.nlml).abs() < 1e-8);
            let kinv_y = oracle_alpha(&x, &y, h);
            for (a, b) in gp.alpha.iter().zip(&kinv_y) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    fn oracle_alpha(x: &[Vec<f64>], y: &[f64], h: GprHyper) -> Vec<f64> {
        let n = x.len();
        let k: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| h.k(&x[i], &x[j]) + if i == j { h.noise_var } else { 0.0 }).collect())
            .collect();
        let (kinv, _) = dense_inverse(&k);
        kinv.iter().map(|r| r.iter().zip(y).map(|(a, b)| a * b).sum()).collect()
    }

    #[test]
    fn interpolates_without_noise() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 0.7]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0].cos()).collect();
        let gp = Gp::fit(&x, &y, se(1.0, 1.0, 1e-12)).unwrap();
        let (m, _) = gp.predict(&x).unwrap();
        for (a, b) in m.iter().zip(&y) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn far_field_reverts_to_prior() {
        let (x, y, _) = random_fixture(3, 10, 2);
        let h = se(1.3, 0.5, 0.2);
        let gp = Gp::fit(&x, &y, h).unwrap();
        let (m, v) = gp.predict(&[vec![1e3, -1e3]]).unwrap();
        assert!(m[0].abs() < 1e-12);
        assert!((v[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn duplicate_rows_with_different_targets() {
        let x = vec![vec![1.0], vec![1.0], vec![2.0]];
        let gp = Gp::fit(&x, &[0.0, 1.0, 0.5], se(1.0, 1.0, 0.1)).unwrap();
        assert!(gp.alpha.iter().all(|a| a.is_finite()));
    }

    #[test]
    fn exact_duplicates_without_noise_use_jitter() {
        let x = vec![vec![1.0]; 4];
        let gp = Gp::fit(&x, &[1.0; 4], se(1.0, 1.0, 1e-300)).unwrap();
        assert!(gp.jitter > 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Gp::fit(&[vec![1.0]], &[1.0], se(0.0, 1.0, 0.1)).is_err());
        let gp = Gp::fit(&[vec![1.0, 2.0]], &[1.0], se(1.0, 1.0, 0.1)).unwrap();
        assert!(matches!(gp.predict(&[vec![1.0]]), Err(Error::Shape { expected: 2, got: 1 })));
    }
}

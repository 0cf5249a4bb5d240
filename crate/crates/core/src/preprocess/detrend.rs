//! Least-squares polynomial detrending on an orthonormal basis.

use crate::error::{Error, Result};

/// Orthonormal polynomial basis (degree 0..=degree) sampled on `n` points of
/// `[-1, 1]`. Built from Legendre recurrences, then re-orthonormalized with
/// two passes of modified Gram-Schmidt against the discrete inner product.
pub fn orthonormal_basis(n: usize, degree: usize) -> Vec<Vec<f64>> {
    let t: Vec<f64> = if n == 1 {
        vec![0.0]
    } else {
        (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect()
    };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(degree + 1);
    basis.push(vec![1.0; n]);
    if degree >= 1 {
        basis.push(t.clone());
    }
    for k in 2..=degree {
        let kf = k as f64;
        let p: Vec<f64> = (0..n)
            .map(|i| ((2.0 * kf - 1.0) * t[i] * basis[k - 1][i] - (kf - 1.0) * basis[k - 2][i]) / kf)
            .collect();
        basis.push(p);
    }
    for k in 0..basis.len() {
        for _ in 0..2 {
            for j in 0..k {
                let proj = dot(&basis[k], &basis[j]);
                let (head, tail) = basis.split_at_mut(k);
                for (v, q) in tail[0].iter_mut().zip(&head[j]) {
                    *v -= proj * q;
                }
            }
        }
        let norm = dot(&basis[k], &basis[k]).sqrt();
        basis[k].iter_mut().for_each(|v| *v /= norm);
    }
    basis
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least-squares fit of a polynomial of `degree` over the sample index.
pub fn polynomial_trend(samples: &[f64], degree: usize) -> Result<Vec<f64>> {
    let n = samples.len();
    if n <= degree + 1 {
        return Err(Error::Argument(format!(
            "degree {degree} needs more than {} samples, got {n}",
            degree + 1
        )));
    }
    let basis = orthonormal_basis(n, degree);
    let mut trend = vec![0.0; n];
    for q in &basis {
        let c = dot(samples, q);
        for (t, v) in trend.iter_mut().zip(q) {
            *t += c * v;
        }
    }
    Ok(trend)
}

/// Subtracts the least-squares polynomial trend.
pub fn detrend_polynomial(samples: &[f64], degree: usize) -> Result<Vec<f64>> {
    let trend = polynomial_trend(samples, degree)?;
    Ok(samples.iter().zip(&trend).map(|(x, t)| x - t).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_orthonormal() {
        let b = orthonormal_basis(2100, 4);
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&b[i], &b[j]) - want).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn rejects_too_short_input() {
        assert!(detrend_polynomial(&[1.0, 2.0, 3.0, 4.0, 5.0], 4).is_err());
        assert!(detrend_polynomial(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 4).is_ok());
    }

    #[test]
    fn zero_maps_to_zero() {
        let z = detrend_polynomial(&[0.0; 100], 4).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
    }
}

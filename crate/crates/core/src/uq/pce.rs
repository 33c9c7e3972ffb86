use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Orthonormal Legendre values `ψ_0..ψ_p` at `x ∈ [-1, 1]` for the uniform
/// density on `[-1, 1]`.
pub fn legendre(p: usize, x: f64) -> Vec<f64> {
    let mut v = vec![1.0; p + 1];
    if p >= 1 {
        v[1] = x;
    }
    for k in 1..p {
        let kf = k as f64;
        v[k + 1] = ((2.0 * kf + 1.0) * x * v[k] - kf * v[k - 1]) / (kf + 1.0);
    }
    for (k, vk) in v.iter_mut().enumerate() {
        *vk *= (2.0 * k as f64 + 1.0).sqrt();
    }
    v
}

/// All multi-indices of total degree `≤ p` in `d` variables, sorted by
/// degree then reverse-lexicographically. The first is the constant.
pub fn total_degree_indices(d: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(d: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for k in (0..=left).rev() {
            cur.push(k);
            rec(d, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for deg in 0..=p {
        let mut level = Vec::new();
        rec(d, deg, &mut Vec::new(), &mut level);
        out.extend(level.into_iter().filter(|a| a.iter().sum::<usize>() == deg));
    }
    out
}

/// Polynomial chaos surrogate in reference variables `ξ ∈ [-1, 1]^d`.
#[derive(Debug, Clone)]
pub struct Pce {
    pub degree: usize,
    pub indices: Vec<Vec<usize>>,
    pub coeffs: DVector<f64>,
}

pub(crate) fn design(xi: &[Vec<f64>], indices: &[Vec<usize>], degree: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(xi.len(), indices.len());
    for (r, x) in xi.iter().enumerate() {
        let tables: Vec<Vec<f64>> = x.iter().map(|&v| legendre(degree, v)).collect();
        for (c, a) in indices.iter().enumerate() {
            m[(r, c)] = a.iter().zip(&tables).map(|(&k, t)| t[k]).product();
        }
    }
    m
}

/// Least squares by Householder QR; fails if `R` has a (relatively) tiny pivot.
fn least_squares(psi: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let p = psi.ncols();
    let qr = psi.clone().qr();
    let r = qr.r();
    let rmax = r.diagonal().amax();
    let rank = r.diagonal().iter().filter(|v| v.abs() > 1e-10 * rmax).count();
    if rank < p || rmax == 0.0 {
        return Err(Error::RankDeficient { rank, terms: p });
    }
    let mut b = y.clone();
    qr.q_tr_mul(&mut b);
    r.solve_upper_triangular(&b.rows(0, p).into_owned())
        .ok_or(Error::RankDeficient { rank, terms: p })
}

impl Pce {
    /// Number of terms of a total-degree basis.
    pub fn n_terms(d: usize, degree: usize) -> usize {
        total_degree_indices(d, degree).len()
    }

    pub fn fit(xi: &[Vec<f64>], y: &[f64], degree: usize) -> Result<Self> {
        let d = xi.first().map_or(0, |r| r.len());
        let indices = total_degree_indices(d, degree);
        if xi.len() < indices.len() {
            return Err(Error::RankDeficient {
                rank: xi.len(),
                terms: indices.len(),
            });
        }
        let psi = design(xi, &indices, degree);
        let coeffs = least_squares(&psi, &DVector::from_column_slice(y))?;
        Ok(Self {
            degree,
            indices,
            coeffs,
        })
    }

    pub fn predict(&self, xi: &[f64]) -> f64 {
        let tables: Vec<Vec<f64>> = xi.iter().map(|&v| legendre(self.degree, v)).collect();
        self.indices
            .iter()
            .zip(self.coeffs.iter())
            .map(|(a, c)| c * a.iter().zip(&tables).map(|(&k, t)| t[k]).product::<f64>())
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn variance(&self) -> f64 {
        self.coeffs.iter().skip(1).map(|c| c * c).sum()
    }

    /// First-order and total indices per variable; zeros if the variance vanishes.
    pub fn sobol(&self) -> (Vec<f64>, Vec<f64>) {
        sobol_from_coeffs(&self.indices, self.coeffs.as_slice())
    }
}

pub(crate) fn sobol_from_coeffs(indices: &[Vec<usize>], coeffs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = indices.first().map_or(0, |a| a.len());
    let var: f64 = coeffs.iter().skip(1).map(|c| c * c).sum();
    let (mut first, mut total) = (vec![0.0; d], vec![0.0; d]);
    if var <= 0.0 {
        return (first, total);
    }
    for (a, c) in indices.iter().zip(coeffs) {
        let active: Vec<usize> = (0..d).filter(|&i| a[i] > 0).collect();
        for &i in &active {
            total[i] += c * c / var;
        }
        if active.len() == 1 {
            first[active[0]] += c * c / var;
        }
    }
    (first, total)
}

/// Hold-out predictivity `1 - mean((y - ŷ)²) / var(y)`.
pub fn q2(pce: &Pce, xi: &[Vec<f64>], y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let mse = xi
        .iter()
        .zip(y)
        .map(|(x, v)| (v - pce.predict(x)).powi(2))
        .sum::<f64>()
        / n;
    if var == 0.0 {
        return if mse == 0.0 { 1.0 } else { f64::NEG_INFINITY };
    }
    1.0 - mse / var
}

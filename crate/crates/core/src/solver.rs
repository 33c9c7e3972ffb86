//! Linear solvers for symmetric positive definite sparse systems.
//!
//! Two routes are provided: an envelope Cholesky factorization after reverse
//! Cuthill-McKee reordering, and preconditioned conjugate gradients. Both are
//! held to the same relative residual contract.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::sparse::{axpy, dot, norm2, CsrMatrix};

/// Largest system size for which [`Method::Auto`] picks the direct route.
pub const DIRECT_LIMIT: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    Jacobi,
    IncompleteCholesky,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Auto,
    Direct,
    Cg(Preconditioner),
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub method: Method,
    /// Target for `‖A x - b‖ / ‖b‖`.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            rel_tol: 1e-10,
            max_iter: 20_000,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub relative_residual: f64,
    /// CG iterations, or refinement sweeps for the direct route.
    pub iterations: usize,
}

pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let bn = norm2(b);
    let mut r = a.mul_vec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    if bn == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / bn
    }
}

/// Solves `A x = b` for SPD `A`.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
    if b.len() != a.n() {
        return Err(Error::MeshMismatch(format!(
            "right-hand side has {} entries, operator has {} rows",
            b.len(),
            a.n()
        )));
    }
    if b.iter().all(|&v| v == 0.0) {
        return Ok(SolveReport {
            x: vec![0.0; a.n()],
            relative_residual: 0.0,
            iterations: 0,
        });
    }
    match opts.method {
        Method::Direct => SpdFactorization::new(a.clone())?.solve(b, opts.rel_tol),
        Method::Cg(p) => pcg(a, b, None, p, opts.rel_tol, opts.max_iter),
        Method::Auto if a.n() <= DIRECT_LIMIT => {
            SpdFactorization::new(a.clone())?.solve(b, opts.rel_tol)
        }
        Method::Auto => pcg(
            a,
            b,
            None,
            Preconditioner::IncompleteCholesky,
            opts.rel_tol,
            opts.max_iter,
        ),
    }
}

/// Reverse Cuthill-McKee ordering of the matrix graph. `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize, mark: &mut Vec<bool>| -> Vec<usize> {
        // returns the last BFS level
        let mut level = vec![start];
        mark[start] = true;
        let mut touched = vec![start];
        loop {
            let mut next = Vec::new();
            for &v in &level {
                for &w in a.row(v).0 {
                    if !mark[w] {
                        mark[w] = true;
                        touched.push(w);
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                for t in touched {
                    mark[t] = false;
                }
                return level;
            }
            level = next;
        }
    };

    let mut scratch = vec![false; n];
    while order.len() < n {
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| degree[i])
            .unwrap();
        // pseudo-peripheral start node
        let mut start = seed;
        for _ in 0..2 {
            let last = bfs_levels(start, &mut scratch);
            start = *last.iter().min_by_key(|&&v| degree[v]).unwrap();
        }
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).0.iter().copied().filter(|&w| !visited[w]).collect();
            nbrs.sort_by_key(|&w| (degree[w], w));
            for w in nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope (skyline) Cholesky factor `P A P^T = L L^T`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl CholeskyFactor {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.n();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for &j in a.row(old).0 {
                let jn = inv[j];
                if jn < first[new] {
                    first[new] = jn;
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + (i - first[i] + 1));
        }
        let mut data = vec![0.0; start[n]];
        for (new, &old) in perm.iter().enumerate() {
            let (cols, vals) = a.row(old);
            for (&j, &v) in cols.iter().zip(vals) {
                let jn = inv[j];
                if jn <= new {
                    data[start[new] + jn - first[new]] += v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let si = start[i];
            for j in fi..i {
                let fj = first[j];
                let sj = start[j];
                let k0 = fi.max(fj);
                let len = j - k0;
                let s = if len > 0 {
                    let ri = &data[si + k0 - fi..si + k0 - fi + len];
                    let rj = &data[sj + k0 - fj..sj + k0 - fj + len];
                    dot(ri, rj)
                } else {
                    0.0
                };
                let ljj = data[sj + j - fj];
                let idx = si + j - fi;
                data[idx] = (data[idx] - s) / ljj;
            }
            let row = &data[si..si + i - fi];
            let d = data[si + i - fi] - dot(row, row);
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Factorization(format!(
                    "non-positive pivot {d:e} at row {i}; matrix is not SPD"
                )));
            }
            data[si + i - fi] = d.sqrt();
        }
        Ok(Self {
            perm,
            first,
            start,
            data,
        })
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let si = self.start[i];
            let row = &self.data[si..si + i - fi];
            let s = dot(row, &y[fi..i]);
            y[i] = (y[i] - s) / self.data[si + i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let si = self.start[i];
            y[i] /= self.data[si + i - fi];
            let yi = y[i];
            let row = &self.data[si..si + i - fi];
            for (yk, l) in y[fi..i].iter_mut().zip(row) {
                *yk -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// A matrix together with its Cholesky factor, for repeated solves with
/// iterative refinement.
#[derive(Debug, Clone)]
pub struct SpdFactorization {
    matrix: CsrMatrix,
    factor: CholeskyFactor,
}

impl SpdFactorization {
    pub fn new(matrix: CsrMatrix) -> Result<Self> {
        let factor = CholeskyFactor::new(&matrix)?;
        Ok(Self { matrix, factor })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn solve(&self, b: &[f64], rel_tol: f64) -> Result<SolveReport> {
        let rep = self.refine(b, rel_tol);
        if rep.relative_residual > rel_tol {
            return Err(Error::Stagnation {
                iterations: rep.iterations,
                residual: rep.relative_residual,
            });
        }
        Ok(rep)
    }

    /// Direct solve plus iterative refinement towards `rel_tol`, stopping
    /// early once a sweep no longer helps. Returns the best iterate reached
    /// even when it misses the target.
    pub fn refine(&self, b: &[f64], rel_tol: f64) -> SolveReport {
        if norm2(b) == 0.0 {
            return SolveReport {
                x: vec![0.0; b.len()],
                relative_residual: 0.0,
                iterations: 0,
            };
        }
        let mut x = self.factor.solve(b);
        let mut res = relative_residual(&self.matrix, &x, b);
        let mut sweeps = 0;
        while res > rel_tol && sweeps < 6 {
            let ax = self.matrix.mul_vec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let mut next_x = x.clone();
            axpy(1.0, &self.factor.solve(&r), &mut next_x);
            let next = relative_residual(&self.matrix, &next_x, b);
            sweeps += 1;
            if next >= res {
                break;
            }
            x = next_x;
            res = next;
        }
        SolveReport {
            x,
            relative_residual: res,
            iterations: sweeps,
        }
    }
}

enum Precond {
    Jacobi(Vec<f64>),
    Ic {
        // strictly lower part in CSR plus diagonal, same pattern as A's lower triangle
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<f64>,
        diag: Vec<f64>,
    },
}

impl Precond {
    fn jacobi(a: &CsrMatrix) -> Self {
        Precond::Jacobi(a.diagonal().iter().map(|d| 1.0 / d).collect())
    }

    fn incomplete_cholesky(a: &CsrMatrix) -> Self {
        let n = a.n();
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut base = Vec::new();
        let mut adiag = vec![0.0; n];
        for i in 0..n {
            let (c, v) = a.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if j < i {
                    cols.push(j);
                    base.push(x);
                } else if j == i {
                    adiag[i] = x;
                }
            }
            row_ptr.push(cols.len());
        }
        let mut shift = 0.0;
        loop {
            if let Some((vals, diag)) = Self::try_ic(&row_ptr, &cols, &base, &adiag, shift) {
                return Precond::Ic {
                    row_ptr,
                    cols,
                    vals,
                    diag,
                };
            }
            shift = if shift == 0.0 { 1e-3 } else { shift * 4.0 };
            if shift > 1.0 {
                return Self::jacobi(a);
            }
        }
    }

    fn try_ic(
        row_ptr: &[usize],
        cols: &[usize],
        base: &[f64],
        adiag: &[f64],
        shift: f64,
    ) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = adiag.len();
        let mut vals = base.to_vec();
        let mut diag: Vec<f64> = adiag.iter().map(|d| d * (1.0 + shift)).collect();
        for i in 0..n {
            let (ri0, ri1) = (row_ptr[i], row_ptr[i + 1]);
            for p in ri0..ri1 {
                let j = cols[p];
                // sparse dot of row i and row j over columns < j
                let (rj0, rj1) = (row_ptr[j], row_ptr[j + 1]);
                let (mut a, mut b) = (ri0, rj0);
                let mut s = 0.0;
                while a < p && b < rj1 {
                    match cols[a].cmp(&cols[b]) {
                        std::cmp::Ordering::Less => a += 1,
                        std::cmp::Ordering::Greater => b += 1,
                        std::cmp::Ordering::Equal => {
                            s += vals[a] * vals[b];
                            a += 1;
                            b += 1;
                        }
                    }
                }
                vals[p] = (vals[p] - s) / diag[j];
            }
            let s: f64 = vals[ri0..ri1].iter().map(|v| v * v).sum();
            let d = diag[i] - s;
            if !(d > 0.0) {
                return None;
            }
            diag[i] = d.sqrt();
        }
        Some((vals, diag))
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Precond::Jacobi(inv) => {
                for ((zi, ri), di) in z.iter_mut().zip(r).zip(inv) {
                    *zi = ri * di;
                }
            }
            Precond::Ic {
                row_ptr,
                cols,
                vals,
                diag,
            } => {
                let n = diag.len();
                z.copy_from_slice(r);
                for i in 0..n {
                    let mut s = z[i];
                    for p in row_ptr[i]..row_ptr[i + 1] {
                        s -= vals[p] * z[cols[p]];
                    }
                    z[i] = s / diag[i];
                }
                for i in (0..n).rev() {
                    z[i] /= diag[i];
                    let zi = z[i];
                    for p in row_ptr[i]..row_ptr[i + 1] {
                        z[cols[p]] -= vals[p] * zi;
                    }
                }
            }
        }
    }
}

/// Preconditioned conjugate gradients.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    preconditioner: Preconditioner,
    rel_tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    let n = a.n();
    let bn = norm2(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if bn == 0.0 {
        return Ok(SolveReport {
            x: vec![0.0; n],
            relative_residual: 0.0,
            iterations: 0,
        });
    }
    let m = match preconditioner {
        Preconditioner::Jacobi => Precond::jacobi(a),
        Preconditioner::IncompleteCholesky => Precond::incomplete_cholesky(a),
    };
    let mut r = a.mul_vec(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    m.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = norm2(&r) / bn;
    let mut it = 0;
    while res > rel_tol && it < max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        it += 1;
        // recompute the true residual now and then to avoid drift
        if it % 50 == 0 {
            r = a.mul_vec(&x);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri = bi - *ri;
            }
        }
        res = norm2(&r) / bn;
        m.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    let true_res = relative_residual(a, &x, b);
    if true_res > rel_tol {
        return Err(Error::Stagnation {
            iterations: it,
            residual: true_res,
        });
    }
    Ok(SolveReport {
        x,
        relative_residual: true_res,
        iterations: it,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 2D five-point Laplacian plus a small mass shift; SPD.
    fn laplacian(m: usize) -> CsrMatrix {
        let n = m * m;
        let mut t = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let k = i * m + j;
                t.push((k, k, 4.01));
                if i > 0 {
                    t.push((k, k - m, -1.0));
                }
                if i + 1 < m {
                    t.push((k, k + m, -1.0));
                }
                if j > 0 {
                    t.push((k, k - 1, -1.0));
                }
                if j + 1 < m {
                    t.push((k, k + 1, -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(n, &t).unwrap()
    }

    fn rhs(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect()
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = laplacian(9);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, (0..81).collect::<Vec<_>>());
    }

    #[test]
    fn direct_and_cg_agree() {
        let a = laplacian(20);
        let b = rhs(a.n());
        let opts = SolverOptions::default();
        let d = solve_spd(&a, &b, &opts.with_method(Method::Direct)).unwrap();
        let j = solve_spd(&a, &b, &opts.with_method(Method::Cg(Preconditioner::Jacobi))).unwrap();
        let ic = solve_spd(
            &a,
            &b,
            &opts.with_method(Method::Cg(Preconditioner::IncompleteCholesky)),
        )
        .unwrap();
        for r in [&d, &j, &ic] {
            assert!(r.relative_residual <= 1e-10);
        }
        let diff = d
            .x
            .iter()
            .zip(&ic.x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-8, "{diff}");
        assert!(ic.iterations < j.iterations);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)])
            .unwrap();
        assert!(matches!(
            CholeskyFactor::new(&a),
            Err(Error::Factorization(_))
        ));
    }

    #[test]
    fn cg_reports_stagnation() {
        let a = laplacian(30);
        let b = rhs(a.n());
        let err = pcg(&a, &b, None, Preconditioner::Jacobi, 1e-14, 3).unwrap_err();
        match err {
            Error::Stagnation { iterations, residual } => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-14);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = laplacian(4);
        let r = solve_spd(&a, &[0.0; 16], &SolverOptions::default()).unwrap();
        assert!(r.x.iter().all(|&v| v == 0.0));
    }
}

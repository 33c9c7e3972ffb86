use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{GreedyHistory, GreedyStep, ReducedModel, StopReason};
use crate::affine::{AffineSystem, QA, QF};
use crate::error::{Error, Result};
use crate::fem::Parameter;
use crate::solver::{solve_spd, SolverOptions, SpdFactorization};
use crate::sparse::{axpy, dot, CsrMatrix};

/// Relative residual required of every Riesz solve.
const RIESZ_TOL: f64 = 1e-12;
/// Snapshots whose new direction is shorter than this fraction of their norm are dropped.
const REJECT_TOL: f64 = 1e-10;

/// The energy product at a reference parameter, with its factorization.
#[derive(Debug, Clone)]
pub struct InnerProduct {
    fact: SpdFactorization,
    pub mu_ref: Parameter,
}

/// `X = A(μ_ref)`.
pub fn x_inner_product(affine: &AffineSystem, mu_ref: &Parameter) -> Result<InnerProduct> {
    Ok(InnerProduct {
        fact: SpdFactorization::new(affine.operator(mu_ref))?,
        mu_ref: *mu_ref,
    })
}

impl InnerProduct {
    pub fn matrix(&self) -> &CsrMatrix {
        self.fact.matrix()
    }

    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        self.matrix().bilinear(u, v)
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.dot(u, u).max(0.0).sqrt()
    }

    /// Riesz representer of the functional `v ↦ rhs·v`. Refinement aims at
    /// a tight residual but settles for the default solver tolerance when
    /// round-off stalls it on fine meshes.
    pub fn riesz(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let rep = self.fact.refine(rhs, RIESZ_TOL);
        let floor = SolverOptions::default().rel_tol;
        if rep.relative_residual > floor {
            return Err(Error::Stagnation {
                iterations: rep.iterations,
                residual: rep.relative_residual,
            });
        }
        Ok(rep.x)
    }

    /// `‖g‖_{X'} = sqrt(g^T X^{-1} g)`.
    pub fn dual_norm(&self, g: &[f64]) -> Result<f64> {
        Ok(dot(g, &self.riesz(g)?).max(0.0).sqrt())
    }
}

/// X-orthonormal vectors with their images under X cached.
#[derive(Debug, Clone, Default)]
pub struct Basis {
    pub vectors: Vec<Vec<f64>>,
    images: Vec<Vec<f64>>,
    pub rejected: usize,
}

impl Basis {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Modified Gram-Schmidt with one reorthogonalization pass. Returns the
    /// projection coefficients and the norm of the remaining component; the
    /// vector is appended only if that norm exceeds `rel_tol` times its
    /// original norm.
    fn push_with(&mut self, v: &[f64], x: &CsrMatrix, rel_tol: f64) -> (Vec<f64>, f64, bool) {
        let mut w = v.to_vec();
        let orig = x.bilinear(&w, &w).max(0.0).sqrt();
        let mut coeffs = vec![0.0; self.len()];
        for _ in 0..2 {
            for (k, (z, xz)) in self.vectors.iter().zip(&self.images).enumerate() {
                let c = dot(xz, &w);
                axpy(-c, z, &mut w);
                coeffs[k] += c;
            }
        }
        let xw = x.mul_vec(&w);
        let norm = dot(&w, &xw).max(0.0).sqrt();
        if orig == 0.0 || norm <= rel_tol * orig {
            self.rejected += 1;
            return (coeffs, norm, false);
        }
        let s = 1.0 / norm;
        self.vectors.push(w.iter().map(|v| v * s).collect());
        self.images.push(xw.iter().map(|v| v * s).collect());
        (coeffs, norm, true)
    }

    /// Adds `v` if it is not (numerically) in the span; returns whether it was added.
    pub fn try_push(&mut self, v: &[f64], x: &InnerProduct) -> bool {
        self.push_with(v, x.matrix(), REJECT_TOL).2
    }
}

/// Orthonormalizes snapshots in X, silently dropping dependent ones.
pub fn orthonormalize(snapshots: &[Vec<f64>], x: &InnerProduct) -> Basis {
    let mut b = Basis::default();
    for s in snapshots {
        b.try_push(s, x);
    }
    b
}

/// Incrementally built reduced model.
pub struct RbBuilder<'a> {
    affine: &'a AffineSystem,
    x: &'a InnerProduct,
    basis: Basis,
    a_n: Vec<DMatrix<f64>>,
    f_n: Vec<Vec<f64>>,
    l_n: Vec<Vec<f64>>,
    output_dual_norms: Vec<f64>,
    f_dual_norms: [f64; QF],
    /// X-orthonormal basis of the Riesz representers.
    riesz: Basis,
    /// Coefficients of each representer in `riesz`, one column per representer.
    columns: Vec<Vec<f64>>,
    history: GreedyHistory,
}

impl<'a> RbBuilder<'a> {
    pub fn new(affine: &'a AffineSystem, x: &'a InnerProduct) -> Result<Self> {
        if x.matrix().n() != affine.n() {
            return Err(Error::MeshMismatch("inner product and affine system differ in size".into()));
        }
        let mut b = Self {
            affine,
            x,
            basis: Basis::default(),
            a_n: vec![DMatrix::zeros(0, 0); QA],
            f_n: vec![Vec::new(); QF],
            l_n: vec![Vec::new(); affine.outputs.len()],
            output_dual_norms: affine
                .outputs
                .iter()
                .map(|o| x.dual_norm(&o.dual))
                .collect::<Result<_>>()?,
            f_dual_norms: [0.0; QF],
            riesz: Basis::default(),
            columns: Vec::new(),
            history: GreedyHistory {
                selected: Vec::new(),
                steps: Vec::new(),
                stop: StopReason::Manual,
            },
        };
        for p in 0..QF {
            let rho = x.riesz(&affine.f[p])?;
            b.f_dual_norms[p] = x.norm(&rho);
            b.add_representer(&rho);
        }
        Ok(b)
    }

    fn add_representer(&mut self, rho: &[f64]) {
        let (mut coeffs, norm, added) = self.riesz.push_with(rho, self.x.matrix(), 0.0);
        if added {
            coeffs.push(norm);
        }
        self.columns.push(coeffs);
    }

    pub fn n(&self) -> usize {
        self.basis.len()
    }

    /// Orthonormalizes `snapshot` against the basis and, if independent,
    /// extends every reduced quantity by one row and column.
    pub fn add_snapshot(&mut self, snapshot: &[f64]) -> Result<bool> {
        if snapshot.len() != self.affine.n() {
            return Err(Error::MeshMismatch("snapshot length differs from the system size".into()));
        }
        if !self.basis.try_push(snapshot, self.x) {
            return Ok(false);
        }
        let n = self.basis.len();
        let xi = self.basis.vectors[n - 1].clone();
        for q in 0..QA {
            let axi = self.affine.a[q].mul_vec(&xi);
            let mut grown = DMatrix::zeros(n, n);
            grown.view_mut((0, 0), (n - 1, n - 1)).copy_from(&self.a_n[q]);
            for (i, z) in self.basis.vectors.iter().enumerate() {
                let v = dot(z, &axi);
                grown[(i, n - 1)] = v;
                grown[(n - 1, i)] = v;
            }
            self.a_n[q] = grown;
            let rho = self.x.riesz(&axi)?;
            self.add_representer(&rho);
        }
        for p in 0..QF {
            self.f_n[p].push(dot(&self.affine.f[p], &xi));
        }
        for (k, o) in self.affine.outputs.iter().enumerate() {
            self.l_n[k].push(dot(&o.dual, &xi));
        }
        Ok(true)
    }

    pub fn model(&self) -> ReducedModel {
        let m = self.riesz.len();
        let cols = self.columns.len();
        let mut residual = DMatrix::zeros(m, cols);
        for (j, c) in self.columns.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                residual[(i, j)] = v;
            }
        }
        ReducedModel {
            mesh: self.affine.mesh,
            consts: self.affine.consts,
            mu_ref: self.x.mu_ref,
            beta_ref: self.affine.beta(&self.x.mu_ref).0,
            basis: self.basis.vectors.clone(),
            a_n: self.a_n.clone(),
            f_n: self.f_n.iter().map(|v| DVector::from_column_slice(v)).collect(),
            output_names: self.affine.outputs.iter().map(|o| o.name.clone()).collect(),
            l_n: self.l_n.iter().map(|v| DVector::from_column_slice(v)).collect(),
            output_dual_norms: self.output_dual_norms.clone(),
            f_dual_norms: self.f_dual_norms,
            residual,
            history: self.history.clone(),
        }
    }
}

/// Reduced model spanned by the given snapshots.
pub fn project(affine: &AffineSystem, snapshots: &[Vec<f64>], x: &InnerProduct) -> Result<ReducedModel> {
    let mut b = RbBuilder::new(affine, x)?;
    for s in snapshots {
        b.add_snapshot(s)?;
    }
    Ok(b.model())
}

#[derive(Debug, Clone, Copy)]
pub struct GreedyOptions {
    /// Stop once the largest bound over the training set is at most this.
    pub tol: f64,
    pub n_max: usize,
    /// Measure the bound relative to `‖u_N(μ)‖_X` instead of absolutely.
    pub relative: bool,
    /// Solver settings for snapshot computations.
    pub truth: SolverOptions,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            n_max: 20,
            relative: true,
            truth: SolverOptions::default().with_tol(1e-12),
        }
    }
}

/// Snapshot solve at `opts.rel_tol`. Refinement can stall just above a very
/// tight target on fine meshes; the snapshot is then taken at the default
/// solver tolerance instead of aborting.
fn truth_solve(affine: &AffineSystem, mu: &Parameter, opts: &SolverOptions) -> Result<Vec<f64>> {
    let a = affine.operator(mu);
    let b = affine.load(mu);
    let fallback = SolverOptions::default().rel_tol;
    match solve_spd(&a, &b, opts) {
        Err(Error::Stagnation { residual, .. }) if residual <= fallback && opts.rel_tol < fallback => {
            Ok(solve_spd(&a, &b, &opts.with_tol(fallback))?.x)
        }
        r => Ok(r?.x),
    }
}

/// Greedy enrichment: starts from the first training parameter, then
/// repeatedly adds the snapshot where the error bound is largest.
pub fn greedy_train(
    affine: &AffineSystem,
    x: &InnerProduct,
    train: &[Parameter],
    opts: &GreedyOptions,
) -> Result<ReducedModel> {
    if train.is_empty() {
        return Err(Error::Parameter("training set is empty".into()));
    }
    if !(opts.tol > 0.0) || opts.n_max == 0 {
        return Err(Error::Parameter("greedy needs tol > 0 and n_max >= 1".into()));
    }
    let mut b = RbBuilder::new(affine, x)?;
    let first = truth_solve(affine, &train[0], &opts.truth)?;
    b.add_snapshot(&first)?;
    b.history.selected.push(train[0]);
    let stop = loop {
        let model = b.model();
        let bounds: Vec<Result<f64>> = train
            .par_iter()
            .map(|mu| {
                model.online_solve(mu).map(|s| {
                    if opts.relative {
                        // the basis is X-orthonormal, so ‖Z u‖_X = |u|
                        s.certificate.delta / s.coefficients.norm().max(f64::MIN_POSITIVE)
                    } else {
                        s.certificate.delta
                    }
                })
            })
            .collect();
        let mut best = (0, f64::NEG_INFINITY);
        for (i, r) in bounds.into_iter().enumerate() {
            let d = r?;
            if d > best.1 {
                best = (i, d);
            }
        }
        let mu_star = train[best.0];
        b.history.steps.push(GreedyStep {
            n: b.n(),
            max_bound: best.1,
            argmax: mu_star,
        });
        if best.1 <= opts.tol {
            break StopReason::Tolerance;
        }
        if b.n() >= opts.n_max {
            break StopReason::MaxSize;
        }
        let snap = match truth_solve(affine, &mu_star, &opts.truth) {
            Ok(s) => s,
            Err(e) => {
                break StopReason::Failed {
                    message: e.to_string(),
                }
            }
        };
        if !b.add_snapshot(&snap)? {
            break StopReason::Rejected;
        }
        b.history.selected.push(mu_star);
    };
    b.history.stop = stop;
    Ok(b.model())
}

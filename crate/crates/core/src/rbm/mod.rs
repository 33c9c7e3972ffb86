//! Certified reduced-basis approximation of the linearized model.
//!
//! The X-inner product is the energy product at a reference parameter μ̄,
//! so the coercivity constant in X is bounded below by
//! `min_q β_A^q(μ) / β_A^q(μ̄)`. Residual dual norms are evaluated online
//! from an X-orthonormalized set of Riesz representers: with
//! `ρ_j = Σ_i w_i R_ij`, `‖r(μ)‖_{X'} = ‖R θ(μ)‖₂`, which avoids the
//! cancellation of the usual Gram-matrix formula.

mod offline;
mod training;

pub use offline::{
    greedy_train, orthonormalize, project, x_inner_product, Basis, GreedyOptions, InnerProduct,
    RbBuilder,
};
pub use training::training_set;

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::affine::{beta, QA, QF};
use crate::container::Container;
use crate::error::{Error, Result};
use crate::fem::{Parameter, PhysicalConstants};
use crate::mesh::MeshId;

/// Min-theta lower bound of the coercivity constant in the μ̄-energy norm.
pub fn coercivity_lb(beta_a: &[f64; QA], beta_ref: &[f64; QA]) -> Result<f64> {
    let mut lb = f64::INFINITY;
    for q in 0..QA {
        if !(beta_a[q] > 0.0) {
            return Err(Error::Coercivity(format!(
                "β_A^{} = {} is not positive",
                q + 1,
                beta_a[q]
            )));
        }
        if !(beta_ref[q] > 0.0) {
            return Err(Error::Coercivity(format!(
                "reference β_A^{} = {} is not positive",
                q + 1,
                beta_ref[q]
            )));
        }
        lb = lb.min(beta_a[q] / beta_ref[q]);
    }
    Ok(lb)
}

/// Why greedy enrichment stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum StopReason {
    Tolerance,
    MaxSize,
    /// The selected snapshot was already in the span of the basis.
    Rejected,
    Failed { message: String },
    /// Built by explicit projection, not by the greedy loop.
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    /// Basis size when the bound was evaluated.
    pub n: usize,
    pub max_bound: f64,
    /// Parameter selected for the next snapshot (the worst-approximated one).
    pub argmax: Parameter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyHistory {
    pub selected: Vec<Parameter>,
    pub steps: Vec<GreedyStep>,
    pub stop: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCertificate {
    /// Bound on `‖T - Z u_N‖_X`.
    pub delta: f64,
    /// Bound on each output error.
    pub delta_s: Vec<f64>,
    pub alpha_lb: f64,
    pub residual_norm: f64,
}

#[derive(Debug, Clone)]
pub struct OnlineSolution {
    pub coefficients: DVector<f64>,
    pub outputs: Vec<f64>,
    pub certificate: ErrorCertificate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelMeta {
    n_h: usize,
    n: usize,
    mesh_id: u64,
    consts: PhysicalConstants,
    mu_ref: Parameter,
    outputs: Vec<String>,
    output_dual_norms: Vec<f64>,
    f_dual_norms: [f64; QF],
    residual_rows: usize,
    history: GreedyHistory,
}

/// Everything the online stage needs, plus the basis for field reconstruction.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub mesh: MeshId,
    pub consts: PhysicalConstants,
    pub mu_ref: Parameter,
    pub(crate) beta_ref: [f64; QA],
    /// Basis vectors `ξ_n` over mesh vertices, X-orthonormal.
    pub basis: Vec<Vec<f64>>,
    pub a_n: Vec<DMatrix<f64>>,
    pub f_n: Vec<DVector<f64>>,
    pub output_names: Vec<String>,
    pub l_n: Vec<DVector<f64>>,
    /// `‖L_k‖_{X'}`
    pub output_dual_norms: Vec<f64>,
    pub(crate) f_dual_norms: [f64; QF],
    /// Columns ordered `[f^1, f^2, A^1 ξ_1, .., A^4 ξ_1, A^1 ξ_2, ..]`.
    pub(crate) residual: DMatrix<f64>,
    pub history: GreedyHistory,
}

impl ReducedModel {
    pub fn n(&self) -> usize {
        self.basis.len()
    }

    pub fn n_h(&self) -> usize {
        self.basis.first().map_or(0, Vec::len)
    }

    pub fn beta_ref(&self) -> [f64; QA] {
        self.beta_ref
    }

    pub fn coercivity_lb(&self, mu: &Parameter) -> Result<f64> {
        coercivity_lb(&beta(mu, &self.consts).0, &self.beta_ref)
    }

    /// Gram matrix `G_ij = (ρ_i, ρ_j)_X` of the Riesz representers.
    pub fn residual_gram(&self) -> DMatrix<f64> {
        self.residual.transpose() * &self.residual
    }

    fn theta(&self, bf: &[f64; QF], ba: &[f64; QA], u: &DVector<f64>) -> DVector<f64> {
        let n = u.len();
        let mut th = DVector::zeros(QF + QA * n);
        th[0] = bf[0];
        th[1] = bf[1];
        for i in 0..n {
            for q in 0..QA {
                th[QF + QA * i + q] = -ba[q] * u[i];
            }
        }
        th
    }

    /// Residual dual norm for reduced coefficients `u` at `mu`.
    pub fn residual_norm(&self, mu: &Parameter, u: &DVector<f64>) -> f64 {
        let (ba, bf) = beta(mu, &self.consts);
        let th = self.theta(&bf, &ba, u);
        let cols = QF + QA * u.len();
        (self.residual.columns(0, cols) * th).norm()
    }

    /// Reduced solve with outputs and a posteriori bounds.
    pub fn online_solve(&self, mu: &Parameter) -> Result<OnlineSolution> {
        self.online_solve_n(mu, self.n())
    }

    /// Online solve using only the first `n` basis functions.
    pub fn online_solve_n(&self, mu: &Parameter, n: usize) -> Result<OnlineSolution> {
        if n > self.n() {
            return Err(Error::MeshMismatch(format!(
                "requested {n} basis functions, model has {}",
                self.n()
            )));
        }
        let (ba, bf) = beta(mu, &self.consts);
        let alpha = coercivity_lb(&ba, &self.beta_ref)?;
        let u = if n == 0 {
            DVector::zeros(0)
        } else {
            let mut a = DMatrix::zeros(n, n);
            for q in 0..QA {
                a += self.a_n[q].view((0, 0), (n, n)) * ba[q];
            }
            let mut f = DVector::zeros(n);
            for p in 0..QF {
                f += self.f_n[p].rows(0, n) * bf[p];
            }
            let chol = a.cholesky().ok_or(Error::SingularReduced)?;
            chol.solve(&f)
        };
        let outputs = self
            .l_n
            .iter()
            .map(|l| l.rows(0, n).dot(&u))
            .collect();
        let th = self.theta(&bf, &ba, &u);
        let res = (self.residual.columns(0, QF + QA * n) * th).norm();
        let delta = res / alpha;
        Ok(OnlineSolution {
            coefficients: u,
            outputs,
            certificate: ErrorCertificate {
                delta,
                delta_s: self.output_dual_norms.iter().map(|d| d * delta).collect(),
                alpha_lb: alpha,
                residual_norm: res,
            },
        })
    }

    /// Field `Z u` over mesh vertices.
    pub fn reconstruct(&self, u: &DVector<f64>) -> Vec<f64> {
        let mut t = vec![0.0; self.n_h()];
        for (z, &c) in self.basis.iter().zip(u.iter()) {
            crate::sparse::axpy(c, z, &mut t);
        }
        t
    }

    /// Nested model made of the first `n` basis functions.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n() {
            return Err(Error::MeshMismatch(format!(
                "cannot truncate a model of size {} to {n}",
                self.n()
            )));
        }
        let mut m = self.clone();
        m.basis.truncate(n);
        m.a_n = self.a_n.iter().map(|a| a.view((0, 0), (n, n)).into_owned()).collect();
        m.f_n = self.f_n.iter().map(|f| f.rows(0, n).into_owned()).collect();
        m.l_n = self.l_n.iter().map(|l| l.rows(0, n).into_owned()).collect();
        m.residual = self.residual.columns(0, QF + QA * n).into_owned();
        Ok(m)
    }

    pub fn to_container(&self) -> Container {
        let meta = ModelMeta {
            n_h: self.n_h(),
            n: self.n(),
            mesh_id: self.mesh.0,
            consts: self.consts,
            mu_ref: self.mu_ref,
            outputs: self.output_names.clone(),
            output_dual_norms: self.output_dual_norms.clone(),
            f_dual_norms: self.f_dual_norms,
            residual_rows: self.residual.nrows(),
            history: self.history.clone(),
        };
        let mut c = Container::new(
            "reduced-model",
            serde_json::to_value(meta).expect("metadata serializes"),
        );
        let flat: Vec<f64> = self.basis.iter().flatten().copied().collect();
        c.put_f64("basis", &flat);
        for (q, a) in self.a_n.iter().enumerate() {
            c.put_f64(&format!("A_N{}", q + 1), a.as_slice());
        }
        for (p, f) in self.f_n.iter().enumerate() {
            c.put_f64(&format!("f_N{}", p + 1), f.as_slice());
        }
        for (k, l) in self.l_n.iter().enumerate() {
            c.put_f64(&format!("L_N{k}"), l.as_slice());
        }
        c.put_f64("residual", self.residual.as_slice());
        c.put_f64("gram", self.residual_gram().as_slice());
        c
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        c.expect_kind("reduced-model")?;
        let meta: ModelMeta = serde_json::from_value(c.meta.clone())?;
        let (n, n_h) = (meta.n, meta.n_h);
        let check = |name: &str, len: usize| -> Result<&[f64]> {
            let v = c.f64s(name)?;
            if v.len() != len {
                return Err(Error::Container(format!(
                    "section `{name}` has {} values, expected {len}",
                    v.len()
                )));
            }
            Ok(v)
        };
        let basis = check("basis", n * n_h)?
            .chunks(n_h.max(1))
            .take(n)
            .map(<[f64]>::to_vec)
            .collect();
        let a_n = (1..=QA)
            .map(|q| check(&format!("A_N{q}"), n * n).map(|v| DMatrix::from_column_slice(n, n, v)))
            .collect::<Result<Vec<_>>>()?;
        let f_n = (1..=QF)
            .map(|p| check(&format!("f_N{p}"), n).map(DVector::from_column_slice))
            .collect::<Result<Vec<_>>>()?;
        let l_n = (0..meta.outputs.len())
            .map(|k| check(&format!("L_N{k}"), n).map(DVector::from_column_slice))
            .collect::<Result<Vec<_>>>()?;
        let cols = QF + QA * n;
        let residual =
            DMatrix::from_column_slice(meta.residual_rows, cols, check("residual", meta.residual_rows * cols)?);
        Ok(Self {
            mesh: MeshId(meta.mesh_id),
            consts: meta.consts,
            mu_ref: meta.mu_ref,
            beta_ref: beta(&meta.mu_ref, &meta.consts).0,
            basis,
            a_n,
            f_n,
            output_names: meta.outputs,
            l_n,
            output_dual_norms: meta.output_dual_norms,
            f_dual_norms: meta.f_dual_norms,
            residual,
            history: meta.history,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_container().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_container(&Container::load(path)?)
    }

    pub fn output_index(&self, name: &str) -> Option<usize> {
        self.output_names.iter().position(|n| n == name)
    }
}

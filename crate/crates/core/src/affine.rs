//! Affine parametric form of the linearized problem:
//! `A(μ) = Σ_q β_A^q(μ) A^q` and `f(μ) = Σ_p β_F^p(μ) f^p`.
//!
//! | q | β_A^q | A^q |
//! |---|-------|-----|
//! | 1 | `k_lens` | unit stiffness of the parametrized region |
//! | 2 | `h_amb` | `amb` boundary mass |
//! | 3 | `h_bl` | `body` boundary mass |
//! | 4 | 1 | `h_r` × `amb` mass + stiffness of every other region |
//!
//! and `β_F = (h_amb T_amb + h_r T_amb - E, h_bl T_bl)` with `f^1`, `f^2` the
//! integrals of the basis functions over `amb` and `body`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::container::Container;
use crate::error::{Error, Result};
use crate::fem::{assembly, OutputFunctional, Parameter, PhysicalConstants};
use crate::mesh::{BoundaryLabel, Mesh, MeshId, RegionTable};
use crate::sparse::CsrMatrix;

pub const QA: usize = 4;
pub const QF: usize = 2;

/// Coefficients `(β_A, β_F)` at `mu`.
pub fn beta(mu: &Parameter, consts: &PhysicalConstants) -> ([f64; QA], [f64; QF]) {
    (
        [mu.k_lens, mu.h_amb, mu.h_bl, 1.0],
        [
            mu.h_amb * mu.t_amb + consts.h_r * mu.t_amb - mu.e,
            mu.h_bl * mu.t_bl,
        ],
    )
}

/// Output functional stored by name as a dual vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedOutput {
    pub name: String,
    pub dual: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AffineSystem {
    pub mesh: MeshId,
    pub consts: PhysicalConstants,
    pub a: Vec<CsrMatrix>,
    pub f: Vec<Vec<f64>>,
    pub outputs: Vec<NamedOutput>,
}

pub fn build_affine(
    mesh: &Mesh,
    regions: &RegionTable,
    consts: &PhysicalConstants,
) -> Result<AffineSystem> {
    regions.check_mesh(mesh)?;
    consts.validate()?;
    let lens = mesh.region_index(regions.parametrized());
    let k_other: Vec<f64> = mesh
        .regions()
        .iter()
        .enumerate()
        .map(|(i, r)| if Some(i) == lens { 0.0 } else { regions.get(r).unwrap() })
        .collect();
    let a1 = assembly::stiffness_with(mesh, |c| {
        if Some(mesh.cell_region_index(c)) == lens {
            1.0
        } else {
            0.0
        }
    });
    let a2 = assembly::boundary_mass(mesh, BoundaryLabel::Amb);
    let a3 = assembly::boundary_mass(mesh, BoundaryLabel::Body);
    let mut a4 = assembly::stiffness_with(mesh, |c| k_other[mesh.cell_region_index(c)]);
    a4.axpy(consts.h_r, &a2);
    Ok(AffineSystem {
        mesh: mesh.id(),
        consts: *consts,
        a: vec![a1, a2, a3, a4],
        f: vec![
            assembly::boundary_load(mesh, BoundaryLabel::Amb),
            assembly::boundary_load(mesh, BoundaryLabel::Body),
        ],
        outputs: Vec::new(),
    })
}

impl AffineSystem {
    pub fn n(&self) -> usize {
        self.f[0].len()
    }

    pub fn beta(&self, mu: &Parameter) -> ([f64; QA], [f64; QF]) {
        beta(mu, &self.consts)
    }

    /// Attaches output functionals built on the same mesh.
    pub fn with_outputs(mut self, outputs: &[OutputFunctional]) -> Result<Self> {
        for o in outputs {
            if o.mesh_id() != self.mesh {
                return Err(Error::MeshMismatch(format!(
                    "output `{}` was built on another mesh",
                    o.name
                )));
            }
            self.outputs.push(NamedOutput {
                name: o.name.clone(),
                dual: o.dual().to_vec(),
            });
        }
        Ok(self)
    }

    pub fn operator(&self, mu: &Parameter) -> CsrMatrix {
        let (ba, _) = self.beta(mu);
        CsrMatrix::linear_combination(&ba, &self.a)
    }

    pub fn load(&self, mu: &Parameter) -> Vec<f64> {
        let (_, bf) = self.beta(mu);
        (0..self.n())
            .map(|i| bf[0] * self.f[0][i] + bf[1] * self.f[1][i])
            .collect()
    }

    pub fn to_container(&self) -> Container {
        let meta = serde_json::json!({
            "n": self.n(),
            "mesh_id": self.mesh.0,
            "consts": self.consts,
            "outputs": self.outputs.iter().map(|o| o.name.clone()).collect::<Vec<_>>(),
        });
        let mut c = Container::new("affine", meta);
        c.put_usize("pattern.row_ptr", self.a[0].row_ptr());
        c.put_usize("pattern.col_idx", self.a[0].col_idx());
        for (q, a) in self.a.iter().enumerate() {
            c.put_f64(&format!("A{}", q + 1), a.values());
        }
        for (p, f) in self.f.iter().enumerate() {
            c.put_f64(&format!("f{}", p + 1), f);
        }
        for (k, o) in self.outputs.iter().enumerate() {
            c.put_f64(&format!("L{k}"), &o.dual);
        }
        c
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        c.expect_kind("affine")?;
        #[derive(Deserialize)]
        struct Meta {
            n: usize,
            mesh_id: u64,
            consts: PhysicalConstants,
            outputs: Vec<String>,
        }
        let meta: Meta = serde_json::from_value(c.meta.clone())?;
        let row_ptr = c.usizes("pattern.row_ptr")?;
        let col_idx = c.usizes("pattern.col_idx")?;
        let a = (1..=QA)
            .map(|q| {
                CsrMatrix::from_raw(
                    meta.n,
                    row_ptr.clone(),
                    col_idx.clone(),
                    c.f64s(&format!("A{q}"))?.to_vec(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let f = (1..=QF)
            .map(|p| c.f64s(&format!("f{p}")).map(|v| v.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let outputs = meta
            .outputs
            .iter()
            .enumerate()
            .map(|(k, name)| {
                Ok(NamedOutput {
                    name: name.clone(),
                    dual: c.f64s(&format!("L{k}"))?.to_vec(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if f.iter().chain(outputs.iter().map(|o| &o.dual)).any(|v| v.len() != meta.n) {
            return Err(Error::Container("vector length does not match n".into()));
        }
        Ok(Self {
            mesh: MeshId(meta.mesh_id),
            consts: meta.consts,
            a,
            f,
            outputs,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_container().save(path)
    }

    pub fn load_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_container(&Container::load(path)?)
    }
}

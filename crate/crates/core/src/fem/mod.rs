//! P1 finite elements for steady conduction with Robin and radiative
//! boundary exchange.
//!
//! Region `i` conducts with `k_i`. On `amb` facets the outward flux is
//! `h_amb (T - T_amb) + σε (T⁴ - T_amb⁴) + E` (nonlinear model) or
//! `(h_amb + h_r)(T - T_amb) + E` (linearized model); on `body` facets it is
//! `h_bl (T - T_bl)`.

pub mod assembly;
mod dsa;
mod export;
mod param;
pub mod quadrature;
mod solve;

pub use dsa::{dsa_sweep, DsaRow, DsaTable};
pub use export::{read_field, write_field};
pub use param::{Parameter, PhysicalConstants, PARAM_NAMES};
pub use solve::{
    assemble_linear, linearize_hr, solve_linear, solve_nonlinear, LinearSystem, NewtonLog,
    NewtonOptions,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{locate_point, Mesh, MeshId};

/// Nodal temperatures (K) on a specific mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    mesh: MeshId,
    values: Vec<f64>,
}

impl DiscreteField {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::MeshMismatch(format!(
                "field has {} values, mesh has {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite field value at vertex {i}")));
        }
        Ok(Self {
            mesh: mesh.id(),
            values,
        })
    }

    pub(crate) fn from_parts(mesh: MeshId, values: Vec<f64>) -> Self {
        Self { mesh, values }
    }

    pub fn constant(mesh: &Mesh, value: f64) -> Self {
        Self {
            mesh: mesh.id(),
            values: vec![value; mesh.n_vertices()],
        }
    }

    pub fn mesh_id(&self) -> MeshId {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs_diff(&self, other: &DiscreteField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OutputKind {
    Point { x: Vec<f64> },
    RegionMean { region: String },
}

/// Linear functional `s(T) = L·T` over nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFunctional {
    pub name: String,
    pub kind: OutputKind,
    mesh: MeshId,
    dual: Vec<f64>,
    snapped: bool,
}

impl OutputFunctional {
    /// Barycentric evaluation at `x`.
    pub fn point(mesh: &Mesh, name: &str, x: &[f64]) -> Result<Self> {
        let loc = locate_point(mesh, x)?;
        let mut dual = vec![0.0; mesh.n_vertices()];
        for (&v, &l) in mesh.cell(loc.cell).iter().zip(&loc.barycentric) {
            dual[v] += l;
        }
        Ok(Self {
            name: name.to_string(),
            kind: OutputKind::Point { x: x.to_vec() },
            mesh: mesh.id(),
            dual,
            snapped: loc.snapped,
        })
    }

    /// Mean value over a region.
    pub fn region_mean(mesh: &Mesh, name: &str, region: &str) -> Result<Self> {
        let idx = mesh
            .region_index(region)
            .ok_or_else(|| Error::Validation(format!("mesh has no region `{region}`")))?;
        let mut dual = vec![0.0; mesh.n_vertices()];
        let mut total = 0.0;
        let share = 1.0 / (mesh.dim() + 1) as f64;
        for c in 0..mesh.n_cells() {
            if mesh.cell_region_index(c) != idx {
                continue;
            }
            let vol = mesh.cell_measure(c);
            total += vol;
            for &v in mesh.cell(c) {
                dual[v] += share * vol;
            }
        }
        dual.iter_mut().for_each(|d| *d /= total);
        Ok(Self {
            name: name.to_string(),
            kind: OutputKind::RegionMean {
                region: region.to_string(),
            },
            mesh: mesh.id(),
            dual,
            snapped: false,
        })
    }

    pub fn dual(&self) -> &[f64] {
        &self.dual
    }

    pub fn mesh_id(&self) -> MeshId {
        self.mesh
    }

    /// True when a point functional lies outside the mesh and was projected.
    pub fn snapped(&self) -> bool {
        self.snapped
    }
}

/// `L·T` for a field and functional on the same mesh.
pub fn evaluate_output(field: &DiscreteField, out: &OutputFunctional) -> Result<f64> {
    if field.mesh != out.mesh {
        return Err(Error::MeshMismatch(format!(
            "output `{}` was built on another mesh",
            out.name
        )));
    }
    Ok(crate::sparse::dot(&out.dual, &field.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate::{eye_2d, unit_square};
    use crate::mesh::BoundaryLabel;

    #[test]
    fn constant_field_gives_constant_output() {
        let e = eye_2d(1).unwrap();
        let f = DiscreteField::constant(&e.mesh, 310.0);
        for name in crate::mesh::generate::OUTPUT_POINTS {
            let o = OutputFunctional::point(&e.mesh, name, &e.point(name).unwrap()).unwrap();
            assert!((evaluate_output(&f, &o).unwrap() - 310.0).abs() < 1e-10);
            assert!(o.dual().iter().filter(|&&d| d != 0.0).count() <= 3);
        }
        let o = OutputFunctional::region_mean(&e.mesh, "cornea", "cornea").unwrap();
        assert!((o.dual().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((evaluate_output(&f, &o).unwrap() - 310.0).abs() < 1e-10);
    }

    #[test]
    fn region_mean_of_linear_field_is_centroid_value() {
        let m = unit_square(6, "lens", BoundaryLabel::Amb).unwrap();
        let vals = (0..m.n_vertices()).map(|v| 3.0 * m.vertex(v)[0] + m.vertex(v)[1]).collect();
        let f = DiscreteField::new(&m, vals).unwrap();
        let o = OutputFunctional::region_mean(&m, "mean", "lens").unwrap();
        assert!((evaluate_output(&f, &o).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn point_at_vertex_is_nodal_value() {
        let m = unit_square(3, "lens", BoundaryLabel::Amb).unwrap();
        let vals: Vec<f64> = (0..m.n_vertices()).map(|v| v as f64).collect();
        let f = DiscreteField::new(&m, vals).unwrap();
        let x = m.vertex(5).to_vec();
        let o = OutputFunctional::point(&m, "p", &x).unwrap();
        assert!((evaluate_output(&f, &o).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_mesh_is_rejected() {
        let a = unit_square(3, "lens", BoundaryLabel::Amb).unwrap();
        let b = unit_square(4, "lens", BoundaryLabel::Amb).unwrap();
        let f = DiscreteField::constant(&a, 1.0);
        let o = OutputFunctional::point(&b, "p", &[0.5, 0.5]).unwrap();
        assert!(matches!(evaluate_output(&f, &o), Err(Error::MeshMismatch(_))));
    }
}

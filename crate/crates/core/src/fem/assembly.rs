//! Parameter-independent P1 building blocks. Every matrix shares the
//! vertex-graph sparsity pattern of its mesh, so any weighted sum of them is
//! a plain combination of value arrays.

use super::quadrature;
use crate::mesh::{simplex, BoundaryLabel, Mesh};
use crate::sparse::CsrMatrix;

/// Zero matrix with the vertex-graph pattern of `mesh`.
pub fn pattern(mesh: &Mesh) -> CsrMatrix {
    CsrMatrix::from_rows(mesh.n_vertices(), mesh.vertex_graph())
}

/// `∫ k ∇φ_i·∇φ_j` with `k` given per cell; cells with `k = 0` are skipped.
pub fn stiffness_with(mesh: &Mesh, mut k: impl FnMut(usize) -> f64) -> CsrMatrix {
    let mut a = pattern(mesh);
    add_stiffness(mesh, &mut a, &mut k);
    a
}

pub(crate) fn add_stiffness(mesh: &Mesh, a: &mut CsrMatrix, k: &mut impl FnMut(usize) -> f64) {
    for c in 0..mesh.n_cells() {
        let kc = k(c);
        if kc == 0.0 {
            continue;
        }
        let pts = mesh.cell_points(c);
        let vol = simplex::signed_measure(&pts);
        let g = simplex::barycentric_gradients(&pts);
        let cell = mesh.cell(c);
        for (i, &vi) in cell.iter().enumerate() {
            for (j, &vj) in cell.iter().enumerate() {
                let d = g[i][0] * g[j][0] + g[i][1] * g[j][1] + g[i][2] * g[j][2];
                a.add(vi, vj, kc * vol * d);
            }
        }
    }
}

/// Unit-conductivity stiffness restricted to one region.
pub fn region_stiffness(mesh: &Mesh, region: &str) -> CsrMatrix {
    let idx = mesh.region_index(region);
    stiffness_with(mesh, |c| {
        if Some(mesh.cell_region_index(c)) == idx {
            1.0
        } else {
            0.0
        }
    })
}

/// Consistent boundary mass `∫_Γ φ_i φ_j` over facets carrying `label`.
pub fn boundary_mass(mesh: &Mesh, label: BoundaryLabel) -> CsrMatrix {
    let mut m = pattern(mesh);
    add_boundary_mass(mesh, &mut m, label, 1.0);
    m
}

pub(crate) fn add_boundary_mass(mesh: &Mesh, m: &mut CsrMatrix, label: BoundaryLabel, w: f64) {
    let nv = mesh.dim() as f64;
    for f in 0..mesh.n_facets() {
        if mesh.facet_label(f) != label {
            continue;
        }
        let meas = mesh.facet_measure(f);
        let facet = mesh.facet(f);
        // P1 facet mass: |F| (1 + δ_ij) / (n (n + 1)) with n vertices per facet
        let base = w * meas / (nv * (nv + 1.0));
        for (i, &vi) in facet.iter().enumerate() {
            for (j, &vj) in facet.iter().enumerate() {
                m.add(vi, vj, if i == j { 2.0 * base } else { base });
            }
        }
    }
}

/// `∫_Γ φ_i` over facets carrying `label`.
pub fn boundary_load(mesh: &Mesh, label: BoundaryLabel) -> Vec<f64> {
    boundary_load_with(mesh, label, |_| 1.0)
}

/// `∫_Γ g φ_i` with a spatially varying `g`, by degree-5 facet quadrature.
pub fn boundary_load_with(mesh: &Mesh, label: BoundaryLabel, g: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut b = vec![0.0; mesh.n_vertices()];
    let rule = quadrature::for_simplex(mesh.dim());
    for f in 0..mesh.n_facets() {
        if mesh.facet_label(f) != label {
            continue;
        }
        let pts = mesh.facet_points(f);
        let meas = simplex::facet_measure(&pts);
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            let gx = g(&quadrature::map_point(&pts, lam));
            for (k, &v) in mesh.facet(f).iter().enumerate() {
                b[v] += w * meas * gx * lam[k];
            }
        }
    }
    b
}

/// Volume mass `∫_Ω φ_i φ_j`.
pub fn mass(mesh: &Mesh) -> CsrMatrix {
    let mut m = pattern(mesh);
    let n = (mesh.dim() + 1) as f64;
    for c in 0..mesh.n_cells() {
        let base = mesh.cell_measure(c) / (n * (n + 1.0));
        let cell = mesh.cell(c);
        for (i, &vi) in cell.iter().enumerate() {
            for (j, &vj) in cell.iter().enumerate() {
                m.add(vi, vj, if i == j { 2.0 * base } else { base });
            }
        }
    }
    m
}

/// `∫_Ω s φ_i` for a volume source, by cell quadrature.
pub fn source_load(mesh: &Mesh, s: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut b = vec![0.0; mesh.n_vertices()];
    let rule = quadrature::for_simplex(mesh.dim() + 1);
    for c in 0..mesh.n_cells() {
        let pts = mesh.cell_points(c);
        let vol = simplex::signed_measure(&pts);
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            let sx = s(&quadrature::map_point(&pts, lam));
            for (k, &v) in mesh.cell(c).iter().enumerate() {
                b[v] += w * vol * sx * lam[k];
            }
        }
    }
    b
}

/// `∫_Ω (u_h - u)^2`, squared, by cell quadrature.
pub fn l2_error(mesh: &Mesh, uh: &[f64], u: impl Fn(&[f64]) -> f64) -> f64 {
    let rule = quadrature::for_simplex(mesh.dim() + 1);
    let mut e = 0.0;
    for c in 0..mesh.n_cells() {
        let pts = mesh.cell_points(c);
        let vol = simplex::signed_measure(&pts);
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            let x = quadrature::map_point(&pts, lam);
            let v: f64 = mesh.cell(c).iter().zip(lam).map(|(&i, l)| uh[i] * l).sum();
            e += w * vol * (v - u(&x)).powi(2);
        }
    }
    e.sqrt()
}

/// `|u_h - u|_{H^1}` given the exact gradient.
pub fn h1_seminorm_error(mesh: &Mesh, uh: &[f64], grad: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    let rule = quadrature::for_simplex(mesh.dim() + 1);
    let d = mesh.dim();
    let mut e = 0.0;
    for c in 0..mesh.n_cells() {
        let pts = mesh.cell_points(c);
        let vol = simplex::signed_measure(&pts);
        let g = simplex::barycentric_gradients(&pts);
        let mut gh = [0.0; 3];
        for (k, &i) in mesh.cell(c).iter().enumerate() {
            for (q, ghq) in gh.iter_mut().enumerate() {
                *ghq += uh[i] * g[k][q];
            }
        }
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            let ge = grad(&quadrature::map_point(&pts, lam));
            e += w * vol * (0..d).map(|q| (gh[q] - ge[q]).powi(2)).sum::<f64>();
        }
    }
    e.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate::unit_square;

    #[test]
    fn single_triangle_stiffness() {
        let m = Mesh::new(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            vec![0, 1, 2],
            vec!["lens".into()],
            vec![0, 1, 1, 2, 2, 0],
            vec![BoundaryLabel::Amb; 3],
        )
        .unwrap();
        let k = stiffness_with(&m, |_| 1.0);
        let exact = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for (i, row) in exact.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert!((k.get(i, j) - v).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn masses_integrate_constants() {
        let m = unit_square(5, "lens", BoundaryLabel::Body).unwrap();
        let ones = vec![1.0; m.n_vertices()];
        assert!((mass(&m).bilinear(&ones, &ones) - 1.0).abs() < 1e-13);
        let bm = boundary_mass(&m, BoundaryLabel::Body);
        assert!((bm.bilinear(&ones, &ones) - 4.0).abs() < 1e-13);
        let bl = boundary_load(&m, BoundaryLabel::Body);
        assert!((bl.iter().sum::<f64>() - 4.0).abs() < 1e-13);
        assert!(boundary_load(&m, BoundaryLabel::Amb).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stiffness_kills_constants() {
        let m = unit_square(4, "lens", BoundaryLabel::Body).unwrap();
        let k = stiffness_with(&m, |_| 2.5);
        let r = k.mul_vec(&vec![1.0; m.n_vertices()]);
        assert!(r.iter().all(|v| v.abs() < 1e-13));
        assert!(k.asymmetry() < 1e-15);
    }

    #[test]
    fn error_norms_vanish_on_linears() {
        let m = unit_square(3, "lens", BoundaryLabel::Body).unwrap();
        let u = |x: &[f64]| 2.0 * x[0] - x[1] + 0.5;
        let uh: Vec<f64> = (0..m.n_vertices()).map(|v| u(m.vertex(v))).collect();
        assert!(l2_error(&m, &uh, u) < 1e-14);
        assert!(h1_seminorm_error(&m, &uh, |_| vec![2.0, -1.0]) < 1e-13);
    }
}

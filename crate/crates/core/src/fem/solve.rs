use super::{assembly, quadrature, DiscreteField, Parameter, PhysicalConstants};
use crate::error::{Error, Result};
use crate::mesh::{BoundaryLabel, Mesh, MeshId, RegionTable};
use crate::solver::{solve_spd, SolverOptions};
use crate::sparse::{norm2, CsrMatrix};

/// Assembled linearized problem `A T = f`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub mesh: MeshId,
    pub a: CsrMatrix,
    pub f: Vec<f64>,
}

fn cell_conductivity(mesh: &Mesh, regions: &RegionTable, k_lens: f64) -> Result<Vec<f64>> {
    regions.check_mesh(mesh)?;
    let per_region: Vec<f64> = mesh
        .regions()
        .iter()
        .map(|r| {
            if r == regions.parametrized() {
                k_lens
            } else {
                regions.get(r).unwrap()
            }
        })
        .collect();
    Ok((0..mesh.n_cells())
        .map(|c| per_region[mesh.cell_region_index(c)])
        .collect())
}

/// Assembles the linearized operator and load at `mu`.
pub fn assemble_linear(
    mesh: &Mesh,
    regions: &RegionTable,
    consts: &PhysicalConstants,
    mu: &Parameter,
) -> Result<LinearSystem> {
    mu.check_relaxed()?;
    consts.validate()?;
    let k = cell_conductivity(mesh, regions, mu.k_lens)?;
    let mut a = assembly::stiffness_with(mesh, |c| k[c]);
    assembly::add_boundary_mass(mesh, &mut a, BoundaryLabel::Amb, mu.h_amb + consts.h_r);
    assembly::add_boundary_mass(mesh, &mut a, BoundaryLabel::Body, mu.h_bl);
    let amb = assembly::boundary_load(mesh, BoundaryLabel::Amb);
    let body = assembly::boundary_load(mesh, BoundaryLabel::Body);
    let ca = (mu.h_amb + consts.h_r) * mu.t_amb - mu.e;
    let cb = mu.h_bl * mu.t_bl;
    let f = amb.iter().zip(&body).map(|(x, y)| ca * x + cb * y).collect();
    Ok(LinearSystem {
        mesh: mesh.id(),
        a,
        f,
    })
}

/// Solves the linearized system to the requested relative residual.
pub fn solve_linear(sys: &LinearSystem, opts: &SolverOptions) -> Result<DiscreteField> {
    let rep = solve_spd(&sys.a, &sys.f, opts)?;
    Ok(DiscreteField::from_parts(sys.mesh, rep.x))
}

/// Radiative exchange coefficient `σε (T² + T_amb²)(T + T_amb)`.
pub fn linearize_hr(t_surface: f64, t_amb: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(t_surface > 0.0 && t_amb > 0.0) {
        return Err(Error::Parameter("temperatures must be positive".into()));
    }
    Ok(consts.sigma
        * consts.epsilon
        * (t_surface * t_surface + t_amb * t_amb)
        * (t_surface + t_amb))
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Target for `‖R(T)‖ / ‖b‖`, `b` being the data part of the residual.
    pub rel_tol: f64,
    pub linear: SolverOptions,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            rel_tol: 1e-10,
            linear: SolverOptions::default(),
        }
    }
}

/// Relative nonlinear residual before the first step and after each step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonLog {
    pub residuals: Vec<f64>,
}

impl NewtonLog {
    pub fn iterations(&self) -> usize {
        self.residuals.len().saturating_sub(1)
    }
}

/// Newton iterations for the model with quartic radiation on `amb` facets.
/// The radiation term is integrated with a degree-5 facet rule.
pub fn solve_nonlinear(
    mesh: &Mesh,
    regions: &RegionTable,
    consts: &PhysicalConstants,
    mu: &Parameter,
    init: &DiscreteField,
    opts: &NewtonOptions,
) -> Result<(DiscreteField, NewtonLog)> {
    mu.check_relaxed()?;
    consts.validate()?;
    if init.mesh_id() != mesh.id() {
        return Err(Error::MeshMismatch("initial guess is on another mesh".into()));
    }
    let k = cell_conductivity(mesh, regions, mu.k_lens)?;
    let mut a0 = assembly::stiffness_with(mesh, |c| k[c]);
    assembly::add_boundary_mass(mesh, &mut a0, BoundaryLabel::Amb, mu.h_amb);
    assembly::add_boundary_mass(mesh, &mut a0, BoundaryLabel::Body, mu.h_bl);
    let amb = assembly::boundary_load(mesh, BoundaryLabel::Amb);
    let body = assembly::boundary_load(mesh, BoundaryLabel::Body);
    let se = consts.sigma * consts.epsilon;
    let ta4 = mu.t_amb.powi(4);
    // R(T) = A0 T + N(T) - b, with N(T)_i = ∫ σε T⁴ φ_i
    let ca = mu.h_amb * mu.t_amb + se * ta4 - mu.e;
    let cb = mu.h_bl * mu.t_bl;
    let b: Vec<f64> = amb.iter().zip(&body).map(|(x, y)| ca * x + cb * y).collect();
    let scale = norm2(&b).max(f64::MIN_POSITIVE);

    let rule = quadrature::for_simplex(mesh.dim());
    let amb_facets: Vec<usize> = (0..mesh.n_facets())
        .filter(|&f| mesh.facet_label(f) == BoundaryLabel::Amb)
        .collect();
    let radiation = |t: &[f64], jac: Option<&mut CsrMatrix>| -> Vec<f64> {
        let mut n = vec![0.0; t.len()];
        let mut jac = jac;
        for &f in &amb_facets {
            let facet = mesh.facet(f);
            let meas = mesh.facet_measure(f);
            for (lam, w) in rule.points.iter().zip(&rule.weights) {
                let tq: f64 = facet.iter().zip(lam).map(|(&v, l)| t[v] * l).sum();
                let wq = w * meas * se;
                for (i, &vi) in facet.iter().enumerate() {
                    n[vi] += wq * tq.powi(4) * lam[i];
                    if let Some(j) = jac.as_deref_mut() {
                        for (jj, &vj) in facet.iter().enumerate() {
                            j.add(vi, vj, 4.0 * wq * tq.powi(3) * lam[i] * lam[jj]);
                        }
                    }
                }
            }
        }
        n
    };
    let residual = |t: &[f64]| -> Vec<f64> {
        let mut r = a0.mul_vec(t);
        let n = radiation(t, None);
        for i in 0..r.len() {
            r[i] += n[i] - b[i];
        }
        r
    };

    let mut t = init.values().to_vec();
    let mut r = residual(&t);
    let mut log = NewtonLog {
        residuals: vec![norm2(&r) / scale],
    };
    for _ in 0..opts.max_iter {
        if *log.residuals.last().unwrap() <= opts.rel_tol {
            break;
        }
        let mut jac = a0.clone();
        radiation(&t, Some(&mut jac));
        let step = solve_spd(&jac, &r, &opts.linear)?;
        for (ti, di) in t.iter_mut().zip(&step.x) {
            *ti -= di;
        }
        r = residual(&t);
        let rel = norm2(&r) / scale;
        if !rel.is_finite() {
            log.residuals.push(rel);
            return Err(Error::NoConvergence {
                history: log.residuals,
            });
        }
        log.residuals.push(rel);
    }
    if *log.residuals.last().unwrap() > opts.rel_tol {
        return Err(Error::NoConvergence {
            history: log.residuals,
        });
    }
    Ok((DiscreteField::from_parts(mesh.id(), t), log))
}

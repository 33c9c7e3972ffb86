#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use eyeheat::affine::{build_affine, AffineSystem};
use eyeheat::fem::assembly::{boundary_load_with, boundary_mass, h1_seminorm_error, l2_error, source_load, stiffness_with};
use eyeheat::fem::{assemble_linear, solve_linear, OutputFunctional, Parameter, PhysicalConstants};
use eyeheat::mesh::generate::{annulus, eye_2d, unit_square, AnnulusSpec, EyeMesh, OUTPUT_POINTS};
use eyeheat::mesh::simplex::barycentric_gradients;
use eyeheat::mesh::{BoundaryLabel, Mesh, RegionTable};
use eyeheat::rbm::{greedy_train, training_set, x_inner_product, GreedyOptions, InnerProduct};
use eyeheat::rbm::ReducedModel;
use eyeheat::solver::{solve_spd, SolverOptions};

// Manufactured problem on the unit square: -k Δu = s, k ∂u/∂n + h u = q.
pub const MMS_K: f64 = 0.6;
pub const MMS_H: f64 = 10.0;

pub fn mms_u(x: &[f64]) -> f64 {
    (PI * x[0]).sin() * (PI * x[1]).cos() + x[0] * x[1]
}

pub fn mms_grad(x: &[f64]) -> Vec<f64> {
    vec![
        PI * (PI * x[0]).cos() * (PI * x[1]).cos() + x[1],
        -PI * (PI * x[0]).sin() * (PI * x[1]).sin() + x[0],
    ]
}

fn square_normal(x: &[f64]) -> [f64; 2] {
    let eps = 1e-12;
    if x[0] < eps {
        [-1.0, 0.0]
    } else if x[0] > 1.0 - eps {
        [1.0, 0.0]
    } else if x[1] < eps {
        [0.0, -1.0]
    } else {
        [0.0, 1.0]
    }
}

pub struct MmsRun {
    pub mesh: Mesh,
    pub uh: Vec<f64>,
    pub h: f64,
    pub l2: f64,
    pub h1: f64,
}

pub fn mms_solve(n: usize) -> MmsRun {
    let mesh = unit_square(n, "cornea", BoundaryLabel::Amb).unwrap();
    let mut a = stiffness_with(&mesh, |_| MMS_K);
    a.axpy(MMS_H, &boundary_mass(&mesh, BoundaryLabel::Amb));
    let mut b = source_load(&mesh, |x| 2.0 * MMS_K * PI * PI * (PI * x[0]).sin() * (PI * x[1]).cos());
    let q = boundary_load_with(&mesh, BoundaryLabel::Amb, |x| {
        let g = mms_grad(x);
        let nv = square_normal(x);
        MMS_K * (g[0] * nv[0] + g[1] * nv[1]) + MMS_H * mms_u(x)
    });
    b.iter_mut().zip(&q).for_each(|(bi, qi)| *bi += qi);
    let uh = solve_spd(&a, &b, &SolverOptions::default().with_tol(1e-12)).unwrap().x;
    let h = mesh.max_cell_size();
    let l2 = l2_error(&mesh, &uh, mms_u);
    let h1 = h1_seminorm_error(&mesh, &uh, mms_grad);
    MmsRun { mesh, uh, h, l2, h1 }
}

/// Observed orders between consecutive runs.
pub fn rates(runs: &[MmsRun], err: impl Fn(&MmsRun) -> f64) -> Vec<f64> {
    runs.windows(2)
        .map(|w| (err(&w[0]) / err(&w[1])).ln() / (w[0].h / w[1].h).ln())
        .collect()
}

/// Root-mean-square jump of the discrete conormal flux `k ∇u_h · n` across
/// interior edges, weighted by edge length.
pub fn flux_jump(mesh: &Mesh, uh: &[f64], k: f64) -> f64 {
    let mut edges: HashMap<(usize, usize), Vec<[f64; 2]>> = HashMap::new();
    for c in 0..mesh.n_cells() {
        let g = barycentric_gradients(&mesh.cell_points(c));
        let cell = mesh.cell(c);
        let mut grad = [0.0; 2];
        for (i, &v) in cell.iter().enumerate() {
            grad[0] += uh[v] * g[i][0];
            grad[1] += uh[v] * g[i][1];
        }
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            let key = (cell[a].min(cell[b]), cell[a].max(cell[b]));
            edges.entry(key).or_default().push(grad);
        }
    }
    let (mut sum, mut len) = (0.0, 0.0);
    for ((a, b), grads) in edges {
        if grads.len() != 2 {
            continue;
        }
        let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
        let t = [pb[0] - pa[0], pb[1] - pa[1]];
        let l = t[0].hypot(t[1]);
        let n = [t[1] / l, -t[0] / l];
        let j = k * ((grads[0][0] - grads[1][0]) * n[0] + (grads[0][1] - grads[1][1]) * n[1]);
        sum += j * j * l;
        len += l;
    }
    (sum / len).sqrt()
}

/// Two-layer annulus (inner sclera, outer lens) with blood exchange inside
/// and ambient exchange outside. Returns the computed and closed-form
/// temperatures on the interface circle.
pub fn annulus_interface(n_theta: usize, n_radial: usize) -> (f64, f64) {
    let radii = [0.004, 0.008, 0.012];
    let mesh = annulus(&AnnulusSpec {
        radii,
        regions: ["sclera", "lens"],
        n_theta,
        n_radial: [n_radial, n_radial],
    })
    .unwrap();
    let k1 = 1.0042;
    let regions = RegionTable::new(
        BTreeMap::from([("sclera".to_string(), k1), ("lens".to_string(), 0.4)]),
        "lens",
    )
    .unwrap();
    let consts = PhysicalConstants::default().with_hr(0.0);
    let mu = Parameter::baseline();
    let t = solve_linear(
        &assemble_linear(&mesh, &regions, &consts, &mu).unwrap(),
        &SolverOptions::default().with_tol(1e-12),
    )
    .unwrap();
    let probe = OutputFunctional::point(&mesh, "interface", &[radii[1], 0.0]).unwrap();
    let computed = eyeheat::fem::evaluate_output(&t, &probe).unwrap();

    let [r0, r1, r2] = radii;
    let k2 = mu.k_lens;
    let r_in = 1.0 / (2.0 * PI * r0 * mu.h_bl) + (r1 / r0).ln() / (2.0 * PI * k1);
    let r_tot = r_in + (r2 / r1).ln() / (2.0 * PI * k2) + 1.0 / (2.0 * PI * r2 * mu.h_amb);
    let q = (mu.t_bl - mu.t_amb + mu.e / mu.h_amb) / r_tot;
    (computed, mu.t_bl - q * r_in)
}

pub struct EyeModel {
    pub eye: EyeMesh,
    pub aff: AffineSystem,
    pub x: InnerProduct,
    pub rm: ReducedModel,
}

/// Eye section with the five axis points and the corneal mean as outputs,
/// reduced by the greedy with default options.
pub fn eye_model(refinement: usize, train_size: usize) -> EyeModel {
    let eye = eye_2d(refinement).unwrap();
    let mut outs: Vec<OutputFunctional> = OUTPUT_POINTS
        .iter()
        .map(|n| OutputFunctional::point(&eye.mesh, n, &eye.point(n).unwrap()).unwrap())
        .collect();
    outs.push(OutputFunctional::region_mean(&eye.mesh, "cornea", "cornea").unwrap());
    let aff = build_affine(&eye.mesh, &RegionTable::eye(), &PhysicalConstants::default())
        .unwrap()
        .with_outputs(&outs)
        .unwrap();
    let x = x_inner_product(&aff, &Parameter::baseline()).unwrap();
    let rm = greedy_train(&aff, &x, &training_set(train_size, 1), &GreedyOptions::default()).unwrap();
    EyeModel { eye, aff, x, rm }
}

pub fn truth(aff: &AffineSystem, mu: &Parameter) -> Vec<f64> {
    solve_spd(&aff.operator(mu), &aff.load(mu), &SolverOptions::default().with_tol(1e-12))
        .unwrap()
        .x
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

mod common;

use common::{annulus_interface, flux_jump, mms_solve, rates, MMS_K};
use eyeheat::fem::assembly::stiffness_with;
use eyeheat::fem::{
    assemble_linear, dsa_sweep, evaluate_output, solve_linear, solve_nonlinear, DiscreteField, NewtonOptions,
    OutputFunctional, Parameter, PhysicalConstants,
};
use eyeheat::mesh::generate::eye_2d;
use eyeheat::mesh::RegionTable;
use eyeheat::solver::SolverOptions;
use eyeheat::mesh::msh::{parse_msh, write_msh, Aliases};
use eyeheat::mesh::{BoundaryLabel, Mesh};
use proptest::prelude::*;
use std::collections::HashMap;

#[test]
fn manufactured_solution_rates() {
    let runs: Vec<_> = [8, 16, 32, 64].into_iter().map(mms_solve).collect();
    for r in rates(&runs, |r| r.l2) {
        assert!((r - 2.0).abs() <= 0.2, "L2 rate {r}");
    }
    for r in rates(&runs, |r| r.h1) {
        assert!((r - 1.0).abs() <= 0.2, "H1 rate {r}");
    }
}

#[test]
fn conormal_flux_jump_decays() {
    let jumps: Vec<f64> = [8, 16, 32]
        .into_iter()
        .map(|n| {
            let r = mms_solve(n);
            flux_jump(&r.mesh, &r.uh, MMS_K)
        })
        .collect();
    for w in jumps.windows(2) {
        assert!(w[1] < 0.7 * w[0], "{jumps:?}");
    }
}

#[test]
fn two_layer_annulus_matches_closed_form() {
    let (computed, exact) = annulus_interface(256, 16);
    assert!((computed - exact).abs() <= 1e-3 * exact.abs());
    // much tighter than required: the error is a fraction of the temperature drop
    assert!((computed - exact).abs() <= 1e-3 * (310.0 - exact), "{computed} vs {exact}");
}

#[test]
fn uniform_temperature_is_reproduced() {
    let eye = eye_2d(1).unwrap();
    let regions = RegionTable::eye();
    let consts = PhysicalConstants::default();
    let mu = Parameter::baseline().with("T_amb", 309.0).unwrap().with("T_bl", 309.0).unwrap().with("E", 0.0).unwrap();
    let lin = solve_linear(&assemble_linear(&eye.mesh, &regions, &consts, &mu).unwrap(), &SolverOptions::default()).unwrap();
    assert!(lin.values().iter().all(|t| (t - 309.0).abs() < 1e-8));
    let init = DiscreteField::constant(&eye.mesh, 300.0);
    let (nl, _) = solve_nonlinear(&eye.mesh, &regions, &consts, &mu, &init, &NewtonOptions::default()).unwrap();
    assert!(nl.values().iter().all(|t| (t - 309.0).abs() < 1e-8));
}

#[test]
fn sweeps_follow_physical_trends() {
    let eye = eye_2d(2).unwrap();
    let o = OutputFunctional::point(&eye.mesh, "O", &eye.point("O").unwrap()).unwrap();
    let sweep = |name: &str, values: &[f64]| -> Vec<f64> {
        dsa_sweep(
            &eye.mesh,
            &RegionTable::eye(),
            &PhysicalConstants::default(),
            name,
            values,
            &Parameter::baseline(),
            std::slice::from_ref(&o),
            &NewtonOptions::default(),
        )
        .unwrap()
        .rows
        .into_iter()
        .map(|r| r.outputs.unwrap()[0])
        .collect()
    };
    let t = sweep("T_amb", &[283.15, 290.0, 298.0, 303.15]);
    assert!(t.windows(2).all(|w| w[1] > w[0]), "{t:?}");
    let h = sweep("h_amb", &[8.0, 100.0]);
    assert!(h[0] - h[1] >= 3.0, "{h:?}");

    let single = sweep("T_amb", &[298.0])[0];
    let consts = PhysicalConstants::default();
    let mu = Parameter::baseline();
    let init = DiscreteField::constant(&eye.mesh, mu.t_bl);
    let (t, _) = solve_nonlinear(&eye.mesh, &RegionTable::eye(), &consts, &mu, &init, &NewtonOptions::default()).unwrap();
    assert_eq!(single, evaluate_output(&t, &o).unwrap());
}

/// Cube of side `side` cut into `6 n^3` tetrahedra, `body` on the face
/// `x = 0` and `amb` elsewhere.
fn cube(n: usize, side: f64) -> Mesh {
    let h = side / n as f64;
    let id = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
    let mut coords = Vec::new();
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                coords.extend([i as f64 * h, j as f64 * h, k as f64 * h]);
            }
        }
    }
    let mut cells = Vec::new();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let corner = |b: usize| id(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1));
                for axes in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                    let mut b = 0;
                    let mut tet = vec![corner(0)];
                    for a in axes {
                        b |= 1 << a;
                        tet.push(corner(b));
                    }
                    let p: Vec<&[f64]> = tet.iter().map(|&v| &coords[3 * v..3 * v + 3]).collect();
                    if eyeheat::mesh::simplex::signed_measure(&p) < 0.0 {
                        tet.swap(0, 1);
                    }
                    cells.extend(tet);
                }
            }
        }
    }
    let mut faces: HashMap<Vec<usize>, (usize, Vec<usize>)> = HashMap::new();
    for t in cells.chunks(4) {
        for skip in 0..4 {
            let f: Vec<usize> = (0..4).filter(|&q| q != skip).map(|q| t[q]).collect();
            let mut key = f.clone();
            key.sort_unstable();
            faces.entry(key).or_insert((0, f)).0 += 1;
        }
    }
    let mut facets = Vec::new();
    let mut labels = Vec::new();
    let mut boundary: Vec<_> = faces.into_values().filter(|(c, _)| *c == 1).map(|(_, f)| f).collect();
    boundary.sort();
    for f in boundary {
        let on_x0 = f.iter().all(|&v| coords[3 * v] == 0.0);
        labels.push(if on_x0 { BoundaryLabel::Body } else { BoundaryLabel::Amb });
        facets.extend(f);
    }
    let regions = vec!["lens".to_string(); cells.len() / 4];
    Mesh::new(3, coords, cells, regions, facets, labels).unwrap()
}

#[test]
fn tetrahedral_meshes_solve_end_to_end() {
    // eye-sized, so that the Biot number stays moderate
    let side = 0.01;
    let mesh = cube(3, side);
    assert!((mesh.total_measure() - side.powi(3)).abs() <= 1e-12 * side.powi(3));
    assert!((mesh.boundary_measure(BoundaryLabel::Body) - side * side).abs() <= 1e-12 * side * side);
    assert!((mesh.boundary_measure(BoundaryLabel::Amb) - 5.0 * side * side).abs() <= 1e-12 * side * side);

    let back = parse_msh(&write_msh(&mesh), &Aliases::new(), std::path::Path::new("cube.msh")).unwrap();
    assert_eq!(back.id(), mesh.id());

    let regions = RegionTable::uniform(&["lens"], 0.5, "lens").unwrap();
    let consts = PhysicalConstants::default();
    let flat = Parameter::baseline().with("T_amb", 305.0).unwrap().with("T_bl", 305.0).unwrap().with("E", 0.0).unwrap();
    let t = solve_linear(&assemble_linear(&mesh, &regions, &consts, &flat).unwrap(), &SolverOptions::default()).unwrap();
    assert!(t.values().iter().all(|v| (v - 305.0).abs() < 1e-8));

    let mu = Parameter::baseline();
    let lin = solve_linear(&assemble_linear(&mesh, &regions, &consts, &mu).unwrap(), &SolverOptions::default()).unwrap();
    let (nl, log) = solve_nonlinear(&mesh, &regions, &consts, &mu, &lin, &NewtonOptions::default()).unwrap();
    assert!(log.iterations() <= 10);
    let lo = mu.t_amb - mu.e / mu.h_amb;
    let (mn, mx) = nl.values().iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(mn > lo && mx < mu.t_bl, "{mn} {mx}");
    // the blood-side face is the warmest
    let probe = |x: f64| evaluate_output(&nl, &OutputFunctional::point(&mesh, "p", &[x * side, 0.5 * side, 0.5 * side]).unwrap()).unwrap();
    assert!(probe(0.0) > probe(0.5) && probe(0.5) > probe(1.0));
}

fn domain_param() -> impl Strategy<Value = Parameter> {
    let d = Parameter::domain();
    (d[0].0..d[0].1, d[1].0..d[1].1, d[2].0..d[2].1, d[3].0..d[3].1, d[4].0..d[4].1, d[5].0..d[5].1)
        .prop_map(|(a, b, c, e, f, g)| Parameter::from_array([a, b, c, e, f, g]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stiffness_rows_sum_to_zero(k in 0.01f64..10.0) {
        let eye = eye_2d(1).unwrap();
        let a = stiffness_with(&eye.mesh, |c| k * (1.0 + (c % 3) as f64));
        let ones = vec![1.0; a.n()];
        let r = a.mul_vec(&ones);
        prop_assert!(r.iter().all(|v| v.abs() <= 1e-12 * a.max_abs()));
    }

    #[test]
    fn operator_symmetric_and_positive(mu in domain_param(), seed in any::<u64>()) {
        let eye = eye_2d(1).unwrap();
        let sys = assemble_linear(&eye.mesh, &RegionTable::eye(), &PhysicalConstants::default(), &mu).unwrap();
        prop_assert!(sys.a.asymmetry() <= 1e-14 * sys.a.max_abs());
        let t: Vec<f64> = (0..sys.a.n()).map(|i| ((i as u64 ^ seed) % 97) as f64 - 48.0 + 0.5).collect();
        prop_assert!(sys.a.bilinear(&t, &t) > 0.0);
    }

    #[test]
    fn maximum_principle_without_evaporation(mu in domain_param()) {
        let eye = eye_2d(1).unwrap();
        let mu = Parameter { e: 0.0, ..mu };
        let sys = assemble_linear(&eye.mesh, &RegionTable::eye(), &PhysicalConstants::default(), &mu).unwrap();
        let t = solve_linear(&sys, &SolverOptions::default()).unwrap();
        let (lo, hi) = (mu.t_amb.min(mu.t_bl), mu.t_amb.max(mu.t_bl));
        prop_assert!(t.values().iter().all(|&v| v >= lo - 1e-8 && v <= hi + 1e-8));
    }

    #[test]
    fn solution_is_linear_in_the_load(mu in domain_param(), alpha in -5.0f64..5.0) {
        let eye = eye_2d(1).unwrap();
        let mut sys = assemble_linear(&eye.mesh, &RegionTable::eye(), &PhysicalConstants::default(), &mu).unwrap();
        let opts = SolverOptions::default().with_tol(1e-12);
        let t = solve_linear(&sys, &opts).unwrap();
        sys.f.iter_mut().for_each(|f| *f *= alpha);
        let ta = solve_linear(&sys, &opts).unwrap();
        let scale = t.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in t.values().iter().zip(ta.values()) {
            prop_assert!((alpha * x - y).abs() <= 1e-9 * scale * alpha.abs().max(1.0));
        }
    }
}

//! Greedy reduced basis with certified online solves.

use std::time::Instant;

use eyeheat::affine::build_affine;
use eyeheat::fem::{OutputFunctional, Parameter, PhysicalConstants};
use eyeheat::mesh::generate::eye_2d;
use eyeheat::mesh::RegionTable;
use eyeheat::rbm::{greedy_train, training_set, x_inner_product, GreedyOptions};
use eyeheat::solver::{solve_spd, SolverOptions};
use eyeheat::sparse::dot;

fn main() -> eyeheat::Result<()> {
    let eye = eye_2d(3)?;
    let o = OutputFunctional::point(&eye.mesh, "O", &eye.point("O").unwrap())?;
    let aff = build_affine(&eye.mesh, &RegionTable::eye(), &PhysicalConstants::default())?.with_outputs(&[o])?;
    let x = x_inner_product(&aff, &Parameter::baseline())?;

    let t = Instant::now();
    let rm = greedy_train(&aff, &x, &training_set(1000, 1), &GreedyOptions::default())?;
    println!("greedy: N = {} in {:.2?} ({:?})", rm.n(), t.elapsed(), rm.history.stop);
    for s in &rm.history.steps {
        println!("  N = {:>2}  max relative bound {:.3e}", s.n, s.max_bound);
    }

    let mu = Parameter::new([288.0, 309.0, 25.0, 70.0, 200.0, 0.5])?;
    let t = Instant::now();
    let sol = rm.online_solve(&mu)?;
    let online = t.elapsed();
    let truth = solve_spd(&aff.operator(&mu), &aff.load(&mu), &SolverOptions::default())?.x;
    let s_true = dot(&aff.outputs[0].dual, &truth);
    println!(
        "T_O: reduced {:.6} K, full {:.6} K, |error| {:.2e} <= bound {:.2e} (online {online:.2?})",
        sol.outputs[0],
        s_true,
        (sol.outputs[0] - s_true).abs(),
        sol.certificate.delta_s[0]
    );
    Ok(())
}

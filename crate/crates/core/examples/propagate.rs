//! Monte-Carlo propagation of the reference input laws through a reduced model.

use eyeheat::affine::build_affine;
use eyeheat::fem::{OutputFunctional, Parameter, PhysicalConstants};
use eyeheat::mesh::generate::{eye_2d, OUTPUT_POINTS};
use eyeheat::mesh::RegionTable;
use eyeheat::rbm::{greedy_train, training_set, x_inner_product, GreedyOptions};
use eyeheat::uq::{propagate, InputDistribution, PropagateOptions};

fn main() -> eyeheat::Result<()> {
    let eye = eye_2d(3)?;
    let outs = OUTPUT_POINTS
        .iter()
        .map(|n| OutputFunctional::point(&eye.mesh, n, &eye.point(n).unwrap()))
        .collect::<eyeheat::Result<Vec<_>>>()?;
    let aff = build_affine(&eye.mesh, &RegionTable::eye(), &PhysicalConstants::default())?.with_outputs(&outs)?;
    let x = x_inner_product(&aff, &Parameter::baseline())?;
    let rm = greedy_train(&aff, &x, &training_set(1000, 1), &GreedyOptions::default())?;

    let dist = InputDistribution::reference();
    let res = propagate(&rm, &dist, 10_000, 42, &PropagateOptions::default())?;
    println!("{} samples in {:.3} s", res.n, res.seconds);
    print!("{}", res.stats_csv());
    Ok(())
}

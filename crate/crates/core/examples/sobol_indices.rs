//! Sobol indices at the corneal point: chaos regression with bootstrap
//! intervals, cross-checked by pick-freeze sampling.

use eyeheat::affine::build_affine;
use eyeheat::fem::{OutputFunctional, Parameter, PhysicalConstants};
use eyeheat::mesh::generate::eye_2d;
use eyeheat::mesh::RegionTable;
use eyeheat::rbm::{greedy_train, training_set, x_inner_product, GreedyOptions};
use eyeheat::uq::{pce_fit, saltelli, InputDistribution, PceOptions};

fn main() -> eyeheat::Result<()> {
    let eye = eye_2d(3)?;
    let o = OutputFunctional::point(&eye.mesh, "O", &eye.point("O").unwrap())?;
    let aff = build_affine(&eye.mesh, &RegionTable::eye(), &PhysicalConstants::default())?.with_outputs(&[o])?;
    let x = x_inner_product(&aff, &Parameter::baseline())?;
    let rm = greedy_train(&aff, &x, &training_set(1000, 1), &GreedyOptions::default())?;
    let dist = InputDistribution::reference();

    let pce = pce_fit(&rm, "O", &dist, &PceOptions::default())?;
    let mc = saltelli(&rm, "O", &dist, 10_000, 100, 1)?;
    println!("Q2 = {:.4}", pce.q2.unwrap());
    println!("input    S_tot (pce)  95% interval        S_tot (pick-freeze)");
    for (i, name) in pce.inputs.iter().enumerate() {
        let (lo, hi) = pce.total_ci[i];
        println!("{name:<8} {:>10.4}  [{lo:.4}, {hi:.4}]  {:>12.4}", pce.total[i], mc.total[i]);
    }
    Ok(())
}

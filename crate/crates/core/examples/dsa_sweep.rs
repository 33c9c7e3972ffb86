//! One-at-a-time sweep of the ambient temperature, printed as CSV.

use eyeheat::fem::{dsa_sweep, NewtonOptions, OutputFunctional, Parameter, PhysicalConstants};
use eyeheat::mesh::generate::{eye_2d, OUTPUT_POINTS};
use eyeheat::mesh::RegionTable;

fn main() -> eyeheat::Result<()> {
    let eye = eye_2d(2)?;
    let outputs = OUTPUT_POINTS
        .iter()
        .map(|n| OutputFunctional::point(&eye.mesh, n, &eye.point(n).unwrap()))
        .collect::<eyeheat::Result<Vec<_>>>()?;
    let values: Vec<f64> = (0..9).map(|i| 283.15 + 2.5 * i as f64).collect();
    let table = dsa_sweep(
        &eye.mesh,
        &RegionTable::eye(),
        &PhysicalConstants::default(),
        "T_amb",
        &values,
        &Parameter::baseline(),
        &outputs,
        &NewtonOptions::default(),
    )?;
    print!("{}", table.to_csv());
    Ok(())
}

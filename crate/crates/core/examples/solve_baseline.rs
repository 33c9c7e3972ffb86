//! Linearized and nonlinear (radiative) solves at the baseline parameter,
//! evaluated at the named points along the optical axis.

use eyeheat::fem::{
    assemble_linear, evaluate_output, solve_linear, solve_nonlinear, NewtonOptions, OutputFunctional, Parameter,
    PhysicalConstants,
};
use eyeheat::mesh::generate::{eye_2d, OUTPUT_POINTS};
use eyeheat::mesh::RegionTable;
use eyeheat::solver::SolverOptions;

fn main() -> eyeheat::Result<()> {
    let eye = eye_2d(3)?;
    let regions = RegionTable::eye();
    let consts = PhysicalConstants::default();
    let mu = Parameter::baseline();

    let lin = solve_linear(&assemble_linear(&eye.mesh, &regions, &consts, &mu)?, &SolverOptions::default())?;
    let (nl, log) = solve_nonlinear(&eye.mesh, &regions, &consts, &mu, &lin, &NewtonOptions::default())?;
    println!("Newton: {} iterations, residuals {:?}", log.iterations(), log.residuals);

    println!("point   linear [K]   nonlinear [K]");
    for name in OUTPUT_POINTS {
        let o = OutputFunctional::point(&eye.mesh, name, &eye.point(name).unwrap())?;
        println!("{name:<6} {:>11.4} {:>14.4}", evaluate_output(&lin, &o)?, evaluate_output(&nl, &o)?);
    }
    println!("max nodal gap {:.4} K", nl.max_abs_diff(&lin));
    Ok(())
}

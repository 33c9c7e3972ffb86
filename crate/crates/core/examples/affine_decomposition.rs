//! Builds the parameter-separable operator, checks it against direct
//! assembly and stores it in the binary container.

use eyeheat::affine::{build_affine, AffineSystem};
use eyeheat::fem::{assemble_linear, Parameter, PhysicalConstants};
use eyeheat::mesh::generate::eye_2d;
use eyeheat::mesh::RegionTable;

fn main() -> eyeheat::Result<()> {
    let eye = eye_2d(2)?;
    let regions = RegionTable::eye();
    let consts = PhysicalConstants::default();
    let aff = build_affine(&eye.mesh, &regions, &consts)?;

    let mu = Parameter::new([290.0, 311.0, 40.0, 90.0, 150.0, 0.3])?;
    let (ba, bf) = aff.beta(&mu);
    println!("beta_A = {ba:?}\nbeta_F = {bf:?}");
    let mut diff = aff.operator(&mu);
    let direct = assemble_linear(&eye.mesh, &regions, &consts, &mu)?;
    diff.axpy(-1.0, &direct.a);
    println!("max |A(mu) - A_direct| / max |A| = {:.2e}", diff.max_abs() / direct.a.max_abs());

    let path = std::env::temp_dir().join("eye.affine");
    aff.save(&path)?;
    let back = AffineSystem::load_file(&path)?;
    println!("container round trip exact: {}", back.a == aff.a && back.f == aff.f);
    Ok(())
}

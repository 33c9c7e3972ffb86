//! Generates the eye cross-section and writes it as MSH 2.2 with its named points.
//!
//! cargo run --example generate_mesh -- 3 eye.msh

use eyeheat::mesh::generate::eye_2d;
use eyeheat::mesh::msh::{write_msh, write_named_points};

fn main() -> eyeheat::Result<()> {
    let mut args = std::env::args().skip(1);
    let refinement = args.next().map_or(3, |s| s.parse().expect("refinement"));
    let out = args.next().unwrap_or_else(|| "eye.msh".into());

    let eye = eye_2d(refinement)?;
    let m = &eye.mesh;
    println!("{} vertices, {} cells, {} boundary facets", m.n_vertices(), m.n_cells(), m.n_facets());
    for (region, area) in m.region_measures() {
        println!("  {region:<14} {:.3} mm^2", area * 1e6);
    }
    let points = eye.points.iter().map(|(k, v)| (k.clone(), v.to_vec())).collect();
    std::fs::write(&out, write_msh(m) + &write_named_points(&points))?;
    println!("wrote {out}");
    Ok(())
}

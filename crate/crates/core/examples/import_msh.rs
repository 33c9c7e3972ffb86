//! Reads a Gmsh file whose physical groups use foreign names, mapping them
//! onto the canonical region and boundary labels with an alias table.

use std::path::Path;

use eyeheat::mesh::msh::{parse_msh, Aliases};

const MSH: &str = r#"$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
3
1 1 "front"
1 2 "back"
2 3 "Lens_Tissue"
$EndPhysicalNames
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
6
1 1 2 1 1 1 2
2 1 2 1 1 2 3
3 1 2 2 2 3 4
4 1 2 2 2 4 1
5 2 2 3 3 1 2 3
6 2 2 3 3 1 3 4
$EndElements
"#;

fn main() -> eyeheat::Result<()> {
    let aliases: Aliases = [("front", "amb"), ("back", "body"), ("Lens_Tissue", "lens")]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    let mesh = parse_msh(MSH, &aliases, Path::new("square.msh"))?;
    println!("regions {:?}", mesh.regions());
    for l in mesh.boundary_labels() {
        println!("{l}: length {}", mesh.boundary_measure(l));
    }

    // without the aliases the foreign boundary names are rejected
    let err = parse_msh(MSH, &Aliases::new(), Path::new("square.msh")).unwrap_err();
    println!("no aliases: {err}");
    Ok(())
}

//! Region-tagged simplicial meshes.
//!
//! A [`Mesh`] holds P1-ready geometry: vertex coordinates, simplicial cells
//! tagged with a region name, and boundary facets tagged with one of the two
//! exchange conditions ([`BoundaryLabel::Amb`] or [`BoundaryLabel::Body`]).
//! Construction validates conformity and orientation; the value is immutable
//! afterwards.

pub mod generate;
pub mod msh;
pub mod simplex;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anatomical regions recognised without further declaration.
pub const CANONICAL_REGIONS: [&str; 10] = [
    "cornea",
    "aqueousHumor",
    "lens",
    "vitreousHumor",
    "iris",
    "retina",
    "choroid",
    "sclera",
    "lamina",
    "opticNerve",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryLabel {
    /// Surface exposed to ambient air.
    Amb,
    /// Surface exchanging heat with the body through blood.
    Body,
}

impl BoundaryLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryLabel::Amb => "amb",
            BoundaryLabel::Body => "body",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "amb" => Some(BoundaryLabel::Amb),
            "body" => Some(BoundaryLabel::Body),
            _ => None,
        }
    }
}

impl fmt::Display for BoundaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Identity of a mesh, used to check that fields and functionals match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeshId(pub u64);

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    cell_region: Vec<usize>,
    regions: Vec<String>,
    facets: Vec<usize>,
    facet_labels: Vec<BoundaryLabel>,
    id: MeshId,
}

impl Mesh {
    /// Builds and validates a mesh.
    ///
    /// `coords` is flat with stride `dim`, `cells` flat with stride `dim + 1`,
    /// `facets` flat with stride `dim`.
    pub fn new(
        dim: usize,
        coords: Vec<f64>,
        cells: Vec<usize>,
        cell_regions: Vec<String>,
        facets: Vec<usize>,
        facet_labels: Vec<BoundaryLabel>,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Validation(format!("dimension {dim} is not 2 or 3")));
        }
        if coords.len() % dim != 0 || cells.len() % (dim + 1) != 0 || facets.len() % dim != 0 {
            return Err(Error::Validation("array lengths do not match the dimension".into()));
        }
        let n_cells = cells.len() / (dim + 1);
        if cell_regions.len() != n_cells || facet_labels.len() != facets.len() / dim {
            return Err(Error::Validation("label count does not match entity count".into()));
        }
        let mut regions: Vec<String> = Vec::new();
        let mut lookup: HashMap<String, usize> = HashMap::new();
        let mut cell_region = Vec::with_capacity(n_cells);
        for (c, name) in cell_regions.into_iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Validation(format!("cell {c} has an empty region label")));
            }
            let idx = *lookup.entry(name.clone()).or_insert_with(|| {
                regions.push(name);
                regions.len() - 1
            });
            cell_region.push(idx);
        }
        let mut mesh = Self {
            dim,
            coords,
            cells,
            cell_region,
            regions,
            facets,
            facet_labels,
            id: MeshId(0),
        };
        mesh.validate()?;
        mesh.id = mesh.fingerprint();
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        let nv = self.n_vertices();
        if self.n_cells() == 0 {
            return Err(Error::Validation("mesh has no cells".into()));
        }
        if let Some(v) = self.cells.iter().chain(&self.facets).find(|&&v| v >= nv) {
            return Err(Error::Validation(format!("vertex index {v} out of range ({nv} vertices)")));
        }
        if self.coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Validation("non-finite vertex coordinate".into()));
        }
        for c in 0..self.n_cells() {
            let m = self.cell_measure(c);
            if !(m > 0.0) {
                return Err(Error::Validation(format!(
                    "cell {c} {:?} has non-positive measure {m:e}",
                    self.cell(c)
                )));
            }
        }
        let counts = self.facet_cell_counts();
        if let Some((key, _)) = counts.iter().find(|(_, &n)| n > 2) {
            return Err(Error::Validation(format!(
                "non-conforming mesh: facet {:?} is shared by more than 2 cells",
                trim_key(key)
            )));
        }
        let mut labelled: HashMap<FacetKey, usize> = HashMap::new();
        for f in 0..self.n_facets() {
            let key = facet_key(self.facet(f));
            match counts.get(&key) {
                Some(1) => {}
                _ => {
                    return Err(Error::Validation(format!(
                        "boundary facet {f} {:?} is not on the mesh boundary",
                        self.facet(f)
                    )))
                }
            }
            if labelled.insert(key, f).is_some() {
                return Err(Error::Validation(format!(
                    "boundary facet {:?} is listed twice",
                    self.facet(f)
                )));
            }
        }
        if let Some((key, _)) = counts
            .iter()
            .find(|(k, &n)| n == 1 && !labelled.contains_key(*k))
        {
            return Err(Error::Validation(format!(
                "boundary facet {:?} is unlabeled",
                trim_key(key)
            )));
        }
        Ok(())
    }

    fn facet_cell_counts(&self) -> HashMap<FacetKey, usize> {
        let mut counts: HashMap<FacetKey, usize> = HashMap::new();
        let d = self.dim;
        for c in 0..self.n_cells() {
            let cell = self.cell(c);
            for skip in 0..=d {
                let f: Vec<usize> = (0..=d).filter(|&k| k != skip).map(|k| cell[k]).collect();
                *counts.entry(facet_key(&f)).or_insert(0) += 1;
            }
        }
        counts
    }

    fn fingerprint(&self) -> MeshId {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.dim.hash(&mut h);
        for c in &self.coords {
            c.to_bits().hash(&mut h);
        }
        self.cells.hash(&mut h);
        self.cell_region.hash(&mut h);
        self.regions.hash(&mut h);
        self.facets.hash(&mut h);
        self.facet_labels.hash(&mut h);
        MeshId(h.finish())
    }

    pub fn id(&self) -> MeshId {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len() / self.dim
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let s = self.dim + 1;
        &self.cells[c * s..(c + 1) * s]
    }

    pub fn cell_points(&self, c: usize) -> Vec<&[f64]> {
        self.cell(c).iter().map(|&v| self.vertex(v)).collect()
    }

    pub fn cell_region(&self, c: usize) -> &str {
        &self.regions[self.cell_region[c]]
    }

    pub fn cell_region_index(&self, c: usize) -> usize {
        self.cell_region[c]
    }

    /// Region names in order of first appearance.
    pub fn regions(&self) -> &[String] {
        &self.regions
    }

    pub fn region_index(&self, name: &str) -> Option<usize> {
        self.regions.iter().position(|r| r == name)
    }

    pub fn facet(&self, f: usize) -> &[usize] {
        &self.facets[f * self.dim..(f + 1) * self.dim]
    }

    pub fn facet_points(&self, f: usize) -> Vec<&[f64]> {
        self.facet(f).iter().map(|&v| self.vertex(v)).collect()
    }

    pub fn facet_label(&self, f: usize) -> BoundaryLabel {
        self.facet_labels[f]
    }

    /// Boundary labels that occur on at least one facet.
    pub fn boundary_labels(&self) -> Vec<BoundaryLabel> {
        let mut l: Vec<BoundaryLabel> = self.facet_labels.clone();
        l.sort();
        l.dedup();
        l
    }

    pub fn cell_measure(&self, c: usize) -> f64 {
        simplex::signed_measure(&self.cell_points(c))
    }

    pub fn facet_measure(&self, f: usize) -> f64 {
        simplex::facet_measure(&self.facet_points(f))
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_measure(c)).sum()
    }

    /// Area (2D) or volume (3D) of each region, keyed by name.
    pub fn region_measures(&self) -> BTreeMap<String, f64> {
        let mut out: BTreeMap<String, f64> = BTreeMap::new();
        for c in 0..self.n_cells() {
            *out.entry(self.cell_region(c).to_string()).or_insert(0.0) += self.cell_measure(c);
        }
        out
    }

    pub fn boundary_measure(&self, label: BoundaryLabel) -> f64 {
        (0..self.n_facets())
            .filter(|&f| self.facet_label(f) == label)
            .map(|f| self.facet_measure(f))
            .sum()
    }

    /// Vertex-to-vertex adjacency through cells, including the diagonal.
    pub fn vertex_graph(&self) -> Vec<Vec<usize>> {
        let mut rows = vec![Vec::new(); self.n_vertices()];
        for c in 0..self.n_cells() {
            let cell = self.cell(c);
            for &a in cell {
                rows[a].extend_from_slice(cell);
            }
        }
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
        }
        rows
    }

    /// Pairs of distinct regions that share at least one interior facet.
    pub fn region_adjacency(&self) -> Vec<(String, String)> {
        let d = self.dim;
        let mut owner: HashMap<FacetKey, usize> = HashMap::new();
        let mut pairs = std::collections::BTreeSet::new();
        for c in 0..self.n_cells() {
            let cell = self.cell(c);
            for skip in 0..=d {
                let f: Vec<usize> = (0..=d).filter(|&k| k != skip).map(|k| cell[k]).collect();
                let key = facet_key(&f);
                if let Some(&other) = owner.get(&key) {
                    let (a, b) = (self.cell_region(c), self.cell_region(other));
                    if a != b {
                        let (x, y) = if a < b { (a, b) } else { (b, a) };
                        pairs.insert((x.to_string(), y.to_string()));
                    }
                } else {
                    owner.insert(key, c);
                }
            }
        }
        pairs.into_iter().collect()
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for v in 0..self.n_vertices() {
            for (k, &x) in self.vertex(v).iter().enumerate() {
                lo[k] = lo[k].min(x);
                hi[k] = hi[k].max(x);
            }
        }
        (lo, hi)
    }

    /// Largest cell diameter.
    pub fn max_cell_size(&self) -> f64 {
        let mut h: f64 = 0.0;
        for c in 0..self.n_cells() {
            let p = self.cell_points(c);
            for i in 0..p.len() {
                for j in i + 1..p.len() {
                    let d: f64 = p[i].iter().zip(p[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                    h = h.max(d.sqrt());
                }
            }
        }
        h
    }
}

type FacetKey = [usize; 3];

fn facet_key(f: &[usize]) -> FacetKey {
    let mut k = [usize::MAX; 3];
    k[..f.len()].copy_from_slice(f);
    k.sort_unstable();
    k
}

fn trim_key(k: &FacetKey) -> Vec<usize> {
    k.iter().copied().filter(|&v| v != usize::MAX).collect()
}

/// Result of [`locate_point`].
#[derive(Debug, Clone, PartialEq)]
pub struct PointLocation {
    pub cell: usize,
    pub barycentric: Vec<f64>,
    /// Set when the point lies outside every cell and was projected onto the
    /// nearest one.
    pub snapped: bool,
}

const LOCATE_TOL: f64 = 1e-10;

/// Finds the cell containing `x`, or the nearest cell when `x` is outside the mesh.
pub fn locate_point(mesh: &Mesh, x: &[f64]) -> Result<PointLocation> {
    if mesh.n_cells() == 0 {
        return Err(Error::Validation("cannot locate a point in an empty mesh".into()));
    }
    if x.len() != mesh.dim() {
        return Err(Error::MeshMismatch(format!(
            "point has {} coordinates, mesh is {}D",
            x.len(),
            mesh.dim()
        )));
    }
    for c in 0..mesh.n_cells() {
        let lam = simplex::barycentric(&mesh.cell_points(c), x);
        if lam.iter().all(|&l| l >= -LOCATE_TOL && l <= 1.0 + LOCATE_TOL) {
            return Ok(PointLocation {
                cell: c,
                barycentric: lam,
                snapped: false,
            });
        }
    }
    let (cell, q) = (0..mesh.n_cells())
        .map(|c| {
            let (q, d) = simplex::closest_point(&mesh.cell_points(c), x);
            (c, q, d)
        })
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .map(|(c, q, _)| (c, q))
        .unwrap();
    let mut lam = simplex::barycentric(&mesh.cell_points(cell), &q[..mesh.dim()]);
    for l in lam.iter_mut() {
        *l = l.clamp(0.0, 1.0);
    }
    let s: f64 = lam.iter().sum();
    lam.iter_mut().for_each(|l| *l /= s);
    Ok(PointLocation {
        cell,
        barycentric: lam,
        snapped: true,
    })
}

/// Thermal conductivity per region, with one region flagged as parametrized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionTable {
    conductivity: BTreeMap<String, f64>,
    parametrized: String,
}

impl RegionTable {
    pub fn new(conductivity: BTreeMap<String, f64>, parametrized: &str) -> Result<Self> {
        if let Some((name, k)) = conductivity.iter().find(|(_, &k)| !(k > 0.0 && k.is_finite())) {
            return Err(Error::Parameter(format!(
                "conductivity of `{name}` must be strictly positive, got {k}"
            )));
        }
        if !conductivity.contains_key(parametrized) {
            return Err(Error::MissingRegion(parametrized.to_string()));
        }
        Ok(Self {
            conductivity,
            parametrized: parametrized.to_string(),
        })
    }

    /// Baseline conductivities of the human eye (W/m/K); the lens is parametrized.
    pub fn eye() -> Self {
        let table = [
            ("cornea", 0.58),
            ("aqueousHumor", 0.28),
            ("lens", 0.4),
            ("vitreousHumor", 0.603),
            ("iris", 1.0042),
            ("retina", 0.52),
            ("choroid", 0.52),
            ("sclera", 1.0042),
            ("lamina", 1.0042),
            ("opticNerve", 1.0042),
        ];
        Self::new(
            table.iter().map(|&(n, k)| (n.to_string(), k)).collect(),
            "lens",
        )
        .expect("static table is valid")
    }

    /// Table with the same conductivity everywhere.
    pub fn uniform(regions: &[&str], k: f64, parametrized: &str) -> Result<Self> {
        Self::new(
            regions.iter().map(|r| (r.to_string(), k)).collect(),
            parametrized,
        )
    }

    pub fn get(&self, region: &str) -> Option<f64> {
        self.conductivity.get(region).copied()
    }

    pub fn parametrized(&self) -> &str {
        &self.parametrized
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.conductivity.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Checks that every region of the mesh has a conductivity.
    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        match mesh.regions().iter().find(|r| !self.conductivity.contains_key(*r)) {
            Some(r) => Err(Error::MissingRegion(r.clone())),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> Mesh {
        Mesh::new(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0],
            vec![0, 1, 2, 0, 2, 3],
            vec!["cornea".into(), "cornea".into()],
            vec![0, 1, 1, 2, 2, 3, 3, 0],
            vec![BoundaryLabel::Amb; 4],
        )
        .unwrap()
    }

    #[test]
    fn smallest_conforming_mesh() {
        let m = two_triangles();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_cells(), 2);
        assert!((m.total_measure() - 1.0).abs() < 1e-15);
        assert_eq!(m.boundary_measure(BoundaryLabel::Amb), 4.0);
        assert_eq!(m.regions(), ["cornea".to_string()]);
    }

    #[test]
    fn unlabeled_boundary_facet_is_named() {
        let err = Mesh::new(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0],
            vec![0, 1, 2, 0, 2, 3],
            vec!["cornea".into(), "cornea".into()],
            vec![0, 1, 1, 2, 2, 3],
            vec![BoundaryLabel::Amb; 3],
        )
        .unwrap_err();
        assert!(err.to_string().contains("[0, 3]"), "{err}");
    }

    #[test]
    fn interior_facet_cannot_be_labeled() {
        let err = Mesh::new(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0],
            vec![0, 1, 2, 0, 2, 3],
            vec!["cornea".into(), "cornea".into()],
            vec![0, 1, 1, 2, 2, 3, 3, 0, 0, 2],
            vec![BoundaryLabel::Amb; 5],
        )
        .unwrap_err();
        assert!(err.to_string().contains("not on the mesh boundary"));
    }

    #[test]
    fn inverted_cell_is_rejected() {
        let err = Mesh::new(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            vec![0, 2, 1],
            vec!["lens".into()],
            vec![0, 1, 1, 2, 2, 0],
            vec![BoundaryLabel::Body; 3],
        )
        .unwrap_err();
        assert!(err.to_string().contains("non-positive measure"));
    }

    #[test]
    fn non_conforming_fan_is_rejected() {
        // three triangles sharing the edge (0, 1)
        let err = Mesh::new(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 0.5, 1.0, 0.5, 2.0, 0.5, 3.0],
            vec![0, 1, 2, 0, 1, 3, 0, 1, 4],
            vec!["lens".into(); 3],
            vec![],
            vec![],
        )
        .unwrap_err();
        assert!(err.to_string().contains("more than 2 cells"), "{err}");
    }

    #[test]
    fn locate_vertex_and_centroid() {
        let m = two_triangles();
        let loc = locate_point(&m, &[1.0, 0.0]).unwrap();
        assert_eq!(loc.cell, 0);
        assert!((loc.barycentric[1] - 1.0).abs() < 1e-15);
        let c = [2.0 / 3.0, 1.0 / 3.0];
        let loc = locate_point(&m, &c).unwrap();
        assert_eq!(loc.cell, 0);
        for l in &loc.barycentric {
            assert!((l - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!(!loc.snapped);
    }

    #[test]
    fn outside_point_is_snapped() {
        let m = two_triangles();
        let loc = locate_point(&m, &[1.0 + 1e-6, 0.5]).unwrap();
        assert!(loc.snapped);
        assert_eq!(loc.cell, 0);
        assert!((loc.barycentric.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn region_table_checks() {
        let t = RegionTable::eye();
        assert_eq!(t.get("lens"), Some(0.4));
        assert_eq!(t.parametrized(), "lens");
        let m = two_triangles();
        assert!(t.check_mesh(&m).is_ok());
        let t2 = RegionTable::uniform(&["lens"], 1.0, "lens").unwrap();
        assert!(matches!(t2.check_mesh(&m), Err(Error::MissingRegion(r)) if r == "cornea"));
        assert!(RegionTable::uniform(&["lens"], 0.0, "lens").is_err());
    }
}

//! Gmsh MSH ASCII reader (versions 2.2 and 4.1) and writer (2.2).
//!
//! Physical groups of the top dimension become cell regions; groups one
//! dimension lower become boundary labels and must resolve, after the alias
//! map, to `amb` or `body`. Tagged facets that turn out to be interior
//! (interfaces between regions) are dropped.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{BoundaryLabel, Mesh};
use crate::error::{Error, Result};

/// Physical-group name → canonical region or boundary name.
pub type Aliases = BTreeMap<String, String>;

pub fn load_msh(path: impl AsRef<Path>, aliases: &Aliases) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_msh(&text, aliases, path)
}

/// Reads an alias map from a flat JSON object.
pub fn load_aliases(path: impl AsRef<Path>) -> Result<Aliases> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

struct Lines<'a> {
    path: PathBuf,
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, path: &Path) -> Self {
        Self {
            path: path.to_path_buf(),
            inner: text.lines().enumerate().peekable(),
            last: 0,
        }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            let t = l.trim();
            if !t.is_empty() {
                self.last = i + 1;
                return Some((i + 1, t));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let last = self.last;
        self.next()
            .ok_or_else(|| self.err(last + 1, format!("unexpected end of file, expected {what}")))
    }

    fn numbers<T: std::str::FromStr>(&mut self, what: &str) -> Result<(usize, Vec<T>)> {
        let (ln, l) = self.expect(what)?;
        let v = l
            .split_whitespace()
            .map(|t| t.parse::<T>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| self.err(ln, format!("malformed {what}: `{l}`")))?;
        Ok((ln, v))
    }

    fn end(&mut self, section: &str) -> Result<()> {
        let (ln, l) = self.expect(&format!("$End{section}"))?;
        if l != format!("$End{section}") {
            return Err(self.err(ln, format!("expected $End{section}, found `{l}`")));
        }
        Ok(())
    }

    fn skip_section(&mut self, name: &str) -> Result<()> {
        let end = format!("$End{name}");
        loop {
            let (_, l) = self.expect(&end)?;
            if l == end {
                return Ok(());
            }
        }
    }
}

#[derive(Default)]
struct Raw {
    physical_names: HashMap<(usize, i64), String>,
    nodes: Vec<(u64, [f64; 3])>,
    // (line, gmsh type, physical tag, node tags)
    elements: Vec<(usize, u32, Option<i64>, Vec<u64>)>,
}

fn nodes_per_type(t: u32) -> Option<usize> {
    match t {
        1 => Some(2),
        2 => Some(3),
        3 => Some(4),
        4 => Some(4),
        5 => Some(8),
        6 => Some(6),
        7 => Some(5),
        8 => Some(3),
        9 => Some(6),
        11 => Some(10),
        15 => Some(1),
        _ => None,
    }
}

/// Parses MSH text; `path` is only used in error messages.
pub fn parse_msh(text: &str, aliases: &Aliases, path: &Path) -> Result<Mesh> {
    let mut lines = Lines::new(text, path);
    let (ln, first) = lines
        .next()
        .ok_or_else(|| lines.err(1, "empty file, missing $MeshFormat"))?;
    if first != "$MeshFormat" {
        return Err(lines.err(ln, "missing $MeshFormat header"));
    }
    let (ln, fmt) = lines.expect("format line")?;
    let fields: Vec<&str> = fmt.split_whitespace().collect();
    if fields.len() < 3 || fields[1] != "0" {
        return Err(lines.err(ln, format!("unsupported format line `{fmt}` (ASCII only)")));
    }
    let version = fields[0];
    lines.end("MeshFormat")?;
    let raw = match version {
        "2.2" | "2.1" | "2" => read_v2(&mut lines)?,
        "4.1" => read_v4(&mut lines)?,
        v => return Err(lines.err(ln, format!("unsupported MSH version {v}"))),
    };
    build(raw, aliases, &lines)
}

fn read_physical_names(lines: &mut Lines, raw: &mut Raw) -> Result<()> {
    let (_, n) = lines.numbers::<usize>("physical name count")?;
    let n = *n.first().unwrap_or(&0);
    for _ in 0..n {
        let (ln, l) = lines.expect("physical name")?;
        let mut parts = l.splitn(3, char::is_whitespace);
        let dim = parts.next().and_then(|t| t.parse::<usize>().ok());
        let tag = parts.next().and_then(|t| t.parse::<i64>().ok());
        let name = parts.next().map(|t| t.trim().trim_matches('"').to_string());
        match (dim, tag, name) {
            (Some(d), Some(t), Some(nm)) if !nm.is_empty() => {
                raw.physical_names.insert((d, t), nm);
            }
            _ => return Err(lines.err(ln, format!("malformed physical name `{l}`"))),
        }
    }
    lines.end("PhysicalNames")
}

fn read_v2(lines: &mut Lines) -> Result<Raw> {
    let mut raw = Raw::default();
    while let Some((ln, l)) = lines.next() {
        match l {
            "$PhysicalNames" => read_physical_names(lines, &mut raw)?,
            "$Nodes" => {
                let (_, n) = lines.numbers::<usize>("node count")?;
                for _ in 0..n[0] {
                    let (ln, v) = lines.numbers::<f64>("node")?;
                    if v.len() < 4 {
                        return Err(lines.err(ln, "node line needs id x y z"));
                    }
                    raw.nodes.push((v[0] as u64, [v[1], v[2], v[3]]));
                }
                lines.end("Nodes")?;
            }
            "$Elements" => {
                let (_, n) = lines.numbers::<usize>("element count")?;
                for _ in 0..n[0] {
                    let (ln, v) = lines.numbers::<i64>("element")?;
                    if v.len() < 3 {
                        return Err(lines.err(ln, "element line too short"));
                    }
                    let ty = v[1] as u32;
                    let ntags = v[2] as usize;
                    let nn = nodes_per_type(ty)
                        .ok_or_else(|| lines.err(ln, format!("unsupported element type {ty}")))?;
                    if v.len() != 3 + ntags + nn {
                        return Err(lines.err(ln, "element line has the wrong number of fields"));
                    }
                    let phys = if ntags > 0 && v[3] != 0 { Some(v[3]) } else { None };
                    let nodes = v[3 + ntags..].iter().map(|&t| t as u64).collect();
                    raw.elements.push((ln, ty, phys, nodes));
                }
                lines.end("Elements")?;
            }
            s if s.starts_with('$') && !s.starts_with("$End") => lines.skip_section(&s[1..])?,
            _ => return Err(lines.err(ln, format!("unexpected line `{l}`"))),
        }
    }
    Ok(raw)
}

fn read_v4(lines: &mut Lines) -> Result<Raw> {
    let mut raw = Raw::default();
    // (dim, entity tag) -> first physical tag
    let mut entity_phys: HashMap<(usize, i64), i64> = HashMap::new();
    while let Some((ln, l)) = lines.next() {
        match l {
            "$PhysicalNames" => read_physical_names(lines, &mut raw)?,
            "$Entities" => {
                let (ln, counts) = lines.numbers::<usize>("entity counts")?;
                if counts.len() != 4 {
                    return Err(lines.err(ln, "entity counts need 4 fields"));
                }
                for (dim, &count) in counts.iter().enumerate() {
                    for _ in 0..count {
                        let (ln, v) = lines.numbers::<f64>("entity")?;
                        // points: tag x y z nphys ...; others: tag 6 bbox nphys ...
                        let at = if dim == 0 { 4 } else { 7 };
                        if v.len() <= at {
                            return Err(lines.err(ln, "entity line too short"));
                        }
                        let nphys = v[at] as usize;
                        if v.len() < at + 1 + nphys {
                            return Err(lines.err(ln, "entity line too short for its physical tags"));
                        }
                        if nphys > 0 {
                            entity_phys.insert((dim, v[0] as i64), v[at + 1] as i64);
                        }
                    }
                }
                lines.end("Entities")?;
            }
            "$Nodes" => {
                let (ln, h) = lines.numbers::<u64>("node header")?;
                if h.len() != 4 {
                    return Err(lines.err(ln, "node header needs 4 fields"));
                }
                for _ in 0..h[0] {
                    let (ln, b) = lines.numbers::<i64>("node block header")?;
                    if b.len() != 4 {
                        return Err(lines.err(ln, "node block header needs 4 fields"));
                    }
                    let parametric = b[2] != 0;
                    let count = b[3] as usize;
                    let mut tags = Vec::with_capacity(count);
                    for _ in 0..count {
                        let (ln, t) = lines.numbers::<u64>("node tag")?;
                        if t.len() != 1 {
                            return Err(lines.err(ln, "expected one node tag per line"));
                        }
                        tags.push(t[0]);
                    }
                    for tag in tags {
                        let (ln, x) = lines.numbers::<f64>("node coordinates")?;
                        if x.len() < 3 || (!parametric && x.len() != 3) {
                            return Err(lines.err(ln, "malformed node coordinates"));
                        }
                        raw.nodes.push((tag, [x[0], x[1], x[2]]));
                    }
                }
                lines.end("Nodes")?;
            }
            "$Elements" => {
                let (ln, h) = lines.numbers::<u64>("element header")?;
                if h.len() != 4 {
                    return Err(lines.err(ln, "element header needs 4 fields"));
                }
                for _ in 0..h[0] {
                    let (ln, b) = lines.numbers::<i64>("element block header")?;
                    if b.len() != 4 {
                        return Err(lines.err(ln, "element block header needs 4 fields"));
                    }
                    let (dim, tag, ty, count) = (b[0] as usize, b[1], b[2] as u32, b[3] as usize);
                    let nn = nodes_per_type(ty)
                        .ok_or_else(|| lines.err(ln, format!("unsupported element type {ty}")))?;
                    let phys = entity_phys.get(&(dim, tag)).copied();
                    for _ in 0..count {
                        let (ln, v) = lines.numbers::<u64>("element")?;
                        if v.len() != nn + 1 {
                            return Err(lines.err(ln, "element line has the wrong number of nodes"));
                        }
                        raw.elements.push((ln, ty, phys, v[1..].to_vec()));
                    }
                }
                lines.end("Elements")?;
            }
            s if s.starts_with('$') && !s.starts_with("$End") => lines.skip_section(&s[1..])?,
            _ => return Err(lines.err(ln, format!("unexpected line `{l}`"))),
        }
    }
    Ok(raw)
}

fn build(raw: Raw, aliases: &Aliases, lines: &Lines) -> Result<Mesh> {
    let dim = if raw.elements.iter().any(|e| e.1 == 4) {
        3
    } else if raw.elements.iter().any(|e| e.1 == 2) {
        2
    } else {
        return Err(Error::Validation("file contains no triangles or tetrahedra".into()));
    };
    let (cell_ty, facet_ty) = if dim == 3 { (4, 2) } else { (2, 1) };

    let mut index: HashMap<u64, usize> = HashMap::with_capacity(raw.nodes.len());
    let mut coords = Vec::with_capacity(raw.nodes.len() * dim);
    for (tag, x) in &raw.nodes {
        if index.insert(*tag, index.len()).is_some() {
            return Err(Error::Validation(format!("node {tag} defined twice")));
        }
        coords.extend_from_slice(&x[..dim]);
    }
    let name_of = |d: usize, phys: Option<i64>| -> Option<String> {
        let p = phys?;
        let name = raw
            .physical_names
            .get(&(d, p))
            .cloned()
            .unwrap_or_else(|| p.to_string());
        Some(aliases.get(&name).cloned().unwrap_or(name))
    };
    let node = |line: usize, t: u64| -> Result<usize> {
        index
            .get(&t)
            .copied()
            .ok_or_else(|| lines.err(line, format!("element references unknown node {t}")))
    };

    let mut cells = Vec::new();
    let mut regions = Vec::new();
    let mut facet_candidates = Vec::new();
    for (line, ty, phys, tags) in &raw.elements {
        if *ty == cell_ty {
            let region = name_of(dim, *phys).ok_or_else(|| {
                Error::Validation(format!("unlabeled cell at line {line} (no physical group)"))
            })?;
            let mut v = tags
                .iter()
                .map(|&t| node(*line, t))
                .collect::<Result<Vec<_>>>()?;
            let pts: Vec<&[f64]> = v.iter().map(|&i| &coords[i * dim..(i + 1) * dim]).collect();
            if super::simplex::signed_measure(&pts) < 0.0 {
                v.swap(dim - 1, dim);
            }
            cells.extend(v);
            regions.push(region);
        } else if *ty == facet_ty {
            let v = tags
                .iter()
                .map(|&t| node(*line, t))
                .collect::<Result<Vec<_>>>()?;
            facet_candidates.push((*line, v, name_of(dim - 1, *phys)));
        }
    }

    let mut count: HashMap<Vec<usize>, usize> = HashMap::new();
    for c in cells.chunks(dim + 1) {
        for skip in 0..=dim {
            let mut f: Vec<usize> = (0..=dim).filter(|&k| k != skip).map(|k| c[k]).collect();
            f.sort_unstable();
            *count.entry(f).or_insert(0) += 1;
        }
    }
    let mut facets = Vec::new();
    let mut labels = Vec::new();
    let mut seen = HashSet::new();
    for (line, v, name) in facet_candidates {
        let mut key = v.clone();
        key.sort_unstable();
        if count.get(&key) != Some(&1) || !seen.insert(key) {
            continue;
        }
        let name = name.ok_or_else(|| {
            Error::Validation(format!("unlabeled boundary facet at line {line} (no physical group)"))
        })?;
        let label = BoundaryLabel::parse(&name).ok_or_else(|| {
            Error::Validation(format!(
                "boundary facet at line {line} has label `{name}`, expected amb or body (add an alias)"
            ))
        })?;
        facets.extend(v);
        labels.push(label);
    }
    Mesh::new(dim, coords, cells, regions, facets, labels)
}

/// Serializes a mesh as MSH 2.2 ASCII. Region and boundary groups get
/// consecutive physical tags; coordinates use shortest round-trip formatting.
pub fn write_msh(mesh: &Mesh) -> String {
    let dim = mesh.dim();
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");
    let regions = mesh.regions();
    let labels = mesh.boundary_labels();
    let region_tag = |i: usize| i + 1;
    let label_tag = |l: BoundaryLabel| regions.len() + 1 + labels.iter().position(|&x| x == l).unwrap();
    let _ = writeln!(s, "$PhysicalNames\n{}", regions.len() + labels.len());
    for &l in &labels {
        let _ = writeln!(s, "{} {} \"{}\"", dim - 1, label_tag(l), l);
    }
    for (i, r) in regions.iter().enumerate() {
        let _ = writeln!(s, "{} {} \"{}\"", dim, region_tag(i), r);
    }
    s.push_str("$EndPhysicalNames\n");
    let _ = writeln!(s, "$Nodes\n{}", mesh.n_vertices());
    for v in 0..mesh.n_vertices() {
        let x = mesh.vertex(v);
        let z = if dim == 3 { x[2] } else { 0.0 };
        let _ = writeln!(s, "{} {} {} {}", v + 1, x[0], x[1], z);
    }
    s.push_str("$EndNodes\n");
    let _ = writeln!(s, "$Elements\n{}", mesh.n_facets() + mesh.n_cells());
    let (cell_ty, facet_ty) = if dim == 3 { (4, 2) } else { (2, 1) };
    let mut id = 1;
    for f in 0..mesh.n_facets() {
        let t = label_tag(mesh.facet_label(f));
        let _ = write!(s, "{id} {facet_ty} 2 {t} {t}");
        for &v in mesh.facet(f) {
            let _ = write!(s, " {}", v + 1);
        }
        s.push('\n');
        id += 1;
    }
    for c in 0..mesh.n_cells() {
        let t = region_tag(mesh.cell_region_index(c));
        let _ = write!(s, "{id} {cell_ty} 2 {t} {t}");
        for &v in mesh.cell(c) {
            let _ = write!(s, " {}", v + 1);
        }
        s.push('\n');
        id += 1;
    }
    s.push_str("$EndElements\n");
    s
}

pub fn save_msh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_msh(mesh))?;
    Ok(())
}

/// Named points travel in an extra `$NamedPoints` section (`count`, then
/// `name x y [z]` per line). Other readers skip unknown sections.
pub type NamedPoints = BTreeMap<String, Vec<f64>>;

pub fn write_named_points(points: &NamedPoints) -> String {
    let mut s = format!("$NamedPoints\n{}\n", points.len());
    for (name, x) in points {
        s.push_str(name);
        for v in x {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    s.push_str("$EndNamedPoints\n");
    s
}

/// Reads the `$NamedPoints` section if there is one.
pub fn parse_named_points(text: &str, path: &Path) -> Result<NamedPoints> {
    let mut lines = Lines::new(text, path);
    let mut out = NamedPoints::new();
    while let Some((_, l)) = lines.next() {
        if l != "$NamedPoints" {
            continue;
        }
        let (ln, n) = lines.numbers::<usize>("point count")?;
        if n.len() != 1 {
            return Err(lines.err(ln, "expected a single point count"));
        }
        for _ in 0..n[0] {
            let (ln, row) = lines.expect("named point")?;
            let mut it = row.split_whitespace();
            let name = it.next().ok_or_else(|| lines.err(ln, "empty named point"))?;
            let x: Vec<f64> = it
                .map(|t| t.parse().map_err(|_| lines.err(ln, format!("bad coordinate `{t}`"))))
                .collect::<Result<_>>()?;
            if !(2..=3).contains(&x.len()) {
                return Err(lines.err(ln, "named point needs 2 or 3 coordinates"));
            }
            out.insert(name.to_string(), x);
        }
        lines.end("NamedPoints")?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE_V2: &str = "$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
2
1 1 \"outerWall\"
2 2 \"cornea\"
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
3 1 2 1 1 3 4
4 1 2 1 1 4 1
5 2 2 2 1 1 2 3
6 2 2 2 1 1 3 4
$EndElements
";

    const SQUARE_V4: &str = "$MeshFormat
4.1 0 8
$EndMeshFormat
$PhysicalNames
2
1 10 \"amb\"
2 20 \"cornea\"
$EndPhysicalNames
$Entities
0 1 1 0
1 0 0 0 1 1 0 1 10 0
1 0 0 0 1 1 0 1 20 0
$EndEntities
$Nodes
2 4 1 4
2 1 0 4
1
2
3
4
0 0 0
1 0 0
1 1 0
0 1 0
0 0 0 0
$EndNodes
$Elements
2 6 1 6
1 1 1 4
1 1 2
2 2 3
3 3 4
4 4 1
2 1 2 2
5 1 3 2
6 1 4 3
$EndElements
";

    fn aliases() -> Aliases {
        [("outerWall".to_string(), "amb".to_string())].into()
    }

    #[test]
    fn v2_square_with_alias() {
        let m = parse_msh(SQUARE_V2, &aliases(), Path::new("sq.msh")).unwrap();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_cells(), 2);
        assert_eq!(m.n_facets(), 4);
        assert!((0..4).all(|f| m.facet_label(f) == BoundaryLabel::Amb));
    }

    #[test]
    fn v4_square_with_fixed_orientation() {
        let m = parse_msh(SQUARE_V4, &Aliases::new(), Path::new("sq4.msh")).unwrap();
        assert_eq!(m.n_cells(), 2);
        assert!((m.total_measure() - 1.0).abs() < 1e-15);
        assert_eq!(m.regions(), ["cornea".to_string()]);
    }

    #[test]
    fn missing_header_is_a_parse_error() {
        let text = SQUARE_V2.replacen("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n", "", 1);
        match parse_msh(&text, &aliases(), Path::new("x.msh")) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 1);
                assert!(msg.contains("$MeshFormat"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_node_reports_line() {
        let text = SQUARE_V2.replace("3 1 1 0", "3 1 one 0");
        match parse_msh(&text, &aliases(), Path::new("x.msh")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 13),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unresolved_boundary_name_is_rejected() {
        let err = parse_msh(SQUARE_V2, &Aliases::new(), Path::new("x.msh")).unwrap_err();
        assert!(err.to_string().contains("outerWall"), "{err}");
    }

    #[test]
    fn unlabeled_cell_is_rejected() {
        let text = SQUARE_V2.replace("6 2 2 2 1 1 3 4", "6 2 2 0 1 1 3 4");
        let err = parse_msh(&text, &aliases(), Path::new("x.msh")).unwrap_err();
        assert!(err.to_string().contains("unlabeled cell at line 23"), "{err}");
    }

    #[test]
    fn named_points_roundtrip() {
        let mut pts = NamedPoints::new();
        pts.insert("O".into(), vec![12.5, 0.0]);
        pts.insert("G".into(), vec![-12.0, 1e-3]);
        let text = format!("{}{}", SQUARE_V2, write_named_points(&pts));
        let p = Path::new("sq.msh");
        assert_eq!(parse_named_points(&text, p).unwrap(), pts);
        assert!(parse_msh(&text, &aliases(), p).is_ok());
        assert!(parse_named_points(SQUARE_V2, p).unwrap().is_empty());
    }

    #[test]
    fn write_then_read_is_identity() {
        let m = parse_msh(SQUARE_V2, &aliases(), Path::new("sq.msh")).unwrap();
        let back = parse_msh(&write_msh(&m), &Aliases::new(), Path::new("rt.msh")).unwrap();
        assert_eq!(back.coords(), m.coords());
        assert_eq!(back.id(), m.id());
    }
}

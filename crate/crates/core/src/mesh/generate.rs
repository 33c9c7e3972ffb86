//! Built-in structured meshes: a layered 2D eye cross-section, the unit
//! square and a two-layer annulus.
//!
//! The eye section is symmetric about the optical axis (the x-axis, cornea at
//! +x). A square core of vitreous humor is surrounded by rays from the origin
//! through the square's boundary nodes; each ray is cut at a fixed sequence of
//! radial breakpoints (lens back, lens front, inner shell, two shell
//! sublayers, outer surface), so every anatomical interface is a mesh line.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};

use super::{BoundaryLabel, Mesh};
use crate::error::{Error, Result};

const MM: f64 = 1e-3;
/// Half side of the vitreous core square.
const CORE: f64 = 3.0 * MM;
/// Radius of the globe behind the cornea.
const GLOBE: f64 = 12.0 * MM;
/// Distance from the center to the corneal apex.
const APEX: f64 = 12.5 * MM;
/// Distance from the center to the lens equator plane.
const LENS_CENTER: f64 = 6.8 * MM;
const LENS_HALF: f64 = 1.8 * MM;
const SHELL_FRONT: f64 = 0.6 * MM;
const SHELL_BACK: f64 = 1.2 * MM;

/// Radial subdivisions per slot for refinement 1.
const SLOT_DIVS: [usize; 6] = [3, 2, 2, 1, 1, 1];

/// Names of the canonical output locations, anterior to posterior.
pub const OUTPUT_POINTS: [&str; 5] = ["O", "B1", "C", "D1", "G"];

/// Pairs of regions that may share an interface in the generated section.
pub const EYE_ADJACENCY: [(&str, &str); 15] = [
    ("aqueousHumor", "cornea"),
    ("aqueousHumor", "iris"),
    ("aqueousHumor", "lens"),
    ("aqueousHumor", "vitreousHumor"),
    ("choroid", "iris"),
    ("choroid", "retina"),
    ("choroid", "sclera"),
    ("cornea", "iris"),
    ("cornea", "sclera"),
    ("iris", "lens"),
    ("iris", "retina"),
    ("iris", "sclera"),
    ("iris", "vitreousHumor"),
    ("lens", "vitreousHumor"),
    ("retina", "vitreousHumor"),
];

/// Generated eye section with its named output locations.
#[derive(Debug, Clone)]
pub struct EyeMesh {
    pub mesh: Mesh,
    pub refinement: usize,
    pub points: BTreeMap<String, [f64; 2]>,
}

impl EyeMesh {
    pub fn point(&self, name: &str) -> Option<[f64; 2]> {
        self.points.get(name).copied()
    }
}

fn theta_iris() -> f64 {
    0.25f64.atan()
}

fn theta_cornea() -> f64 {
    0.5f64.atan()
}

fn theta_lens() -> f64 {
    0.75f64.atan()
}

/// Center and radius of the corneal sphere, chosen so it passes through the
/// apex and meets the globe at `theta_cornea`.
fn cornea_sphere() -> (f64, f64) {
    let tc = theta_cornea();
    let (px, py) = (GLOBE * tc.cos(), GLOBE * tc.sin());
    // |P - (APEX - r, 0)| = r
    let d = px - APEX;
    let r = (d * d + py * py) / (-2.0 * d);
    (APEX - r, r)
}

fn outer_radius(theta: f64) -> f64 {
    let t = theta.abs();
    if t < theta_cornea() {
        let (xc, rc) = cornea_sphere();
        let c = t.cos();
        xc * c + (xc * xc * c * c - xc * xc + rc * rc).sqrt()
    } else {
        GLOBE
    }
}

fn shell_thickness(theta: f64) -> f64 {
    let t = theta.abs();
    let tc = theta_cornea();
    if t <= tc {
        SHELL_FRONT
    } else if t < FRAC_PI_4 {
        SHELL_FRONT + (SHELL_BACK - SHELL_FRONT) * (t - tc) / (FRAC_PI_4 - tc)
    } else {
        SHELL_BACK
    }
}

fn lens_half(theta: f64) -> f64 {
    let s = (theta.abs() / theta_lens()).min(1.0);
    LENS_HALF * (1.0 - 0.65 * s * s)
}

/// Radial breakpoints along the ray at angle `theta`, starting at `r0`.
fn breakpoints(theta: f64, r0: f64) -> [f64; 7] {
    let out = outer_radius(theta);
    let t = shell_thickness(theta);
    let inner = out - t;
    let h = lens_half(theta);
    [
        r0,
        LENS_CENTER - h,
        LENS_CENTER + h,
        inner,
        inner + 0.25 * t,
        inner + 0.5 * t,
        out,
    ]
}

fn region_of(slot: usize, theta: f64) -> &'static str {
    let t = theta.abs();
    match slot {
        0 => "vitreousHumor",
        1 if t < theta_lens() => "lens",
        1 => "vitreousHumor",
        2 if t < theta_iris() => "aqueousHumor",
        2 if t < theta_cornea() => "iris",
        2 if t < theta_lens() => "aqueousHumor",
        2 => "vitreousHumor",
        _ if t < theta_cornea() => "cornea",
        3 | 4 if t < FRAC_PI_4 => "iris",
        5 if t < FRAC_PI_4 => "sclera",
        3 => "retina",
        4 => "choroid",
        _ => "sclera",
    }
}

/// Angle in (-pi, pi] of the midpoint between two ray angles, handling the wrap at pi.
fn mid_angle(a: f64, b: f64) -> f64 {
    let (x, y) = (a.cos() + b.cos(), a.sin() + b.sin());
    y.atan2(x)
}

struct Builder {
    coords: Vec<f64>,
    cells: Vec<usize>,
    regions: Vec<String>,
    facets: Vec<usize>,
    labels: Vec<BoundaryLabel>,
}

impl Builder {
    fn new() -> Self {
        Self {
            coords: Vec::new(),
            cells: Vec::new(),
            regions: Vec::new(),
            facets: Vec::new(),
            labels: Vec::new(),
        }
    }

    fn vertex(&mut self, x: f64, y: f64) -> usize {
        self.coords.push(x);
        self.coords.push(y);
        self.coords.len() / 2 - 1
    }

    fn triangle(&mut self, mut t: [usize; 3], region: &str) {
        let p = |i: usize| [self.coords[2 * i], self.coords[2 * i + 1]];
        let (a, b, c) = (p(t[0]), p(t[1]), p(t[2]));
        if (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]) < 0.0 {
            t.swap(1, 2);
        }
        self.cells.extend_from_slice(&t);
        self.regions.push(region.to_string());
    }

    /// Splits quad `p00 p10 p11 p01` along `p00-p11` or `p10-p01`.
    fn quad(&mut self, q: [usize; 4], main_diagonal: bool, region: &str) {
        let [p00, p10, p11, p01] = q;
        if main_diagonal {
            self.triangle([p00, p10, p11], region);
            self.triangle([p00, p11, p01], region);
        } else {
            self.triangle([p00, p10, p01], region);
            self.triangle([p10, p11, p01], region);
        }
    }

    fn facet(&mut self, a: usize, b: usize, label: BoundaryLabel) {
        self.facets.push(a);
        self.facets.push(b);
        self.labels.push(label);
    }

    fn finish(self) -> Result<Mesh> {
        Mesh::new(2, self.coords, self.cells, self.regions, self.facets, self.labels)
    }
}

/// Generates the layered eye section. The mesh size halves with each
/// refinement increment.
pub fn eye_2d(refinement: usize) -> Result<EyeMesh> {
    if refinement == 0 {
        return Err(Error::Validation("refinement must be at least 1".into()));
    }
    if refinement > 8 {
        return Err(Error::Validation(format!("refinement {refinement} is too large")));
    }
    let m = 1usize << (refinement - 1);
    let n = 8 * m;
    let h = 2.0 * CORE / n as f64;
    let mut b = Builder::new();

    // core grid
    let mut grid = vec![0usize; (n + 1) * (n + 1)];
    for j in 0..=n {
        for i in 0..=n {
            grid[j * (n + 1) + i] = b.vertex(-CORE + i as f64 * h, -CORE + j as f64 * h);
        }
    }
    let g = |i: usize, j: usize| grid[j * (n + 1) + i];
    for j in 0..n {
        for i in 0..n {
            let cx = -CORE + (i as f64 + 0.5) * h;
            let cy = -CORE + (j as f64 + 0.5) * h;
            b.quad(
                [g(i, j), g(i + 1, j), g(i + 1, j + 1), g(i, j + 1)],
                cx * cy >= 0.0,
                "vitreousHumor",
            );
        }
    }

    // square boundary walked counter-clockwise from (CORE, 0)
    let half = n / 2;
    let mut ring_start: Vec<(usize, usize)> = Vec::with_capacity(4 * n);
    for k in 0..half {
        ring_start.push((n, half + k));
    }
    for k in 0..n {
        ring_start.push((n - k, n));
    }
    for k in 0..n {
        ring_start.push((0, n - k));
    }
    for k in 0..n {
        ring_start.push((k, 0));
    }
    for k in 0..half {
        ring_start.push((n, k));
    }
    let n_rays = ring_start.len();
    debug_assert_eq!(n_rays, 4 * n);

    let divs: Vec<usize> = SLOT_DIVS.iter().map(|d| d * m).collect();
    let levels: usize = divs.iter().sum();
    let mut ray_nodes = vec![vec![0usize; levels + 1]; n_rays];
    let mut angles = vec![0.0; n_rays];
    for (r, &(i, j)) in ring_start.iter().enumerate() {
        let root = g(i, j);
        let (x0, y0) = (b.coords[2 * root], b.coords[2 * root + 1]);
        let theta = y0.atan2(x0);
        angles[r] = theta;
        let (c, s) = (theta.cos(), theta.sin());
        let bp = breakpoints(theta, (x0 * x0 + y0 * y0).sqrt());
        ray_nodes[r][0] = root;
        let mut k = 1;
        for (slot, &d) in divs.iter().enumerate() {
            for t in 1..=d {
                let rho = bp[slot] + (bp[slot + 1] - bp[slot]) * t as f64 / d as f64;
                // snap exact axis points so output locations are vertices
                let y = if s.abs() < 1e-15 { 0.0 } else { rho * s };
                ray_nodes[r][k] = b.vertex(rho * c, y);
                k += 1;
            }
        }
    }

    let tc = theta_cornea();
    for r in 0..n_rays {
        let r1 = (r + 1) % n_rays;
        let theta = mid_angle(angles[r], angles[r1]);
        let mut k = 0;
        for (slot, &d) in divs.iter().enumerate() {
            let region = region_of(slot, theta);
            for _ in 0..d {
                b.quad(
                    [ray_nodes[r][k], ray_nodes[r1][k], ray_nodes[r1][k + 1], ray_nodes[r][k + 1]],
                    theta > 0.0,
                    region,
                );
                k += 1;
            }
        }
        let label = if theta.abs() < tc {
            BoundaryLabel::Amb
        } else {
            BoundaryLabel::Body
        };
        b.facet(ray_nodes[r][levels], ray_nodes[r1][levels], label);
    }

    let front = breakpoints(0.0, CORE);
    let back = breakpoints(PI, CORE);
    let points = [
        ("O", [front[6], 0.0]),
        ("B1", [front[2], 0.0]),
        ("C", [front[1], 0.0]),
        ("D1", [-back[3], 0.0]),
        ("G", [-back[6], 0.0]),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    Ok(EyeMesh {
        mesh: b.finish()?,
        refinement,
        points,
    })
}

/// Unit square `[0,1]^2` split into `2 n^2` triangles, one region, every
/// boundary edge carrying `label`.
pub fn unit_square(n: usize, region: &str, label: BoundaryLabel) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::Validation("unit square needs n >= 1".into()));
    }
    let mut b = Builder::new();
    let h = 1.0 / n as f64;
    for j in 0..=n {
        for i in 0..=n {
            b.vertex(i as f64 * h, j as f64 * h);
        }
    }
    let g = |i: usize, j: usize| j * (n + 1) + i;
    for j in 0..n {
        for i in 0..n {
            b.quad([g(i, j), g(i + 1, j), g(i + 1, j + 1), g(i, j + 1)], true, region);
        }
    }
    for k in 0..n {
        b.facet(g(k, 0), g(k + 1, 0), label);
        b.facet(g(n, k), g(n, k + 1), label);
        b.facet(g(k + 1, n), g(k, n), label);
        b.facet(g(0, k + 1), g(0, k), label);
    }
    b.finish()
}

/// Concentric two-layer annulus: `inner` on `[r0, r1]`, `outer` on
/// `[r1, r2]`. The inner circle is labeled body, the outer circle amb.
pub struct AnnulusSpec<'a> {
    pub radii: [f64; 3],
    pub regions: [&'a str; 2],
    pub n_theta: usize,
    pub n_radial: [usize; 2],
}

pub fn annulus(spec: &AnnulusSpec) -> Result<Mesh> {
    let [r0, r1, r2] = spec.radii;
    if !(0.0 < r0 && r0 < r1 && r1 < r2) {
        return Err(Error::Validation("annulus radii must satisfy 0 < r0 < r1 < r2".into()));
    }
    if spec.n_theta < 3 || spec.n_radial.contains(&0) {
        return Err(Error::Validation("annulus needs n_theta >= 3 and n_radial >= 1".into()));
    }
    let nt = spec.n_theta;
    let mut radii = Vec::new();
    for (layer, (&a, &c)) in [r0, r1].iter().zip(&[r1, r2]).enumerate() {
        let d = spec.n_radial[layer];
        for k in 0..d {
            radii.push((a + (c - a) * k as f64 / d as f64, layer));
        }
    }
    radii.push((r2, 1));
    let mut b = Builder::new();
    let mut idx = vec![vec![0usize; nt]; radii.len()];
    for (k, &(r, _)) in radii.iter().enumerate() {
        for j in 0..nt {
            let t = 2.0 * PI * j as f64 / nt as f64;
            idx[k][j] = b.vertex(r * t.cos(), r * t.sin());
        }
    }
    for k in 0..radii.len() - 1 {
        let region = spec.regions[radii[k].1];
        for j in 0..nt {
            let j1 = (j + 1) % nt;
            b.quad([idx[k][j], idx[k][j1], idx[k + 1][j1], idx[k + 1][j]], j % 2 == 0, region);
        }
    }
    let last = radii.len() - 1;
    for j in 0..nt {
        let j1 = (j + 1) % nt;
        b.facet(idx[0][j], idx[0][j1], BoundaryLabel::Body);
        b.facet(idx[last][j], idx[last][j1], BoundaryLabel::Amb);
    }
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cornea_meets_globe() {
        let tc = theta_cornea();
        assert!((outer_radius(tc * (1.0 - 1e-12)) - GLOBE).abs() < 1e-12);
        assert!((outer_radius(0.0) - APEX).abs() < 1e-15);
        let (_, rc) = cornea_sphere();
        assert!((rc - 9.03e-3).abs() < 1e-5);
    }

    #[test]
    fn vertex_counts_follow_the_ladder() {
        for (r, nv) in [(1, 401), (2, 1569), (3, 6209)] {
            assert_eq!(eye_2d(r).unwrap().mesh.n_vertices(), nv);
        }
    }

    #[test]
    fn regions_and_labels_present() {
        let e = eye_2d(1).unwrap();
        for r in [
            "cornea",
            "aqueousHumor",
            "lens",
            "vitreousHumor",
            "retina",
            "choroid",
            "sclera",
            "iris",
        ] {
            assert!(e.mesh.region_index(r).is_some(), "{r} missing");
        }
        assert!(e.mesh.boundary_measure(BoundaryLabel::Amb) > 0.0);
        assert!(e.mesh.boundary_measure(BoundaryLabel::Body) > 0.0);
    }

    #[test]
    fn adjacency_matches_table() {
        let e = eye_2d(2).unwrap();
        for (a, b) in e.mesh.region_adjacency() {
            assert!(
                EYE_ADJACENCY.contains(&(a.as_str(), b.as_str())),
                "unexpected interface (\"{a}\", \"{b}\")"
            );
        }
    }

    #[test]
    fn square_and_annulus_measures() {
        let s = unit_square(4, "lens", BoundaryLabel::Amb).unwrap();
        assert!((s.total_measure() - 1.0).abs() < 1e-14);
        assert!((s.boundary_measure(BoundaryLabel::Amb) - 4.0).abs() < 1e-14);
        let a = annulus(&AnnulusSpec {
            radii: [1.0, 2.0, 3.0],
            regions: ["a", "b"],
            n_theta: 64,
            n_radial: [4, 4],
        })
        .unwrap();
        let exact = PI * 8.0;
        assert!((a.total_measure() - exact).abs() / exact < 1e-2);
    }
}

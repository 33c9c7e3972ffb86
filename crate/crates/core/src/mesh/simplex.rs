//! Geometry of straight simplices in 2D and 3D.

/// Signed measure (area or volume) of a simplex given its `dim + 1` vertices.
pub fn signed_measure(pts: &[&[f64]]) -> f64 {
    match pts.len() {
        3 => {
            let (a, b, c) = (pts[0], pts[1], pts[2]);
            0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
        }
        4 => {
            let e = |k: usize| sub(pts[k], pts[0]);
            det3(e(1), e(2), e(3)) / 6.0
        }
        n => panic!("unsupported simplex with {n} vertices"),
    }
}

/// Measure of a facet: segment length in 2D, triangle area in 3D.
pub fn facet_measure(pts: &[&[f64]]) -> f64 {
    match pts.len() {
        2 => {
            let d = sub(pts[1], pts[0]);
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
        }
        3 => {
            let u = sub(pts[1], pts[0]);
            let v = sub(pts[2], pts[0]);
            let c = cross(u, v);
            0.5 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
        }
        n => panic!("unsupported facet with {n} vertices"),
    }
}

/// Gradients of the barycentric coordinates, one per vertex, padded to 3 components.
pub fn barycentric_gradients(pts: &[&[f64]]) -> Vec<[f64; 3]> {
    match pts.len() {
        3 => {
            let (a, b, c) = (pts[0], pts[1], pts[2]);
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            // rows of J^{-1} with J = [b-a, c-a]
            let g1 = [(c[1] - a[1]) / det, -(c[0] - a[0]) / det, 0.0];
            let g2 = [-(b[1] - a[1]) / det, (b[0] - a[0]) / det, 0.0];
            let g0 = [-g1[0] - g2[0], -g1[1] - g2[1], 0.0];
            vec![g0, g1, g2]
        }
        4 => {
            let e1 = sub(pts[1], pts[0]);
            let e2 = sub(pts[2], pts[0]);
            let e3 = sub(pts[3], pts[0]);
            let det = det3(e1, e2, e3);
            let g1 = scale(cross(e2, e3), 1.0 / det);
            let g2 = scale(cross(e3, e1), 1.0 / det);
            let g3 = scale(cross(e1, e2), 1.0 / det);
            let g0 = [
                -g1[0] - g2[0] - g3[0],
                -g1[1] - g2[1] - g3[1],
                -g1[2] - g2[2] - g3[2],
            ];
            vec![g0, g1, g2, g3]
        }
        n => panic!("unsupported simplex with {n} vertices"),
    }
}

/// Barycentric coordinates of `x` with respect to the simplex.
pub fn barycentric(pts: &[&[f64]], x: &[f64]) -> Vec<f64> {
    let grads = barycentric_gradients(pts);
    let d = pts.len() - 1;
    let p0 = pts[0];
    let mut lam = vec![0.0; d + 1];
    for k in 1..=d {
        lam[k] = (0..d).map(|c| grads[k][c] * (x[c] - p0[c])).sum();
    }
    lam[0] = 1.0 - lam[1..].iter().sum::<f64>();
    lam
}

/// Point of the closed simplex nearest to `x`, and its distance.
pub fn closest_point(pts: &[&[f64]], x: &[f64]) -> ([f64; 3], f64) {
    let lam = barycentric(pts, x);
    if lam.iter().all(|&l| l >= 0.0) {
        return (pad(x), 0.0);
    }
    let xp = pad(x);
    let mut best = ([0.0; 3], f64::INFINITY);
    match pts.len() {
        3 => {
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                let q = closest_on_segment(pad(pts[i]), pad(pts[j]), xp);
                let d = dist(q, xp);
                if d < best.1 {
                    best = (q, d);
                }
            }
        }
        4 => {
            for (i, j, k) in [(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)] {
                let q = closest_on_triangle(pad(pts[i]), pad(pts[j]), pad(pts[k]), xp);
                let d = dist(q, xp);
                if d < best.1 {
                    best = (q, d);
                }
            }
        }
        n => panic!("unsupported simplex with {n} vertices"),
    }
    best
}

fn closest_on_segment(a: [f64; 3], b: [f64; 3], p: [f64; 3]) -> [f64; 3] {
    let ab = sub3(b, a);
    let t = (dot3(sub3(p, a), ab) / dot3(ab, ab)).clamp(0.0, 1.0);
    add3(a, scale(ab, t))
}

// Ericson, Real-Time Collision Detection, 5.1.5
fn closest_on_triangle(a: [f64; 3], b: [f64; 3], c: [f64; 3], p: [f64; 3]) -> [f64; 3] {
    let ab = sub3(b, a);
    let ac = sub3(c, a);
    let ap = sub3(p, a);
    let d1 = dot3(ab, ap);
    let d2 = dot3(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = sub3(p, b);
    let d3 = dot3(ab, bp);
    let d4 = dot3(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return add3(a, scale(ab, d1 / (d1 - d3)));
    }
    let cp = sub3(p, c);
    let d5 = dot3(ab, cp);
    let d6 = dot3(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return add3(a, scale(ac, d2 / (d2 - d6)));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return add3(b, scale(sub3(c, b), w));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    add3(add3(a, scale(ab, v)), scale(ac, w))
}

fn pad(x: &[f64]) -> [f64; 3] {
    let mut p = [0.0; 3];
    p[..x.len()].copy_from_slice(x);
    p
}

fn sub(a: &[f64], b: &[f64]) -> [f64; 3] {
    sub3(pad(a), pad(b))
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    dot3(a, cross(b, c))
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = sub3(a, b);
    dot3(d, d).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_measure_and_gradients() {
        let p: [&[f64]; 3] = [&[0.0, 0.0], &[2.0, 0.0], &[0.0, 1.0]];
        assert_eq!(signed_measure(&p), 1.0);
        let g = barycentric_gradients(&p);
        assert_eq!(g[1], [0.5, 0.0, 0.0]);
        assert_eq!(g[2], [0.0, 1.0, 0.0]);
        let l = barycentric(&p, &[0.5, 0.25]);
        assert!((l[0] - 0.5).abs() < 1e-15 && (l[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn tetra_gradients_sum_to_zero() {
        let p: [&[f64]; 4] = [
            &[0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 1.0],
        ];
        assert!((signed_measure(&p) - 1.0 / 6.0).abs() < 1e-15);
        let g = barycentric_gradients(&p);
        for c in 0..3 {
            assert!(g.iter().map(|v| v[c]).sum::<f64>().abs() < 1e-15);
        }
        assert_eq!(g[3], [0.0, 0.0, 1.0]);
    }

    #[test]
    fn closest_point_outside_triangle() {
        let p: [&[f64]; 3] = [&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]];
        let (q, d) = closest_point(&p, &[0.5, -0.1]);
        assert!((q[0] - 0.5).abs() < 1e-15 && q[1].abs() < 1e-15);
        assert!((d - 0.1).abs() < 1e-15);
        let (_, d) = closest_point(&p, &[0.2, 0.2]);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn closest_point_outside_tetra() {
        let p: [&[f64]; 4] = [
            &[0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 1.0],
        ];
        let (q, d) = closest_point(&p, &[0.2, 0.2, -0.5]);
        assert!((q[0] - 0.2).abs() < 1e-15 && (q[1] - 0.2).abs() < 1e-15 && q[2] == 0.0);
        assert!((d - 0.5).abs() < 1e-15);
    }
}

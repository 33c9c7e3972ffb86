//! Quadrature rules on the reference simplex, in barycentric coordinates.
//! Weights are fractions of the simplex measure and sum to 1.

pub struct Rule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// 3-point Gauss rule on a segment, exact to degree 5.
pub fn segment5() -> Rule {
    let d = 0.5 * (3.0f64 / 5.0).sqrt();
    let pts = [0.5 - d, 0.5, 0.5 + d];
    Rule {
        points: pts.iter().map(|&t| vec![1.0 - t, t]).collect(),
        weights: vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
    }
}

/// 7-point rule on a triangle, exact to degree 5.
pub fn triangle5() -> Rule {
    let s = 15.0f64.sqrt();
    let mut points = vec![vec![1.0 / 3.0; 3]];
    let mut weights = vec![9.0 / 40.0];
    for (a, w) in [((6.0 - s) / 21.0, (155.0 - s) / 1200.0), ((6.0 + s) / 21.0, (155.0 + s) / 1200.0)] {
        let b = 1.0 - 2.0 * a;
        for p in [[a, a, b], [a, b, a], [b, a, a]] {
            points.push(p.to_vec());
            weights.push(w);
        }
    }
    Rule { points, weights }
}

/// 5-point rule on a tetrahedron, exact to degree 3.
pub fn tetra3() -> Rule {
    let mut points = vec![vec![0.25; 4]];
    let mut weights = vec![-0.8];
    for k in 0..4 {
        let mut p = vec![1.0 / 6.0; 4];
        p[k] = 0.5;
        points.push(p);
        weights.push(0.45);
    }
    Rule { points, weights }
}

/// Highest-accuracy rule available for a simplex with `n_vertices` vertices.
pub fn for_simplex(n_vertices: usize) -> Rule {
    match n_vertices {
        2 => segment5(),
        3 => triangle5(),
        4 => tetra3(),
        n => panic!("no quadrature rule for a simplex with {n} vertices"),
    }
}

/// Physical coordinates of a barycentric point.
pub fn map_point(pts: &[&[f64]], lam: &[f64]) -> Vec<f64> {
    let d = pts[0].len();
    (0..d)
        .map(|c| pts.iter().zip(lam).map(|(p, l)| p[c] * l).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(rule: &Rule, f: impl Fn(&[f64]) -> f64) -> f64 {
        rule.points.iter().zip(&rule.weights).map(|(p, w)| w * f(p)).sum()
    }

    #[test]
    fn weights_sum_to_one() {
        for r in [segment5(), triangle5(), tetra3()] {
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn triangle_rule_is_exact_for_quintics() {
        // mean of l0^a l1^b l2^c over the triangle = 2 a! b! c! / (a+b+c+2)!
        let r = triangle5();
        let v = integrate(&r, |l| l[0].powi(3) * l[1].powi(2));
        let exact = 2.0 * 6.0 * 2.0 / 5040.0;
        assert!((v - exact).abs() < 1e-15);
    }

    #[test]
    fn segment_rule_is_exact_for_quintics() {
        let v = integrate(&segment5(), |l| l[1].powi(5));
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn tetra_rule_is_exact_for_cubics() {
        // mean of l0^3 over a tetrahedron = 6 * 3! / 6! = 1/20
        let v = integrate(&tetra3(), |l| l[0].powi(3));
        assert!((v - 0.05).abs() < 1e-15);
    }
}

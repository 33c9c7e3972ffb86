//! Manufactured-solution convergence of the P1 discretization on the unit
//! square with Robin conditions on every side.
//!
//! With `u = sin(πx) cos(πy) + xy`, `-k Δu = s` and `k ∂u/∂n + h u = q`.

use std::f64::consts::PI;

use eyeheat::fem::assembly::{boundary_load_with, boundary_mass, h1_seminorm_error, l2_error, source_load, stiffness_with};
use eyeheat::mesh::generate::unit_square;
use eyeheat::mesh::BoundaryLabel;
use eyeheat::solver::{solve_spd, SolverOptions};

const K: f64 = 0.6;
const H: f64 = 10.0;

fn u(x: &[f64]) -> f64 {
    (PI * x[0]).sin() * (PI * x[1]).cos() + x[0] * x[1]
}

fn grad(x: &[f64]) -> Vec<f64> {
    vec![
        PI * (PI * x[0]).cos() * (PI * x[1]).cos() + x[1],
        -PI * (PI * x[0]).sin() * (PI * x[1]).sin() + x[0],
    ]
}

fn normal(x: &[f64]) -> [f64; 2] {
    let eps = 1e-12;
    if x[0] < eps {
        [-1.0, 0.0]
    } else if x[0] > 1.0 - eps {
        [1.0, 0.0]
    } else if x[1] < eps {
        [0.0, -1.0]
    } else {
        [0.0, 1.0]
    }
}

fn main() -> eyeheat::Result<()> {
    let mut prev: Option<(f64, f64, f64)> = None;
    println!("   n         h       L2 error  rate   H1 error  rate");
    for n in [8, 16, 32, 64, 128] {
        let mesh = unit_square(n, "cornea", BoundaryLabel::Amb)?;
        let mut a = stiffness_with(&mesh, |_| K);
        a.axpy(H, &boundary_mass(&mesh, BoundaryLabel::Amb));
        let mut b = source_load(&mesh, |x| 2.0 * K * PI * PI * (PI * x[0]).sin() * (PI * x[1]).cos());
        let q = boundary_load_with(&mesh, BoundaryLabel::Amb, |x| {
            let g = grad(x);
            let nv = normal(x);
            K * (g[0] * nv[0] + g[1] * nv[1]) + H * u(x)
        });
        b.iter_mut().zip(&q).for_each(|(bi, qi)| *bi += qi);
        let uh = solve_spd(&a, &b, &SolverOptions::default().with_tol(1e-12))?.x;
        let h = mesh.max_cell_size();
        let (e0, e1) = (l2_error(&mesh, &uh, u), h1_seminorm_error(&mesh, &uh, grad));
        let rates = prev.map(|(hp, p0, p1)| ((p0 / e0).ln() / (hp / h).ln(), (p1 / e1).ln() / (hp / h).ln()));
        match rates {
            Some((r0, r1)) => println!("{n:>4} {h:>9.5} {e0:>12.3e} {r0:>5.2} {e1:>10.3e} {r1:>5.2}"),
            None => println!("{n:>4} {h:>9.5} {e0:>12.3e}       {e1:>10.3e}"),
        }
        prev = Some((h, e0, e1));
    }
    Ok(())
}

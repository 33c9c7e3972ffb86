//! Chaos-based Sobol indices of the Ishigami function against the exact values.

use std::f64::consts::PI;

use eyeheat::uq::{pce_sobol, Marginal, PceOptions};

fn main() -> eyeheat::Result<()> {
    let (a, b) = (7.0, 0.1);
    let f = |x: &[f64]| Ok(x[0].sin() + a * x[1].sin().powi(2) + b * x[2].powi(4) * x[0].sin());
    let m = [Marginal::Uniform { lo: -PI, hi: PI }; 3];
    let names: Vec<String> = ["x1", "x2", "x3"].iter().map(|s| s.to_string()).collect();
    let opts = PceOptions {
        n_param: 2000,
        degree: 9,
        bootstrap: 100,
        seed: 0,
    };
    let r = pce_sobol(&f, &names, &m, &opts)?;

    let v1 = 0.5 * (1.0 + b * PI.powi(4) / 5.0).powi(2);
    let v2 = a * a / 8.0;
    let v13 = b * b * PI.powi(8) * (1.0 / 18.0 - 1.0 / 50.0);
    let v = v1 + v2 + v13;
    let exact_s = [v1 / v, v2 / v, 0.0];
    let exact_t = [(v1 + v13) / v, v2 / v, v13 / v];
    println!("Q2 = {:.6}", r.q2.unwrap());
    for i in 0..3 {
        println!(
            "{}: S = {:.4} (exact {:.4})   S_tot = {:.4} (exact {:.4})",
            names[i], r.first[i], exact_s[i], r.total[i], exact_t[i]
        );
    }
    Ok(())
}

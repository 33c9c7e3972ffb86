//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! The process exits 0 so that `cargo test` reports the run rather than
//! aborting on the first red line; set `ACCEPTANCE_STRICT=1` to exit 1 when
//! any criterion fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use common::{annulus_interface, eye_model, mms_solve, rates, sub, truth, EyeModel};
use eyeheat::fem::assembly::mass;
use eyeheat::fem::{
    assemble_linear, evaluate_output, solve_linear, solve_nonlinear, DiscreteField, NewtonOptions, OutputFunctional,
    Parameter, PhysicalConstants,
};
use eyeheat::mesh::generate::eye_2d;
use eyeheat::mesh::RegionTable;
use eyeheat::rbm::training_set;
use eyeheat::solver::SolverOptions;
use eyeheat::sparse::dot;
use eyeheat::uq::{convergence, pce_fit, pce_sobol, propagate, saltelli, InputDistribution, Marginal, PceOptions, PropagateOptions, SobolResult};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn ac1_mms() -> Outcome {
    let t = Instant::now();
    let runs: Vec<_> = [8, 16, 32, 64].into_iter().map(mms_solve).collect();
    let secs = t.elapsed().as_secs_f64();
    let l2 = rates(&runs, |r| r.l2);
    let h1 = rates(&runs, |r| r.h1);
    let pass = l2.iter().all(|r| (r - 2.0).abs() <= 0.2) && h1.iter().all(|r| (r - 1.0).abs() <= 0.2) && secs < 30.0;
    outcome(pass, format!("L2 rates {} H1 rates {} in {secs:.2} s", fmt(&l2), fmt(&h1)))
}

fn ac2_annulus() -> Outcome {
    let (computed, exact) = annulus_interface(256, 16);
    let rel = (computed - exact).abs() / exact.abs();
    outcome(rel <= 1e-3, format!("interface {computed:.5} K vs {exact:.5} K, relative error {rel:.2e}"))
}

struct Baseline {
    rel_l2: f64,
    max_nodal: f64,
    newton: usize,
    t_o: f64,
}

fn baseline_solves() -> Baseline {
    let eye = eye_2d(3).unwrap();
    let regions = RegionTable::eye();
    let consts = PhysicalConstants::default();
    let mu = Parameter::baseline();
    let lin = solve_linear(&assemble_linear(&eye.mesh, &regions, &consts, &mu).unwrap(), &SolverOptions::default()).unwrap();
    let init = DiscreteField::constant(&eye.mesh, mu.t_bl);
    let (nl, log) = solve_nonlinear(&eye.mesh, &regions, &consts, &mu, &init, &NewtonOptions::default()).unwrap();
    let m = mass(&eye.mesh);
    let d = sub(nl.values(), lin.values());
    let o = OutputFunctional::point(&eye.mesh, "O", &eye.point("O").unwrap()).unwrap();
    Baseline {
        rel_l2: (m.bilinear(&d, &d) / m.bilinear(nl.values(), nl.values())).sqrt(),
        max_nodal: nl.max_abs_diff(&lin),
        newton: log.iterations(),
        t_o: evaluate_output(&nl, &o).unwrap(),
    }
}

fn ac3_linearization(b: &Baseline) -> Outcome {
    let pass = b.rel_l2 <= 1e-4 && b.max_nodal <= 0.01 && b.newton <= 10;
    outcome(
        pass,
        format!(
            "relative L2 gap {:.2e} (<= 1e-4), max nodal gap {:.4} K (<= 0.01 K), Newton {} iterations",
            b.rel_l2, b.max_nodal, b.newton
        ),
    )
}

fn ac4_plausibility(b: &Baseline) -> Outcome {
    outcome((303.0..=310.0).contains(&b.t_o), format!("T_O = {:.3} K", b.t_o))
}

/// Field errors and bounds on a 100-parameter test set for N = 2, 4, ..., 12.
struct Rigor {
    ns: Vec<usize>,
    min_eta: Vec<f64>,
    output_violations: usize,
    mean_err: Vec<f64>,
}

fn rigor(m: &EyeModel) -> Rigor {
    let test = training_set(100, 2);
    let ns: Vec<usize> = (2..=12).step_by(2).filter(|&n| n <= m.rm.n()).collect();
    let mut min_eta = vec![f64::INFINITY; ns.len()];
    let mut mean_err = vec![0.0; ns.len()];
    let mut output_violations = 0;
    for mu in &test {
        let t = truth(&m.aff, mu);
        let s: Vec<f64> = m.aff.outputs.iter().map(|o| dot(&o.dual, &t)).collect();
        for (k, &n) in ns.iter().enumerate() {
            let sol = m.rm.online_solve_n(mu, n).unwrap();
            let e = m.x.norm(&sub(&t, &m.rm.reconstruct(&sol.coefficients)));
            min_eta[k] = min_eta[k].min(sol.certificate.delta / e);
            mean_err[k] += e / test.len() as f64;
            output_violations += s
                .iter()
                .zip(&sol.outputs)
                .zip(&sol.certificate.delta_s)
                .filter(|((a, b), d)| (*a - *b).abs() > **d)
                .count();
        }
    }
    Rigor { ns, min_eta, output_violations, mean_err }
}

fn ac5_rigor(r: &Rigor) -> Outcome {
    let worst = r.min_eta.iter().copied().fold(f64::INFINITY, f64::min);
    let pass = r.ns.len() == 6 && worst >= 1.0 - 1e-8 && r.output_violations == 0;
    outcome(
        pass,
        format!(
            "N = {:?}: min effectivity {} , output bound violations {}",
            r.ns,
            fmt(&r.min_eta),
            r.output_violations
        ),
    )
}

fn ac6_convergence(m: &EyeModel, r: &Rigor) -> Outcome {
    let at = |n: usize| r.ns.iter().position(|&k| k == n).map(|k| r.mean_err[k]);
    let (e2, e10) = (at(2).unwrap_or(f64::NAN), at(10).unwrap_or(f64::NAN));
    let ratio = e2 / e10;
    let pass = ratio >= 10.0 && m.rm.n() <= 20;
    outcome(
        pass,
        format!(
            "mean X-error {e2:.3e} (N=2) -> {e10:.3e} (N=10), ratio {ratio:.0}; greedy stopped at N = {} ({:?})",
            m.rm.n(),
            m.rm.history.stop
        ),
    )
}

fn ac7_speedup() -> Outcome {
    let m = eye_model(4, 1000);
    let dofs = m.rm.n_h();
    let n = m.rm.n().min(10);
    let mu = Parameter::new([292.0, 309.5, 30.0, 80.0, 120.0, 0.3]).unwrap();
    let eye = &m.eye;
    let fem = (0..3)
        .map(|_| {
            let t = Instant::now();
            let sys = assemble_linear(&eye.mesh, &RegionTable::eye(), &PhysicalConstants::default(), &mu).unwrap();
            std::hint::black_box(solve_linear(&sys, &SolverOptions::default()).unwrap());
            t.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min);
    let reps = 2000;
    let t = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(m.rm.online_solve_n(std::hint::black_box(&mu), n).unwrap());
    }
    let online = t.elapsed().as_secs_f64() / reps as f64;
    let speedup = fem / online;
    let pass = dofs >= 20_000 && n == 10 && speedup >= 100.0 && online < 5e-3;
    outcome(
        pass,
        format!(
            "{dofs} DOF: FEM {fem:.3} s, online N={n} {:.1} us, speedup {speedup:.2e}",
            online * 1e6
        ),
    )
}

fn ac8_ishigami() -> Outcome {
    let (a, b) = (7.0, 0.1);
    let f = |x: &[f64]| Ok(x[0].sin() + a * x[1].sin().powi(2) + b * x[2].powi(4) * x[0].sin());
    let marg = [Marginal::Uniform { lo: -PI, hi: PI }; 3];
    let names: Vec<String> = ["x1", "x2", "x3"].iter().map(|s| s.to_string()).collect();
    let t = Instant::now();
    let r = pce_sobol(&f, &names, &marg, &PceOptions { n_param: 2000, degree: 9, bootstrap: 500, seed: 0 }).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let v1 = 0.5 * (1.0 + b * PI.powi(4) / 5.0).powi(2);
    let v2 = a * a / 8.0;
    let v13 = b * b * PI.powi(8) * (1.0 / 18.0 - 1.0 / 50.0);
    let v = v1 + v2 + v13;
    let s = [v1 / v, v2 / v, 0.0];
    let st = [(v1 + v13) / v, v2 / v, v13 / v];
    let dev = (0..3)
        .map(|i| (r.first[i] - s[i]).abs().max((r.total[i] - st[i]).abs()))
        .fold(0.0f64, f64::max);
    outcome(
        dev <= 0.02 && secs < 60.0,
        format!("S {} S_tot {}, max deviation {dev:.4}, {secs:.1} s", fmt(&r.first), fmt(&r.total)),
    )
}

fn total(r: &SobolResult, name: &str) -> f64 {
    r.total[r.index_of(name).unwrap()]
}

/// Judged on the 1000-sample fit, the converged reference of the
/// convergence study; the 200-sample fit is printed alongside.
fn ac9_eye_sobol(o: &SobolResult, g: &SobolResult, o200: &SobolResult) -> Outcome {
    let big = ["T_amb", "h_amb", "E"].map(|n| total(o, n));
    let small = ["k_lens", "h_bl"].map(|n| total(o, n));
    let min_big = big.iter().copied().fold(f64::INFINITY, f64::min);
    let max_small = small.iter().copied().fold(0.0f64, f64::max);
    let pass = min_big >= 3.0 * max_small
        && small.iter().all(|&s| s < 0.05)
        && total(g, "T_amb") < total(o, "T_amb")
        && total(g, "T_bl") > total(o, "T_bl");
    outcome(
        pass,
        format!(
            "O: S_tot {} (200-sample fit {}); T_amb {:.3} -> {:.3} and T_bl {:.3} -> {:.3} from O to G",
            fmt(&o.total),
            fmt(&o200.total),
            total(o, "T_amb"),
            total(g, "T_amb"),
            total(o, "T_bl"),
            total(g, "T_bl")
        ),
    )
}

fn ac10_q2(m: &EyeModel, o: &SobolResult) -> Outcome {
    let q2 = o.q2.unwrap_or(f64::NAN);
    let rows = convergence(&m.rm, "O", &InputDistribution::reference(), &[200, 400, 1000], 3, 0).unwrap();
    let dev400 = rows.iter().find(|r| r.n_param == 400).map(|r| r.max_deviation).unwrap();
    outcome(
        q2 >= 0.99 && dev400 <= 0.05,
        format!("Q2 = {q2:.4} at 200 samples (>= 0.99), max deviation 400 vs 1000 = {dev400:.4} (<= 0.05)"),
    )
}

fn ac11_propagation(m: &EyeModel, o: &SobolResult) -> Outcome {
    let dist = InputDistribution::reference();
    let r = propagate(&m.rm, &dist, 10_000, 0, &PropagateOptions::default()).unwrap();
    let std = r.output("O").unwrap().std;
    let mc = saltelli(&m.rm, "O", &dist, 20_000, 0, 0).unwrap();
    let gap = (0..6)
        .map(|i| (o.first[i] - mc.first[i]).abs().max((o.total[i] - mc.total[i]).abs()))
        .fold(0.0f64, f64::max);
    let pass = r.failed == 0 && r.seconds < 60.0 && (0.5..=5.0).contains(&std) && gap <= 0.05;
    outcome(
        pass,
        format!(
            "10000 evaluations in {:.3} s, std(T_O) = {std:.3} K, max |pce - pick-freeze| = {gap:.4}",
            r.seconds
        ),
    )
}

fn main() {
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut report = |id: usize, o: Outcome| {
        println!("AC{id:<2} {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, o));
    };
    report(1, ac1_mms());
    report(2, ac2_annulus());
    let b = baseline_solves();
    report(3, ac3_linearization(&b));
    report(4, ac4_plausibility(&b));

    let m = eye_model(3, 1000);
    let r = rigor(&m);
    report(5, ac5_rigor(&r));
    report(6, ac6_convergence(&m, &r));
    report(7, ac7_speedup());
    report(8, ac8_ishigami());

    let dist = InputDistribution::reference();
    let o = pce_fit(&m.rm, "O", &dist, &PceOptions::default()).unwrap();
    let reference = PceOptions { n_param: 1000, ..PceOptions::default() };
    let o_ref = pce_fit(&m.rm, "O", &dist, &reference).unwrap();
    let g_ref = pce_fit(&m.rm, "G", &dist, &reference).unwrap();
    report(9, ac9_eye_sobol(&o_ref, &g_ref, &o));
    report(10, ac10_q2(&m, &o));
    report(11, ac11_propagation(&m, &o));

    let failed: Vec<usize> = results.iter().filter(|(_, o)| !o.pass).map(|(id, _)| *id).collect();
    println!("acceptance: {}/{} passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failing: {failed:?}");
        if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}

//! Named experiments, each a fixed configuration writing into one directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{MeshSource, RbmConfig, SobolMethodArg, UqConfig};
use super::manifest::Manifest;
use super::pipeline::{self, LoadedMesh};
use super::CliError;
use crate::fem::{Parameter, PhysicalConstants};
use crate::rbm::{training_set, ReducedModel};
use crate::solver::{solve_spd, SolverOptions};
use crate::sparse::dot;

pub const PRESETS: [&str; 16] = [
    "dsa-E",
    "dsa-hamb",
    "dsa-hbl",
    "dsa-klens",
    "dsa-Tamb",
    "dsa-Tbl",
    "rbm-convergence",
    "effectivity",
    "propagate-10k",
    "sobol-O",
    "sobol-cornea",
    "sobol-B1",
    "sobol-C",
    "sobol-D1",
    "sobol-G",
    "sobol-convergence",
];

#[derive(Debug, Clone)]
pub struct PresetOptions {
    pub out_dir: PathBuf,
    pub refinement: usize,
    pub seed: u64,
    /// Reuse a reduced model instead of training one.
    pub model: Option<PathBuf>,
}

fn dsa_param(short: &str) -> Option<&'static str> {
    Some(match short {
        "E" => "E",
        "hamb" => "h_amb",
        "hbl" => "h_bl",
        "klens" => "k_lens",
        "Tamb" => "T_amb",
        "Tbl" => "T_bl",
        _ => return None,
    })
}

/// Nine evenly spaced values over the admissible range of `name`.
pub fn dsa_grid(name: &str) -> Vec<f64> {
    let (lo, hi) = Parameter::domain()[Parameter::index_of(name).unwrap()];
    (0..9).map(|i| lo + (hi - lo) * i as f64 / 8.0).collect()
}

fn model(lm: &LoadedMesh, opts: &PresetOptions, m: &mut Manifest) -> Result<ReducedModel, CliError> {
    if let Some(p) = &opts.model {
        return pipeline::load_model(p);
    }
    let outputs = pipeline::resolve_outputs(lm, None)?;
    let cfg = RbmConfig {
        seed: opts.seed.wrapping_add(1),
        ..Default::default()
    };
    let dir = &opts.out_dir;
    pipeline::reduce(
        lm,
        &outputs,
        &PhysicalConstants::default(),
        &cfg,
        &dir.join("model.rbm"),
        Some(&dir.join("greedy.csv")),
        m,
    )
}

struct TestStats {
    n: usize,
    errors: Vec<f64>,
    deltas: Vec<f64>,
    /// Worst |s - s_N| and its bound, first output.
    output_errors: Vec<f64>,
    output_bounds: Vec<f64>,
    /// Outputs where the bound failed, over all outputs and samples.
    output_violations: usize,
}

/// Reduced versus full solutions on a random test set, for every basis size.
fn test_set(lm: &LoadedMesh, rm: &ReducedModel, size: usize, seed: u64) -> Result<Vec<TestStats>, CliError> {
    let outputs = pipeline::resolve_outputs(lm, None)?;
    let aff = pipeline::affine_for(lm, &outputs, &rm.consts)?;
    if aff.mesh != rm.mesh {
        return Err(CliError::Config("model was built on another mesh".into()));
    }
    let x = aff.operator(&rm.mu_ref);
    let test = training_set(size, seed);
    let truth: Vec<Vec<f64>> = test
        .iter()
        .map(|mu| Ok(solve_spd(&aff.operator(mu), &aff.load(mu), &SolverOptions::default().with_tol(1e-12))?.x))
        .collect::<crate::Result<_>>()?;
    let mut stats = Vec::new();
    for n in 1..=rm.n() {
        let mut s = TestStats {
            n,
            errors: Vec::new(),
            deltas: Vec::new(),
            output_errors: Vec::new(),
            output_bounds: Vec::new(),
            output_violations: 0,
        };
        for (mu, t) in test.iter().zip(&truth) {
            let sol = rm.online_solve_n(mu, n)?;
            let e: Vec<f64> = t.iter().zip(rm.reconstruct(&sol.coefficients)).map(|(a, b)| a - b).collect();
            s.errors.push(x.bilinear(&e, &e).max(0.0).sqrt());
            s.deltas.push(sol.certificate.delta);
            for (k, o) in rm.output_names.iter().enumerate() {
                let idx = aff.outputs.iter().position(|a| &a.name == o).unwrap();
                let err = (dot(&aff.outputs[idx].dual, t) - sol.outputs[k]).abs();
                if err > sol.certificate.delta_s[k] {
                    s.output_violations += 1;
                }
                if k == 0 {
                    s.output_errors.push(err);
                    s.output_bounds.push(sol.certificate.delta_s[k]);
                }
            }
        }
        stats.push(s);
    }
    Ok(stats)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

pub fn reproduce(name: &str, opts: &PresetOptions, m: &mut Manifest) -> Result<(), CliError> {
    if !PRESETS.contains(&name) {
        return Err(CliError::Config(format!(
            "unknown preset `{name}` (expected one of {})",
            PRESETS.join(", ")
        )));
    }
    let dir: &Path = &opts.out_dir;
    let lm = pipeline::load_mesh(&MeshSource::Generate(opts.refinement))?;
    m.notes.push(format!("preset {name} on the generated mesh, refinement {}", opts.refinement));

    if let Some(short) = name.strip_prefix("dsa-") {
        let param = dsa_param(short).unwrap();
        let outputs = pipeline::resolve_outputs(&lm, None)?;
        return pipeline::dsa(
            &lm,
            &outputs,
            &PhysicalConstants::default(),
            &Parameter::baseline(),
            param,
            &dsa_grid(param),
            &dir.join(format!("{name}.csv")),
            m,
        );
    }

    let rm = model(&lm, opts, m)?;
    let test_seed = opts.seed.wrapping_add(2);
    let uq_base = UqConfig {
        seed: opts.seed,
        ..Default::default()
    };
    match name {
        "rbm-convergence" => {
            m.seed("test_set", test_seed);
            let stats = test_set(&lm, &rm, 100, test_seed)?;
            let first = rm.output_names.first().cloned().unwrap_or_default();
            let mut s = format!(
                "n,mean_error [X],max_error [X],mean_delta [X],mean_error_{first} [K],mean_delta_{first} [K]\n"
            );
            for st in &stats {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    st.n,
                    mean(&st.errors),
                    max(&st.errors),
                    mean(&st.deltas),
                    mean(&st.output_errors),
                    mean(&st.output_bounds)
                );
            }
            m.write(&dir.join("rbm-convergence.csv"), s.as_bytes())
        }
        "effectivity" => {
            m.seed("test_set", test_seed);
            let stats = test_set(&lm, &rm, 100, test_seed)?;
            let mut s = String::from("n,min_eta [-],mean_eta [-],max_eta [-],output_bound_violations\n");
            for st in &stats {
                let eta: Vec<f64> = st
                    .deltas
                    .iter()
                    .zip(&st.errors)
                    .filter(|(_, e)| **e > 0.0)
                    .map(|(d, e)| d / e)
                    .collect();
                let min = eta.iter().copied().fold(f64::INFINITY, f64::min);
                let _ = writeln!(s, "{},{min},{},{},{}", st.n, mean(&eta), max(&eta), st.output_violations);
            }
            m.write(&dir.join("effectivity.csv"), s.as_bytes())
        }
        "propagate-10k" => pipeline::propagate(&rm, &uq_base, &dir.join("stats.csv"), Some(&dir.join("hist.csv")), m),
        "sobol-convergence" => {
            let cfg = UqConfig {
                sobol_outputs: vec!["O".into()],
                ..uq_base
            };
            pipeline::convergence(&rm, &cfg, &dir.join("sobol-convergence.csv"), false, m)
        }
        _ => {
            let output = name.strip_prefix("sobol-").unwrap().to_string();
            let pce = UqConfig {
                sobol_outputs: vec![output.clone()],
                ..uq_base.clone()
            };
            pipeline::sobol(&rm, &pce, &dir.join(format!("{name}.csv")), m)?;
            let saltelli = UqConfig {
                method: SobolMethodArg::Saltelli,
                n_param: 2000,
                bootstrap: 100,
                ..pce
            };
            pipeline::sobol(&rm, &saltelli, &dir.join(format!("{name}-saltelli.csv")), m)?;
            Ok(())
        }
    }
}

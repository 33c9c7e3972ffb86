//! Steps shared by the subcommands, `run` and the presets. Each step writes
//! its artifacts and records them in the manifest.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use super::config::{DistSource, MeshSource, ModelKind, OutputSpec, RbmConfig, SobolMethodArg, UqConfig};
use super::manifest::{Manifest, TimingComparison};
use super::CliError;
use crate::affine::{build_affine, AffineSystem};
use crate::fem::{
    assemble_linear, dsa_sweep, evaluate_output, solve_linear, solve_nonlinear, write_field,
    NewtonOptions, OutputFunctional, Parameter, PhysicalConstants, PARAM_NAMES,
};
use crate::mesh::generate::{eye_2d, OUTPUT_POINTS};
use crate::mesh::msh::{load_aliases, parse_msh, parse_named_points, write_msh, write_named_points, Aliases, NamedPoints};
use crate::mesh::{BoundaryLabel, Mesh, RegionTable};
use crate::rbm::{greedy_train, training_set, x_inner_product, GreedyOptions, ReducedModel};
use crate::solver::{solve_spd, SolverOptions};
use crate::uq::{self, InputDistribution, PceOptions, PropagateOptions};

type R<T> = Result<T, CliError>;

pub struct LoadedMesh {
    pub mesh: Mesh,
    pub points: NamedPoints,
}

pub fn load_mesh(src: &MeshSource) -> R<LoadedMesh> {
    match src {
        MeshSource::Generate(r) => {
            let e = eye_2d(*r)?;
            Ok(LoadedMesh {
                points: e.points.iter().map(|(k, v)| (k.clone(), v.to_vec())).collect(),
                mesh: e.mesh,
            })
        }
        MeshSource::File { path, aliases } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let aliases = match aliases {
                Some(a) => load_aliases(a)?,
                None => Aliases::new(),
            };
            Ok(LoadedMesh {
                mesh: parse_msh(&text, &aliases, path)?,
                points: parse_named_points(&text, path)?,
            })
        }
    }
}

pub fn constants(h_r: Option<f64>) -> PhysicalConstants {
    let c = PhysicalConstants::default();
    h_r.map_or(c, |h| c.with_hr(h))
}

/// Named points in display order, then any others alphabetically.
fn point_order(points: &NamedPoints) -> Vec<String> {
    let mut names: Vec<String> = OUTPUT_POINTS
        .iter()
        .filter(|n| points.contains_key(**n))
        .map(|n| n.to_string())
        .collect();
    names.extend(points.keys().filter(|k| !OUTPUT_POINTS.contains(&k.as_str())).cloned());
    names
}

/// Builds the output functionals. Without a list, every named point plus the
/// corneal mean (when the mesh has a cornea) is used.
pub fn resolve_outputs(lm: &LoadedMesh, specs: Option<&[OutputSpec]>) -> R<Vec<OutputFunctional>> {
    let owned: Vec<OutputSpec>;
    let specs = match specs {
        Some(s) if s.is_empty() => {
            return Err(CliError::Config("outputs: list is empty; give at least one output".into()))
        }
        Some(s) => s,
        None => {
            let mut v: Vec<OutputSpec> = point_order(&lm.points).into_iter().map(OutputSpec::Named).collect();
            if lm.mesh.region_index("cornea").is_some() {
                v.push(OutputSpec::Region {
                    name: "cornea".into(),
                    region: "cornea".into(),
                });
            }
            if v.is_empty() {
                return Err(CliError::Config(
                    "outputs: none given and the mesh defines no named points".into(),
                ));
            }
            owned = v;
            &owned
        }
    };
    let mut seen = std::collections::BTreeSet::new();
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let at = |e: crate::Error| CliError::Config(format!("outputs[{i}]: {e}"));
            let o = match s {
                OutputSpec::Named(n) => {
                    let x = lm.points.get(n).ok_or_else(|| {
                        CliError::Config(format!(
                            "outputs[{i}]: point `{n}` is not defined by this mesh; give coordinates instead"
                        ))
                    })?;
                    OutputFunctional::point(&lm.mesh, n, x).map_err(at)?
                }
                OutputSpec::Point { name, point } => OutputFunctional::point(&lm.mesh, name, point).map_err(at)?,
                OutputSpec::Region { name, region } => {
                    OutputFunctional::region_mean(&lm.mesh, name, region).map_err(at)?
                }
            };
            if !seen.insert(o.name.clone()) {
                return Err(CliError::Config(format!("outputs[{i}]: duplicate name `{}`", o.name)));
            }
            Ok(o)
        })
        .collect()
}

pub fn load_dist(src: Option<&DistSource>) -> R<InputDistribution> {
    let d = match src {
        None => InputDistribution::reference(),
        Some(DistSource::Inline(d)) => *d,
        Some(DistSource::File(p)) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            let de = &mut serde_json::Deserializer::from_str(&text);
            serde_path_to_error::deserialize(de).map_err(|e| {
                CliError::Config(format!("{}: field `{}`: {}", p.display(), e.path(), e.inner()))
            })?
        }
    };
    d.validate()?;
    Ok(d)
}

pub fn load_model(path: &Path) -> R<ReducedModel> {
    if !path.is_file() {
        return Err(CliError::Config(format!("model file {} does not exist", path.display())));
    }
    Ok(ReducedModel::load(path)?)
}

fn param_header() -> String {
    PARAM_NAMES
        .iter()
        .enumerate()
        .map(|(i, n)| format!("{n} [{}]", Parameter::unit(i)))
        .collect::<Vec<_>>()
        .join(",")
}

fn param_row(mu: &Parameter) -> String {
    mu.to_array().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

pub fn mesh_generate(refinement: usize, out: &Path, m: &mut Manifest) -> R<()> {
    let t = Instant::now();
    let e = eye_2d(refinement)?;
    let pts: NamedPoints = e.points.iter().map(|(k, v)| (k.clone(), v.to_vec())).collect();
    let text = write_msh(&e.mesh) + &write_named_points(&pts);
    m.time("mesh_generate", t.elapsed().as_secs_f64());
    m.write(out, text.as_bytes())
}

/// Human-readable summary of a valid mesh.
pub fn mesh_report(lm: &LoadedMesh) -> String {
    let mesh = &lm.mesh;
    let mut s = String::new();
    let _ = writeln!(s, "dimension      {}", mesh.dim());
    let _ = writeln!(s, "vertices       {}", mesh.n_vertices());
    let _ = writeln!(s, "cells          {}", mesh.n_cells());
    let _ = writeln!(s, "boundary facets {}", mesh.n_facets());
    let _ = writeln!(s, "max cell size  {:.4e}", mesh.max_cell_size());
    let _ = writeln!(s, "regions:");
    for (r, v) in mesh.region_measures() {
        let _ = writeln!(s, "  {r:<16} {v:.6e}");
    }
    let _ = writeln!(s, "boundary:");
    for l in [BoundaryLabel::Amb, BoundaryLabel::Body] {
        let _ = writeln!(s, "  {:<16} {:.6e}", l.as_str(), mesh.boundary_measure(l));
    }
    if let Err(e) = RegionTable::eye().check_mesh(mesh) {
        let _ = writeln!(s, "note: {e}");
    }
    if !lm.points.is_empty() {
        let _ = writeln!(s, "named points:");
        for n in point_order(&lm.points) {
            let _ = writeln!(s, "  {n:<16} {:?}", lm.points[&n]);
        }
    }
    s
}

pub struct SolveRequest<'a> {
    pub model: ModelKind,
    pub mu: Parameter,
    pub consts: PhysicalConstants,
    pub csv: Option<&'a Path>,
    pub field: Option<&'a Path>,
}

pub fn solve(lm: &LoadedMesh, outputs: &[OutputFunctional], req: &SolveRequest, m: &mut Manifest) -> R<Vec<f64>> {
    let regions = RegionTable::eye();
    let t = Instant::now();
    let sys = assemble_linear(&lm.mesh, &regions, &req.consts, &req.mu)?;
    let lin = solve_linear(&sys, &SolverOptions::default().with_tol(1e-12))?;
    let (field, iters) = match req.model {
        ModelKind::Linear => (lin, 0),
        ModelKind::Nonlinear => {
            let (f, log) = solve_nonlinear(&lm.mesh, &regions, &req.consts, &req.mu, &lin, &NewtonOptions::default())?;
            (f, log.iterations())
        }
    };
    m.time("solve", t.elapsed().as_secs_f64());
    let values = outputs
        .iter()
        .map(|o| evaluate_output(&field, o))
        .collect::<crate::Result<Vec<_>>>()?;
    if let Some(p) = req.csv {
        let mut s = format!("output,T [K],model,newton_iterations,{}\n", param_header());
        let kind = match req.model {
            ModelKind::Linear => "linear",
            ModelKind::Nonlinear => "nonlinear",
        };
        for (o, v) in outputs.iter().zip(&values) {
            let _ = writeln!(s, "{},{v},{kind},{iters},{}", o.name, param_row(&req.mu));
        }
        m.write(p, s.as_bytes())?;
    }
    if let Some(p) = req.field {
        let mut buf = Vec::new();
        write_field(&lm.mesh, &field, &mut buf)?;
        m.write(p, &buf)?;
    }
    Ok(values)
}

pub fn dsa(
    lm: &LoadedMesh,
    outputs: &[OutputFunctional],
    consts: &PhysicalConstants,
    baseline: &Parameter,
    param: &str,
    values: &[f64],
    csv: &Path,
    m: &mut Manifest,
) -> R<()> {
    Parameter::index_of(param).map_err(|e| CliError::Config(format!("param: {e}")))?;
    if values.is_empty() {
        return Err(CliError::Config("values: list is empty".into()));
    }
    let t = Instant::now();
    let table = dsa_sweep(
        &lm.mesh,
        &RegionTable::eye(),
        consts,
        param,
        values,
        baseline,
        outputs,
        &NewtonOptions::default(),
    )?;
    m.time(&format!("dsa_{param}"), t.elapsed().as_secs_f64());
    m.write(csv, table.to_csv().as_bytes())
}

pub fn affine_for(lm: &LoadedMesh, outputs: &[OutputFunctional], consts: &PhysicalConstants) -> R<AffineSystem> {
    Ok(build_affine(&lm.mesh, &RegionTable::eye(), consts)?.with_outputs(outputs)?)
}

/// Mean wall time of one online solve with certificate.
pub fn online_seconds(rm: &ReducedModel, mu: &Parameter, n: usize) -> R<f64> {
    let reps = 2000;
    rm.online_solve_n(mu, n)?;
    let t = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(rm.online_solve_n(std::hint::black_box(mu), n)?);
    }
    Ok(t.elapsed().as_secs_f64() / reps as f64)
}

pub fn reduce(
    lm: &LoadedMesh,
    outputs: &[OutputFunctional],
    consts: &PhysicalConstants,
    cfg: &RbmConfig,
    out: &Path,
    history: Option<&Path>,
    m: &mut Manifest,
) -> R<ReducedModel> {
    let aff = affine_for(lm, outputs, consts)?;
    let mu_ref = Parameter::baseline();
    let x = x_inner_product(&aff, &mu_ref)?;
    let train = training_set(cfg.train_size, cfg.seed);
    m.seed("training_set", cfg.seed);
    let opts = GreedyOptions {
        tol: cfg.tol,
        n_max: cfg.n_max,
        relative: cfg.relative,
        ..Default::default()
    };
    let t = Instant::now();
    let rm = greedy_train(&aff, &x, &train, &opts)?;
    m.time("greedy", t.elapsed().as_secs_f64());
    m.notes.push(format!("greedy stopped at N = {} ({:?})", rm.n(), rm.history.stop));

    // fresh FEM solve versus online solve at the same parameter
    let t = Instant::now();
    solve_spd(&aff.operator(&mu_ref), &aff.load(&mu_ref), &SolverOptions::default())?;
    let fem = t.elapsed().as_secs_f64();
    let n = rm.n().min(10);
    let online = online_seconds(&rm, &mu_ref, n)?;
    m.timing = Some(TimingComparison {
        dofs: aff.n(),
        n,
        fem_solve_s: fem,
        online_solve_s: online,
        speedup: fem / online,
    });

    let mut buf = Vec::new();
    rm.to_container().write_to(&mut buf)?;
    m.write(out, &buf)?;
    if let Some(p) = history {
        let unit = if cfg.relative { "[-]" } else { "[X]" };
        let mut s = format!("n,max_bound {unit},{}\n", param_header());
        for st in &rm.history.steps {
            let _ = writeln!(s, "{},{},{}", st.n, st.max_bound, param_row(&st.argmax));
        }
        m.write(p, s.as_bytes())?;
    }
    Ok(rm)
}

pub fn online(rm: &ReducedModel, params: &[Parameter], n: Option<usize>, csv: &Path, timings: bool, m: &mut Manifest) -> R<()> {
    let n = n.unwrap_or(rm.n());
    if n == 0 || n > rm.n() {
        return Err(CliError::Config(format!("n: must lie in 1..={}", rm.n())));
    }
    let mut s = param_header();
    for o in &rm.output_names {
        let _ = write!(s, ",{o} [K]");
    }
    for o in &rm.output_names {
        let _ = write!(s, ",delta_{o} [K]");
    }
    s.push_str(",delta [X],alpha_lb [-],n");
    if timings {
        s.push_str(",t_online [s]");
    }
    s.push('\n');
    let t = Instant::now();
    for mu in params {
        let sol = rm.online_solve_n(mu, n)?;
        s.push_str(&param_row(mu));
        for v in sol.outputs.iter().chain(&sol.certificate.delta_s) {
            let _ = write!(s, ",{v}");
        }
        let _ = write!(s, ",{},{},{n}", sol.certificate.delta, sol.certificate.alpha_lb);
        if timings {
            let _ = write!(s, ",{}", online_seconds(rm, mu, n)?);
        }
        s.push('\n');
    }
    m.time("online", t.elapsed().as_secs_f64());
    m.write(csv, s.as_bytes())
}

pub fn propagate(rm: &ReducedModel, uq_cfg: &UqConfig, csv: &Path, hist: Option<&Path>, m: &mut Manifest) -> R<()> {
    let dist = load_dist(uq_cfg.dist.as_ref())?;
    m.seed("propagate", uq_cfg.seed);
    let opts = PropagateOptions {
        bins: uq_cfg.bins,
        keep_samples: false,
    };
    let res = uq::propagate(rm, &dist, uq_cfg.n, uq_cfg.seed, &opts)?;
    m.time("propagate", res.seconds);
    if res.failed > 0 {
        m.notes.push(format!(
            "{} of {} evaluations failed; first error: {}",
            res.failed,
            res.requested,
            res.first_error.as_deref().unwrap_or("")
        ));
    }
    m.write(csv, res.stats_csv().as_bytes())?;
    if let Some(p) = hist {
        m.write(p, res.histogram_csv().as_bytes())?;
    }
    Ok(())
}

fn sobol_outputs(rm: &ReducedModel, wanted: &[String]) -> R<Vec<String>> {
    if wanted.is_empty() {
        return Ok(rm.output_names.clone());
    }
    for w in wanted {
        if rm.output_index(w).is_none() {
            return Err(CliError::Config(format!(
                "output `{w}` is not in the model (has: {})",
                rm.output_names.join(", ")
            )));
        }
    }
    Ok(wanted.to_vec())
}

pub fn sobol(rm: &ReducedModel, uq_cfg: &UqConfig, csv: &Path, m: &mut Manifest) -> R<Vec<uq::SobolResult>> {
    let dist = load_dist(uq_cfg.dist.as_ref())?;
    m.seed("sobol", uq_cfg.seed);
    let mut s = format!("{}\n", uq::SobolResult::csv_header());
    let mut all = Vec::new();
    let t = Instant::now();
    for name in sobol_outputs(rm, &uq_cfg.sobol_outputs)? {
        let r = match uq_cfg.method {
            SobolMethodArg::Pce => uq::pce_fit(
                rm,
                &name,
                &dist,
                &PceOptions {
                    n_param: uq_cfg.n_param,
                    degree: uq_cfg.degree,
                    bootstrap: uq_cfg.bootstrap,
                    seed: uq_cfg.seed,
                },
            )?,
            SobolMethodArg::Saltelli => {
                uq::saltelli(rm, &name, &dist, uq_cfg.n_param, uq_cfg.bootstrap, uq_cfg.seed)?
            }
        };
        for v in r.sanity_violations() {
            m.notes.push(format!("{name}: {v}"));
        }
        s.push_str(&r.csv_rows(&name));
        all.push(r);
    }
    m.time("sobol", t.elapsed().as_secs_f64());
    m.write(csv, s.as_bytes())?;
    Ok(all)
}

pub fn convergence(rm: &ReducedModel, uq_cfg: &UqConfig, csv: &Path, timings: bool, m: &mut Manifest) -> R<()> {
    let dist = load_dist(uq_cfg.dist.as_ref())?;
    m.seed("convergence", uq_cfg.seed);
    let mut s = String::new();
    for (k, name) in sobol_outputs(rm, &uq_cfg.sobol_outputs)?.iter().enumerate() {
        let rows = uq::convergence(rm, name, &dist, &uq_cfg.sizes, uq_cfg.degree, uq_cfg.seed)?;
        for r in &rows {
            m.time(&format!("convergence_{name}_{}", r.n_param), r.seconds);
        }
        let table = uq::convergence_csv(&rows, timings);
        let mut lines = table.lines();
        let header = lines.next().unwrap_or_default();
        if k == 0 {
            let _ = writeln!(s, "output,{header}");
        }
        for l in lines {
            let _ = writeln!(s, "{name},{l}");
        }
    }
    m.write(csv, s.as_bytes())
}

//! Command-line front end.
//!
//! Exit status: 0 on success, 1 for numerical failures (non-convergence,
//! singular systems, ...), 2 for configuration problems (bad arguments,
//! unreadable or invalid files). The thread count is taken from
//! `EYEHEAT_THREADS` when set.

pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod presets;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use config::{DistSource, MeshSource, ModelKind, OutputSpec, ParamSpec, RbmConfig, RunConfig, SobolMethodArg, Step, UqConfig};
use manifest::Manifest;
use pipeline::LoadedMesh;

pub const THREADS_ENV: &str = "EYEHEAT_THREADS";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Stagnation { .. }
            | Error::Factorization(_)
            | Error::NoConvergence { .. }
            | Error::Coercivity(_)
            | Error::SingularReduced
            | Error::RankDeficient { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "eyeheat", version, about = "Steady eye heat transfer: FEM, certified reduced basis, sensitivity analysis")]
pub struct Cli {
    /// Write a JSON manifest of artifacts, checksums, seeds and wall times.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the eye mesh or check a mesh file.
    #[command(subcommand)]
    Mesh(MeshCommand),
    /// Full-order solve at one parameter.
    Solve(SolveArgs),
    /// One-at-a-time parameter sweep through the nonlinear model.
    Dsa(DsaArgs),
    /// Greedy construction of a certified reduced model.
    Reduce(ReduceArgs),
    /// Reduced solves with error bounds.
    Online(OnlineArgs),
    /// Monte-Carlo propagation of input uncertainty.
    Propagate(PropagateArgs),
    /// Sobol indices by chaos regression or pick-freeze.
    Sobol(SobolArgs),
    /// Run a named experiment.
    Reproduce(ReproduceArgs),
    /// Execute a JSON run configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum MeshCommand {
    Generate {
        #[arg(long, default_value_t = 3)]
        refinement: usize,
        #[arg(long)]
        out: PathBuf,
    },
    Check {
        file: PathBuf,
        /// JSON object mapping physical-group names to canonical names.
        #[arg(long)]
        aliases: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct MeshArgs {
    /// Mesh file; the eye mesh is generated when omitted.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long, requires = "mesh")]
    pub aliases: Option<PathBuf>,
    /// Refinement of the generated mesh.
    #[arg(long, default_value_t = 3, conflicts_with = "mesh")]
    pub refinement: usize,
    /// JSON list of outputs: point names, {"name","point"} or {"name","region"}.
    #[arg(long)]
    pub outputs: Option<PathBuf>,
    /// Linearized radiation coefficient.
    #[arg(long)]
    pub hr: Option<f64>,
}

impl MeshArgs {
    fn source(&self) -> MeshSource {
        match &self.mesh {
            Some(p) => MeshSource::File {
                path: p.clone(),
                aliases: self.aliases.clone(),
            },
            None => MeshSource::Generate(self.refinement),
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// JSON object of parameter overrides; baseline otherwise.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModelKind::Linear)]
    pub model: ModelKind,
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub field_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DsaArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub param: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[arg(long)]
    pub csv: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 20)]
    pub nmax: usize,
    #[arg(long, default_value_t = 1000)]
    pub train_size: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Use the absolute bound instead of the bound relative to ‖u_N‖.
    #[arg(long)]
    pub absolute: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Greedy history CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OnlineArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// JSON object or list of objects of parameter overrides.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Basis size; all of it by default.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub csv: PathBuf,
    /// Add a per-row timing column.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Args)]
pub struct UqArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Input distribution JSON; the reference laws by default.
    #[arg(long)]
    pub dist: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    #[command(flatten)]
    pub uq: UqArgs,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub hist: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SobolArgs {
    #[command(flatten)]
    pub uq: UqArgs,
    #[arg(long, value_enum, default_value_t = SobolMethodArg::Pce)]
    pub method: SobolMethodArg,
    /// Regression size (pce) or base sample size (saltelli).
    #[arg(long, default_value_t = 200)]
    pub nparam: usize,
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    #[arg(long, default_value_t = 500)]
    pub bootstrap: usize,
    /// Outputs to analyse; all by default.
    #[arg(long = "output")]
    pub outputs: Vec<String>,
    /// Convergence study over these regression sizes instead of one fit.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// One of the preset names (see `presets::PRESETS`).
    pub preset: String,
    #[arg(long, default_value = "results")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub refinement: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Reuse an existing reduced model.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

/// Reads a JSON file into `T`, reporting the path of a bad field.
fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{what}: {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Config(format!("{what}: {}: field `{}`: {}", path.display(), e.path(), e.inner())))
}

fn params(path: &Option<PathBuf>) -> Result<ParamSpec, CliError> {
    match path {
        Some(p) => read_json(p, "params"),
        None => Ok(ParamSpec::default()),
    }
}

fn mesh_and_outputs(a: &MeshArgs) -> Result<(LoadedMesh, Vec<crate::fem::OutputFunctional>), CliError> {
    let specs: Option<Vec<OutputSpec>> = a.outputs.as_ref().map(|p| read_json(p, "outputs")).transpose()?;
    let lm = pipeline::load_mesh(&a.source())?;
    let outs = pipeline::resolve_outputs(&lm, specs.as_deref())?;
    Ok((lm, outs))
}

fn uq_config(a: &UqArgs) -> UqConfig {
    UqConfig {
        dist: a.dist.clone().map(DistSource::File),
        seed: a.seed,
        ..Default::default()
    }
}

/// Executes the steps of a run configuration; the manifest goes to `out_dir/manifest.json`.
pub fn run_config(cfg: &RunConfig, m: &mut Manifest) -> Result<(), CliError> {
    let dir = &cfg.out_dir;
    let consts = pipeline::constants(cfg.h_r);
    let needs_mesh = cfg
        .steps
        .iter()
        .any(|s| matches!(s, Step::Mesh | Step::Solve | Step::Dsa | Step::Reduce));
    let mut mesh = None;
    if needs_mesh {
        let lm = pipeline::load_mesh(&cfg.mesh)?;
        let outs = pipeline::resolve_outputs(&lm, cfg.outputs.as_deref())?;
        mesh = Some((lm, outs));
    }
    let mut model = match &cfg.reduced_model {
        Some(p) => Some(pipeline::load_model(p)?),
        None => None,
    };
    for step in &cfg.steps {
        let need_model = |model: &Option<_>| {
            if model.is_none() {
                Err(CliError::Config(format!(
                    "steps: `{step:?}` needs a reduced model; add a `reduce` step before it or set `reduced_model`"
                )))
            } else {
                Ok(())
            }
        };
        match step {
            Step::Mesh => {
                let r = match cfg.mesh {
                    MeshSource::Generate(r) => r,
                    MeshSource::File { .. } => {
                        return Err(CliError::Config("steps: `mesh` requires mesh.generate".into()))
                    }
                };
                pipeline::mesh_generate(r, &dir.join("eye.msh"), m)?;
            }
            Step::Solve => {
                let (lm, outs) = mesh.as_ref().unwrap();
                let req = pipeline::SolveRequest {
                    model: cfg.model,
                    mu: cfg.params.single()?,
                    consts,
                    csv: Some(&dir.join("results.csv")),
                    field: Some(&dir.join("field.txt")),
                };
                pipeline::solve(lm, outs, &req, m)?;
            }
            Step::Dsa => {
                let (lm, outs) = mesh.as_ref().unwrap();
                let d = cfg.dsa.as_ref().unwrap();
                pipeline::dsa(lm, outs, &consts, &cfg.params.single()?, &d.param, &d.values, &dir.join("dsa.csv"), m)?;
            }
            Step::Reduce => {
                let (lm, outs) = mesh.as_ref().unwrap();
                model = Some(pipeline::reduce(
                    lm,
                    outs,
                    &consts,
                    &cfg.rbm,
                    &dir.join("model.rbm"),
                    Some(&dir.join("greedy.csv")),
                    m,
                )?);
            }
            Step::Online => {
                need_model(&model)?;
                let ps = cfg.params.parameters()?;
                pipeline::online(model.as_ref().unwrap(), &ps, None, &dir.join("out.csv"), cfg.timings, m)?;
            }
            Step::Propagate => {
                need_model(&model)?;
                pipeline::propagate(model.as_ref().unwrap(), &cfg.uq, &dir.join("stats.csv"), Some(&dir.join("hist.csv")), m)?;
            }
            Step::Sobol => {
                need_model(&model)?;
                pipeline::sobol(model.as_ref().unwrap(), &cfg.uq, &dir.join("sobol.csv"), m)?;
            }
            Step::Convergence => {
                need_model(&model)?;
                pipeline::convergence(model.as_ref().unwrap(), &cfg.uq, &dir.join("convergence.csv"), cfg.timings, m)?;
            }
        }
    }
    Ok(())
}

fn dispatch(cli: &Cli, m: &mut Manifest) -> Result<Option<PathBuf>, CliError> {
    match &cli.command {
        Command::Mesh(MeshCommand::Generate { refinement, out }) => {
            pipeline::mesh_generate(*refinement, out, m)?;
        }
        Command::Mesh(MeshCommand::Check { file, aliases }) => {
            let lm = pipeline::load_mesh(&MeshSource::File {
                path: file.clone(),
                aliases: aliases.clone(),
            })?;
            print!("{}", pipeline::mesh_report(&lm));
        }
        Command::Solve(a) => {
            let (lm, outs) = mesh_and_outputs(&a.mesh)?;
            let req = pipeline::SolveRequest {
                model: a.model,
                mu: params(&a.params)?.single()?,
                consts: pipeline::constants(a.mesh.hr),
                csv: Some(&a.csv),
                field: a.field_out.as_deref(),
            };
            pipeline::solve(&lm, &outs, &req, m)?;
        }
        Command::Dsa(a) => {
            let (lm, outs) = mesh_and_outputs(&a.mesh)?;
            let base = params(&a.params)?.single()?;
            pipeline::dsa(&lm, &outs, &pipeline::constants(a.mesh.hr), &base, &a.param, &a.values, &a.csv, m)?;
        }
        Command::Reduce(a) => {
            let cfg = RbmConfig {
                tol: a.tol,
                n_max: a.nmax,
                train_size: a.train_size,
                seed: a.seed,
                relative: !a.absolute,
            };
            if !(cfg.tol > 0.0) || cfg.n_max == 0 || cfg.train_size == 0 {
                return Err(CliError::Config("tol must be > 0, nmax and train-size >= 1".into()));
            }
            let (lm, outs) = mesh_and_outputs(&a.mesh)?;
            pipeline::reduce(&lm, &outs, &pipeline::constants(a.mesh.hr), &cfg, &a.out, a.history.as_deref(), m)?;
        }
        Command::Online(a) => {
            let rm = pipeline::load_model(&a.model)?;
            pipeline::online(&rm, &params(&a.params)?.parameters()?, a.n, &a.csv, a.timings, m)?;
        }
        Command::Propagate(a) => {
            let rm = pipeline::load_model(&a.uq.model)?;
            let cfg = UqConfig {
                n: a.n,
                bins: a.bins,
                ..uq_config(&a.uq)
            };
            if cfg.n == 0 {
                return Err(CliError::Config("n: must be >= 1".into()));
            }
            pipeline::propagate(&rm, &cfg, &a.csv, a.hist.as_deref(), m)?;
        }
        Command::Sobol(a) => {
            let rm = pipeline::load_model(&a.uq.model)?;
            let cfg = UqConfig {
                method: a.method,
                n_param: a.nparam,
                degree: a.degree,
                bootstrap: a.bootstrap,
                sobol_outputs: a.outputs.clone(),
                sizes: a.sizes.clone(),
                ..uq_config(&a.uq)
            };
            if a.sizes.is_empty() {
                pipeline::sobol(&rm, &cfg, &a.csv, m)?;
            } else {
                pipeline::convergence(&rm, &cfg, &a.csv, a.timings, m)?;
            }
        }
        Command::Reproduce(a) => {
            let opts = presets::PresetOptions {
                out_dir: a.out_dir.clone(),
                refinement: a.refinement,
                seed: a.seed,
                model: a.model.clone(),
            };
            m.seed("preset", a.seed);
            presets::reproduce(&a.preset, &opts, m)?;
            return Ok(Some(a.out_dir.join("manifest.json")));
        }
        Command::Run { config } => {
            let cfg = RunConfig::load(config)?;
            run_config(&cfg, m)?;
            return Ok(Some(cfg.out_dir.join("manifest.json")));
        }
    }
    Ok(None)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}={v} is not a positive integer")))?;
    // a pool may already exist when called repeatedly in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = configure_threads().and_then(|_| {
        let name = format!("{:?}", cli.command).split([' ', '(', '{']).next().unwrap_or("").to_lowercase();
        let mut m = Manifest::new(&name);
        let default_manifest = dispatch(&cli, &mut m)?;
        if let Some(p) = cli.manifest.clone().or(default_manifest) {
            m.save(&p)?;
        }
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("eyeheat: {e}");
            e.exit_code()
        }
    }
}

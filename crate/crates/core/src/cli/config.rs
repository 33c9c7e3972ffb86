//! JSON run configuration. Every subcommand maps onto the same structure;
//! `eyeheat run --config cfg.json` executes its `steps` in order.
//!
//! ```json
//! {
//!   "mesh": {"generate": 3},
//!   "model": "linear",
//!   "params": {"T_amb": 295.0},
//!   "outputs": ["O", "G", {"name": "P", "point": [0.01, 0.0]}, {"name": "cornea", "region": "cornea"}],
//!   "rbm": {"tol": 1e-6, "n_max": 20, "train_size": 1000, "seed": 1},
//!   "uq": {"n": 10000, "seed": 5, "method": "pce", "n_param": 200, "degree": 3},
//!   "steps": ["solve", "reduce", "online", "propagate", "sobol"],
//!   "out_dir": "out"
//! }
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::CliError;
use crate::fem::Parameter;
use crate::uq::InputDistribution;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum MeshSource {
    /// Generated eye cross-section at this refinement.
    Generate(usize),
    File {
        path: PathBuf,
        #[serde(default)]
        aliases: Option<PathBuf>,
    },
}

impl Default for MeshSource {
    fn default() -> Self {
        MeshSource::Generate(3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Linear,
    Nonlinear,
}

/// A named mesh point, explicit coordinates, or a region mean.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum OutputSpec {
    Named(String),
    Point { name: String, point: Vec<f64> },
    Region { name: String, region: String },
}

/// Overrides of the baseline parameter, one object or a list of them.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ParamSpec {
    One(BTreeMap<String, f64>),
    Many(Vec<BTreeMap<String, f64>>),
}

impl Default for ParamSpec {
    fn default() -> Self {
        ParamSpec::One(BTreeMap::new())
    }
}

fn apply(over: &BTreeMap<String, f64>, at: &str) -> Result<Parameter, CliError> {
    let mut mu = Parameter::baseline();
    for (k, &v) in over {
        mu = mu
            .with(k, v)
            .map_err(|e| CliError::Config(format!("{at}.{k}: {e}")))?;
    }
    Ok(mu)
}

impl ParamSpec {
    pub fn parameters(&self) -> Result<Vec<Parameter>, CliError> {
        match self {
            ParamSpec::One(m) => Ok(vec![apply(m, "params")?]),
            ParamSpec::Many(list) => {
                if list.is_empty() {
                    return Err(CliError::Config("params: list is empty".into()));
                }
                list.iter()
                    .enumerate()
                    .map(|(i, m)| apply(m, &format!("params[{i}]")))
                    .collect()
            }
        }
    }

    /// The single parameter of a one-object spec.
    pub fn single(&self) -> Result<Parameter, CliError> {
        match self {
            ParamSpec::One(m) => apply(m, "params"),
            ParamSpec::Many(_) => Err(CliError::Config("params: expected a single object".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DsaConfig {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbmConfig {
    pub tol: f64,
    pub n_max: usize,
    pub train_size: usize,
    pub seed: u64,
    /// Bound relative to the reduced solution norm.
    pub relative: bool,
}

impl Default for RbmConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            n_max: 20,
            train_size: 1000,
            seed: 1,
            relative: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SobolMethodArg {
    #[default]
    Pce,
    Saltelli,
}

/// Inline distribution or path to a dist.json file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum DistSource {
    File(PathBuf),
    Inline(InputDistribution),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UqConfig {
    pub dist: Option<DistSource>,
    pub n: usize,
    pub seed: u64,
    pub bins: usize,
    pub method: SobolMethodArg,
    pub n_param: usize,
    pub degree: usize,
    pub bootstrap: usize,
    /// Outputs analysed by `sobol` and `convergence`; all when empty.
    pub sobol_outputs: Vec<String>,
    pub sizes: Vec<usize>,
}

impl Default for UqConfig {
    fn default() -> Self {
        Self {
            dist: None,
            n: 10_000,
            seed: 0,
            bins: 40,
            method: SobolMethodArg::Pce,
            n_param: 200,
            degree: 3,
            bootstrap: 500,
            sobol_outputs: Vec::new(),
            sizes: vec![200, 400, 1000],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    Mesh,
    Solve,
    Dsa,
    Reduce,
    Online,
    Propagate,
    Sobol,
    Convergence,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mesh: MeshSource,
    #[serde(default)]
    pub model: ModelKind,
    #[serde(default)]
    pub params: ParamSpec,
    #[serde(default)]
    pub outputs: Option<Vec<OutputSpec>>,
    /// Linearized radiation coefficient.
    #[serde(default)]
    pub h_r: Option<f64>,
    #[serde(default)]
    pub dsa: Option<DsaConfig>,
    #[serde(default)]
    pub rbm: RbmConfig,
    /// Existing reduced model; skips the need for a `reduce` step.
    #[serde(default)]
    pub reduced_model: Option<PathBuf>,
    #[serde(default)]
    pub uq: UqConfig,
    pub steps: Vec<Step>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Add wall-time columns to CSVs (makes them non-reproducible).
    #[serde(default)]
    pub timings: bool,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("config field `{path}`: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        if let MeshSource::File { path, aliases } = &mut cfg.mesh {
            rebase(&base, path);
            if let Some(a) = aliases {
                rebase(&base, a);
            }
        }
        if let Some(DistSource::File(p)) = &mut cfg.uq.dist {
            rebase(&base, p);
        }
        if let Some(p) = &mut cfg.reduced_model {
            rebase(&base, p);
        }
        rebase(&base, &mut cfg.out_dir);
        cfg.check_files()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.steps.is_empty() {
            return bad("steps: list is empty".into());
        }
        if let Some(o) = &self.outputs {
            if o.is_empty() {
                return bad("outputs: list is empty; give at least one output".into());
            }
        }
        if let MeshSource::Generate(r) = self.mesh {
            if !(1..=8).contains(&r) {
                return bad(format!("mesh.generate: refinement {r} outside 1..=8"));
            }
        }
        if self.steps.contains(&Step::Dsa) && self.dsa.is_none() {
            return bad("dsa: required by the `dsa` step".into());
        }
        if let Some(d) = &self.dsa {
            if d.values.is_empty() {
                return bad("dsa.values: list is empty".into());
            }
            Parameter::index_of(&d.param).map_err(|e| CliError::Config(format!("dsa.param: {e}")))?;
        }
        if !(self.rbm.tol > 0.0) {
            return bad("rbm.tol: must be > 0".into());
        }
        if self.rbm.n_max == 0 || self.rbm.train_size == 0 {
            return bad("rbm: n_max and train_size must be >= 1".into());
        }
        if self.uq.n == 0 {
            return bad("uq.n: must be >= 1".into());
        }
        if let Some(h) = self.h_r {
            if !(h >= 0.0) {
                return bad("h_r: must be >= 0".into());
            }
        }
        self.params.parameters()?;
        Ok(())
    }

    fn check_files(&self) -> Result<(), CliError> {
        let must = |p: &Path, field: &str| {
            if p.is_file() {
                Ok(())
            } else {
                Err(CliError::Config(format!("{field}: file {} does not exist", p.display())))
            }
        };
        if let MeshSource::File { path, aliases } = &self.mesh {
            must(path, "mesh.file.path")?;
            if let Some(a) = aliases {
                must(a, "mesh.file.aliases")?;
            }
        }
        if let Some(DistSource::File(p)) = &self.uq.dist {
            must(p, "uq.dist")?;
        }
        if let Some(p) = &self.reduced_model {
            must(p, "reduced_model")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = RunConfig::from_json(r#"{"steps": ["solve"]}"#).unwrap();
        assert_eq!(c.mesh, MeshSource::Generate(3));
        assert_eq!(c.rbm, RbmConfig::default());
    }

    #[test]
    fn empty_outputs_are_named() {
        let e = RunConfig::from_json(r#"{"steps": ["solve"], "outputs": []}"#).unwrap_err();
        assert!(e.to_string().contains("outputs"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn field_path_is_reported() {
        let e = RunConfig::from_json(r#"{"steps": ["solve"], "rbm": {"tol": "x"}}"#).unwrap_err();
        assert!(e.to_string().contains("rbm.tol"), "{e}");
        let e = RunConfig::from_json(r#"{"steps": ["solve"], "params": {"T_air": 3}}"#).unwrap_err();
        assert!(e.to_string().contains("params.T_air"), "{e}");
    }

    #[test]
    fn outputs_and_params_forms() {
        let c = RunConfig::from_json(
            r#"{"steps": ["online"], "outputs": ["O", {"name": "P", "point": [0, 0]}, {"name": "m", "region": "lens"}],
                "params": [{"E": 100}, {}]}"#,
        )
        .unwrap();
        assert_eq!(c.outputs.unwrap().len(), 3);
        let ps = c.params.parameters().unwrap();
        assert_eq!(ps[0].e, 100.0);
        assert_eq!(ps[1], Parameter::baseline());
    }
}

//! Forward uncertainty quantification on top of a reduced model:
//! input laws, Monte-Carlo propagation and Sobol indices.

mod dist;
pub mod pce;
mod propagate;
mod sobol;

pub use dist::{sample_marginals, InputDistribution, Marginal};
pub use propagate::{propagate_fn, Histogram, OutputStats, PropagateOptions, PropagationResult};
pub use sobol::{
    convergence_csv, pce_sobol, saltelli_sobol, sobol_convergence, ConvergenceRow, PceOptions, SobolMethod,
    SobolResult, SANITY_DELTA,
};

use crate::error::{Error, Result};
use crate::fem::{Parameter, PARAM_NAMES};
use crate::rbm::ReducedModel;

fn param(x: &[f64]) -> Parameter {
    Parameter::from_array([x[0], x[1], x[2], x[3], x[4], x[5]])
}

pub fn param_names() -> Vec<String> {
    PARAM_NAMES.iter().map(|s| s.to_string()).collect()
}

/// All outputs of the reduced model as a function of the raw parameter vector.
pub fn model_outputs(rm: &ReducedModel) -> impl Fn(&[f64]) -> Result<Vec<f64>> + Sync + '_ {
    move |x| Ok(rm.online_solve(&param(x))?.outputs)
}

/// Output `name` of the reduced model.
pub fn model_output<'a>(rm: &'a ReducedModel, name: &str) -> Result<impl Fn(&[f64]) -> Result<f64> + Sync + 'a> {
    let k = rm
        .output_index(name)
        .ok_or_else(|| Error::Parameter(format!("model has no output `{name}`")))?;
    Ok(move |x: &[f64]| Ok(rm.online_solve(&param(x))?.outputs[k]))
}

pub fn propagate(
    rm: &ReducedModel,
    dist: &InputDistribution,
    n: usize,
    seed: u64,
    opts: &PropagateOptions,
) -> Result<PropagationResult> {
    dist.validate()?;
    propagate_fn(&model_outputs(rm), &rm.output_names, &dist.marginals(), n, seed, opts)
}

pub fn pce_fit(rm: &ReducedModel, output: &str, dist: &InputDistribution, opts: &PceOptions) -> Result<SobolResult> {
    dist.validate()?;
    pce_sobol(&model_output(rm, output)?, &param_names(), &dist.marginals(), opts)
}

pub fn saltelli(
    rm: &ReducedModel,
    output: &str,
    dist: &InputDistribution,
    n_base: usize,
    bootstrap: usize,
    seed: u64,
) -> Result<SobolResult> {
    dist.validate()?;
    saltelli_sobol(&model_output(rm, output)?, &param_names(), &dist.marginals(), n_base, bootstrap, seed)
}

pub fn convergence(
    rm: &ReducedModel,
    output: &str,
    dist: &InputDistribution,
    sizes: &[usize],
    degree: usize,
    seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    dist.validate()?;
    sobol_convergence(&model_output(rm, output)?, &param_names(), &dist.marginals(), sizes, degree, seed)
}

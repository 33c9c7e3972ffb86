use std::fmt::Write as _;

use super::{
    evaluate_output, solve_nonlinear, DiscreteField, NewtonOptions, OutputFunctional, Parameter,
    PhysicalConstants,
};
use crate::error::Result;
use crate::mesh::{Mesh, RegionTable};

#[derive(Debug, Clone, PartialEq)]
pub struct DsaRow {
    pub value: f64,
    /// One entry per output, or the error text of a failed solve.
    pub outputs: std::result::Result<Vec<f64>, String>,
    pub newton_iterations: usize,
}

/// One-at-a-time sweep of a single parameter through the nonlinear model.
#[derive(Debug, Clone, PartialEq)]
pub struct DsaTable {
    pub parameter: String,
    pub output_names: Vec<String>,
    pub rows: Vec<DsaRow>,
}

impl DsaTable {
    pub fn to_csv(&self) -> String {
        let idx = Parameter::index_of(&self.parameter).unwrap_or(0);
        let mut s = format!("{} [{}]", self.parameter, Parameter::unit(idx));
        for n in &self.output_names {
            let _ = write!(s, ",{n} [K]");
        }
        s.push_str(",newton_iterations,status\n");
        for r in &self.rows {
            let _ = write!(s, "{}", r.value);
            match &r.outputs {
                Ok(v) => {
                    for x in v {
                        let _ = write!(s, ",{x}");
                    }
                    let _ = writeln!(s, ",{},ok", r.newton_iterations);
                }
                Err(e) => {
                    s.push_str(&",".repeat(self.output_names.len()));
                    let _ = writeln!(s, ",,failed: {}", e.replace([',', '\n'], ";"));
                }
            }
        }
        s
    }
}

/// Substitutes each value into `baseline`, solves the nonlinear model and
/// records every output. Failed rows are kept and marked.
#[allow(clippy::too_many_arguments)]
pub fn dsa_sweep(
    mesh: &Mesh,
    regions: &RegionTable,
    consts: &PhysicalConstants,
    name: &str,
    values: &[f64],
    baseline: &Parameter,
    outputs: &[OutputFunctional],
    opts: &NewtonOptions,
) -> Result<DsaTable> {
    Parameter::index_of(name)?;
    let rows = values
        .iter()
        .map(|&value| {
            let run = || -> Result<(Vec<f64>, usize)> {
                let mu = baseline.with(name, value)?;
                let init = DiscreteField::constant(mesh, mu.t_bl);
                let (t, log) = solve_nonlinear(mesh, regions, consts, &mu, &init, opts)?;
                let v = outputs
                    .iter()
                    .map(|o| evaluate_output(&t, o))
                    .collect::<Result<Vec<_>>>()?;
                Ok((v, log.iterations()))
            };
            match run() {
                Ok((v, it)) => DsaRow {
                    value,
                    outputs: Ok(v),
                    newton_iterations: it,
                },
                Err(e) => DsaRow {
                    value,
                    outputs: Err(e.to_string()),
                    newton_iterations: 0,
                },
            }
        })
        .collect();
    Ok(DsaTable {
        parameter: name.to_string(),
        output_names: outputs.iter().map(|o| o.name.clone()).collect(),
        rows,
    })
}

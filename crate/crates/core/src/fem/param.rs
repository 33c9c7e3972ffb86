use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Component names, in vector order.
pub const PARAM_NAMES: [&str; 6] = ["T_amb", "T_bl", "h_amb", "h_bl", "E", "k_lens"];

const UNITS: [&str; 6] = ["K", "K", "W/m^2/K", "W/m^2/K", "W/m^2", "W/m/K"];

/// Admissible box for each component.
const DOMAIN: [(f64, f64); 6] = [
    (283.15, 303.15),
    (308.0, 312.0),
    (8.0, 100.0),
    (50.0, 110.0),
    (20.0, 320.0),
    (0.21, 0.544),
];

/// Physical parameters of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameter {
    /// Ambient temperature (K).
    #[serde(rename = "T_amb")]
    pub t_amb: f64,
    /// Blood temperature (K).
    #[serde(rename = "T_bl")]
    pub t_bl: f64,
    /// Ambient convection coefficient.
    pub h_amb: f64,
    /// Blood convection coefficient.
    pub h_bl: f64,
    /// Evaporation heat flux (W/m^2).
    #[serde(rename = "E")]
    pub e: f64,
    /// Lens conductivity.
    pub k_lens: f64,
}

impl Default for Parameter {
    fn default() -> Self {
        Self::baseline()
    }
}

impl Parameter {
    pub fn baseline() -> Self {
        Self {
            t_amb: 298.0,
            t_bl: 310.0,
            h_amb: 10.0,
            h_bl: 65.0,
            e: 40.0,
            k_lens: 0.4,
        }
    }

    /// Builds a parameter inside the admissible box.
    pub fn new(v: [f64; 6]) -> Result<Self> {
        let p = Self::from_array(v);
        p.check_domain()?;
        Ok(p)
    }

    /// Builds a parameter that may leave the admissible box; only physical
    /// sanity is checked (finite, positive temperatures, nonnegative
    /// coefficients).
    pub fn relaxed(v: [f64; 6]) -> Result<Self> {
        let p = Self::from_array(v);
        p.check_relaxed()?;
        Ok(p)
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        Self {
            t_amb: v[0],
            t_bl: v[1],
            h_amb: v[2],
            h_bl: v[3],
            e: v[4],
            k_lens: v[5],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.t_amb, self.t_bl, self.h_amb, self.h_bl, self.e, self.k_lens]
    }

    pub fn domain() -> [(f64, f64); 6] {
        DOMAIN
    }

    pub fn unit(index: usize) -> &'static str {
        UNITS[index]
    }

    pub fn index_of(name: &str) -> Result<usize> {
        PARAM_NAMES
            .iter()
            .position(|&n| n == name)
            .ok_or_else(|| {
                Error::Parameter(format!(
                    "unknown parameter `{name}` (expected one of {})",
                    PARAM_NAMES.join(", ")
                ))
            })
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        Ok(self.to_array()[Self::index_of(name)?])
    }

    /// Copy with one component replaced; relaxed bounds apply.
    pub fn with(&self, name: &str, value: f64) -> Result<Self> {
        let mut v = self.to_array();
        v[Self::index_of(name)?] = value;
        Self::relaxed(v)
    }

    pub fn check_relaxed(&self) -> Result<()> {
        let v = self.to_array();
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::Parameter(format!("{} is not finite", PARAM_NAMES[i])));
        }
        for i in [0, 1] {
            if v[i] <= 0.0 {
                return Err(Error::Parameter(format!("{} must be > 0 K", PARAM_NAMES[i])));
            }
        }
        for i in [2, 3, 5] {
            if v[i] < 0.0 {
                return Err(Error::Parameter(format!("{} must be >= 0", PARAM_NAMES[i])));
            }
        }
        Ok(())
    }

    pub fn check_domain(&self) -> Result<()> {
        self.check_relaxed()?;
        for (i, (&x, &(lo, hi))) in self.to_array().iter().zip(&DOMAIN).enumerate() {
            if x < lo || x > hi {
                return Err(Error::Parameter(format!(
                    "{} = {x} outside [{lo}, {hi}]",
                    PARAM_NAMES[i]
                )));
            }
        }
        Ok(())
    }

    pub fn in_domain(&self) -> bool {
        self.check_domain().is_ok()
    }
}

/// Radiation constants and the linearized exchange coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Stefan-Boltzmann constant.
    pub sigma: f64,
    /// Emissivity of the exposed surface.
    pub epsilon: f64,
    /// Radiative exchange coefficient of the linearized model.
    pub h_r: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            sigma: 5.67e-8,
            epsilon: 0.975,
            h_r: 6.0,
        }
    }
}

impl PhysicalConstants {
    pub fn with_hr(mut self, h_r: f64) -> Self {
        self.h_r = h_r;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Parameter(format!("emissivity {} outside [0, 1]", self.epsilon)));
        }
        if !(self.h_r >= 0.0 && self.h_r.is_finite()) {
            return Err(Error::Parameter(format!("h_r = {} must be >= 0", self.h_r)));
        }
        Ok(())
    }
}

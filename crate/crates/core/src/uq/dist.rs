use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::fem::{Parameter, PARAM_NAMES};

/// One-dimensional input law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Marginal {
    Uniform { lo: f64, hi: f64 },
    /// `shift + exp(N(mu_log, sigma_log²))` conditioned on `[lo, hi]`.
    ShiftedLognormal {
        mu_log: f64,
        sigma_log: f64,
        shift: f64,
        lo: f64,
        hi: f64,
    },
    Constant { value: f64 },
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

impl Marginal {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Distribution(m));
        match *self {
            Marginal::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return bad(format!("uniform needs finite lo < hi, got [{lo}, {hi}]"));
                }
            }
            Marginal::ShiftedLognormal {
                mu_log,
                sigma_log,
                shift,
                lo,
                hi,
            } => {
                if !(mu_log.is_finite() && shift.is_finite() && sigma_log > 0.0 && sigma_log.is_finite()) {
                    return bad("lognormal needs finite mu_log, shift and sigma_log > 0".into());
                }
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return bad(format!("lognormal needs finite lo < hi, got [{lo}, {hi}]"));
                }
                if !(self.raw_cdf(hi) - self.raw_cdf(lo) > 0.0) {
                    return bad(format!("truncation interval [{lo}, {hi}] has no probability mass"));
                }
            }
            Marginal::Constant { value } => {
                if !value.is_finite() {
                    return bad("constant must be finite".into());
                }
            }
        }
        Ok(())
    }

    /// Untruncated CDF of the lognormal part.
    fn raw_cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::ShiftedLognormal {
                mu_log,
                sigma_log,
                shift,
                ..
            } => {
                if x <= shift {
                    0.0
                } else {
                    std_normal().cdf(((x - shift).ln() - mu_log) / sigma_log)
                }
            }
            _ => unreachable!(),
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Marginal::Uniform { lo, hi } | Marginal::ShiftedLognormal { lo, hi, .. } => (lo, hi),
            Marginal::Constant { value } => (value, value),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Marginal::Constant { .. })
    }

    /// CDF of the (truncated) law.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Marginal::ShiftedLognormal { lo, hi, .. } => {
                let (a, b) = (self.raw_cdf(lo), self.raw_cdf(hi));
                ((self.raw_cdf(x.clamp(lo, hi)) - a) / (b - a)).clamp(0.0, 1.0)
            }
            Marginal::Constant { value } => {
                if x < value {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Quantile function; `u` in `[0, 1]`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => lo + u * (hi - lo),
            Marginal::ShiftedLognormal {
                mu_log,
                sigma_log,
                shift,
                lo,
                hi,
            } => {
                let (a, b) = (self.raw_cdf(lo), self.raw_cdf(hi));
                let p = (a + u * (b - a)).clamp(0.0, 1.0);
                let z = std_normal().inverse_cdf(p);
                (shift + (mu_log + sigma_log * z).exp()).clamp(lo, hi)
            }
            Marginal::Constant { value } => value,
        }
    }

    /// Density of the truncated law.
    pub fn pdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.bounds();
        if x < lo || x > hi {
            return 0.0;
        }
        match *self {
            Marginal::Uniform { lo, hi } => 1.0 / (hi - lo),
            Marginal::ShiftedLognormal {
                mu_log,
                sigma_log,
                shift,
                lo,
                hi,
            } => {
                if x <= shift {
                    return 0.0;
                }
                let z = ((x - shift).ln() - mu_log) / sigma_log;
                let raw = (-0.5 * z * z).exp()
                    / ((x - shift) * sigma_log * (2.0 * std::f64::consts::PI).sqrt());
                raw / (self.raw_cdf(hi) - self.raw_cdf(lo))
            }
            Marginal::Constant { .. } => f64::INFINITY,
        }
    }
}

/// Draws `n` rows of independent components by inversion. Every component
/// consumes one uniform per row, constants included, so streams stay aligned.
pub fn sample_marginals(marginals: &[Marginal], n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            marginals
                .iter()
                .map(|m| m.inverse_cdf(rng.gen::<f64>()))
                .collect()
        })
        .collect()
}

/// Joint law of the six model parameters, independent components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDistribution {
    #[serde(rename = "T_amb")]
    pub t_amb: Marginal,
    #[serde(rename = "T_bl")]
    pub t_bl: Marginal,
    pub h_amb: Marginal,
    pub h_bl: Marginal,
    #[serde(rename = "E")]
    pub e: Marginal,
    pub k_lens: Marginal,
}

impl InputDistribution {
    /// Reference input laws: uniform temperatures and lens conductivity,
    /// shifted lognormal heat transfer and evaporation.
    pub fn reference() -> Self {
        Self {
            t_amb: Marginal::Uniform {
                lo: 283.15,
                hi: 303.15,
            },
            t_bl: Marginal::Uniform { lo: 308.0, hi: 312.15 },
            h_amb: Marginal::ShiftedLognormal {
                mu_log: 10f64.ln() - 0.5,
                sigma_log: 1.0,
                shift: 8.0,
                lo: 8.0,
                hi: 100.0,
            },
            h_bl: Marginal::ShiftedLognormal {
                mu_log: 65f64.ln() - 0.15 * 0.15 / 2.0,
                sigma_log: 0.15,
                shift: 0.0,
                lo: 50.0,
                hi: 120.0,
            },
            e: Marginal::ShiftedLognormal {
                mu_log: 40f64.ln() - 0.7 * 0.7 / 2.0,
                sigma_log: 0.7,
                shift: 20.0,
                lo: 20.0,
                hi: 130.0,
            },
            k_lens: Marginal::Uniform { lo: 0.21, hi: 0.544 },
        }
    }

    /// Point mass at `mu`.
    pub fn constant(mu: &Parameter) -> Self {
        Self::from_marginals(mu.to_array().map(|value| Marginal::Constant { value }))
    }

    pub fn from_marginals(m: [Marginal; 6]) -> Self {
        Self {
            t_amb: m[0],
            t_bl: m[1],
            h_amb: m[2],
            h_bl: m[3],
            e: m[4],
            k_lens: m[5],
        }
    }

    /// Components in parameter order.
    pub fn marginals(&self) -> [Marginal; 6] {
        [self.t_amb, self.t_bl, self.h_amb, self.h_bl, self.e, self.k_lens]
    }

    pub fn validate(&self) -> Result<()> {
        for (m, name) in self.marginals().iter().zip(PARAM_NAMES) {
            m.validate()
                .map_err(|e| Error::Distribution(format!("{name}: {e}")))?;
            let (lo, _) = m.bounds();
            let positive = !matches!(name, "E");
            if positive && lo <= 0.0 {
                return Err(Error::Distribution(format!("{name}: support must be positive")));
            }
        }
        Ok(())
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<Parameter> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample_marginals(&self.marginals(), n, &mut rng)
            .into_iter()
            .map(|r| Parameter::from_array([r[0], r[1], r[2], r[3], r[4], r[5]]))
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(text)?;
        d.validate()?;
        Ok(d)
    }
}

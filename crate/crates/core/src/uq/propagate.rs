use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::dist::{sample_marginals, Marginal};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins over `[min, max]`; a single bin if all values coincide.
    pub fn new(values: &[f64], bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() {
            return Self {
                edges: Vec::new(),
                counts: Vec::new(),
            };
        }
        if lo == hi || bins <= 1 {
            return Self {
                edges: vec![lo, hi],
                counts: vec![values.len()],
            };
        }
        let w = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * w).collect();
        edges.push(hi);
        let mut counts = vec![0; bins];
        for &v in values {
            let i = (((v - lo) / w) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Self { edges, counts }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputStats {
    pub name: String,
    pub mean: f64,
    /// Unbiased sample standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub histogram: Histogram,
}

impl OutputStats {
    fn new(name: &str, v: &[f64], bins: usize) -> Self {
        let n = v.len();
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = if min == max { min } else { v.iter().sum::<f64>() / n as f64 };
        let std = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            name: name.to_string(),
            mean,
            std,
            min,
            max,
            histogram: Histogram::new(v, bins),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropagationResult {
    /// Requested number of samples.
    pub requested: usize,
    /// Evaluations that succeeded and enter the statistics.
    pub n: usize,
    pub failed: usize,
    /// First failure message, if any.
    pub first_error: Option<String>,
    pub outputs: Vec<OutputStats>,
    /// Successful output rows, in sample order, when kept.
    #[serde(skip)]
    pub samples: Option<Vec<Vec<f64>>>,
    pub seconds: f64,
}

impl PropagationResult {
    pub fn stats_csv(&self) -> String {
        let mut s = String::from("output,n,failed,mean [K],std [K],min [K],max [K]\n");
        for o in &self.outputs {
            writeln!(s, "{},{},{},{},{},{},{}", o.name, self.n, self.failed, o.mean, o.std, o.min, o.max).unwrap();
        }
        s
    }

    pub fn histogram_csv(&self) -> String {
        let mut s = String::from("output,bin_lo [K],bin_hi [K],count\n");
        for o in &self.outputs {
            let h = &o.histogram;
            for (i, c) in h.counts.iter().enumerate() {
                writeln!(s, "{},{},{},{}", o.name, h.edges[i], h.edges[i + 1], c).unwrap();
            }
        }
        s
    }

    pub fn output(&self, name: &str) -> Option<&OutputStats> {
        self.outputs.iter().find(|o| o.name == name)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PropagateOptions {
    pub bins: usize,
    pub keep_samples: bool,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self {
            bins: 40,
            keep_samples: false,
        }
    }
}

/// Monte-Carlo propagation of `n` seeded draws through a vector-valued map.
/// Failed evaluations are counted and left out of the statistics.
pub fn propagate_fn<F>(
    f: &F,
    output_names: &[String],
    marginals: &[Marginal],
    n: usize,
    seed: u64,
    opts: &PropagateOptions,
) -> Result<PropagationResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = sample_marginals(marginals, n, &mut rng);
    let ys: Vec<Result<Vec<f64>>> = xs.par_iter().map(|x| f(x)).collect();
    let mut ok = Vec::with_capacity(n);
    let mut failed = 0;
    let mut first_error = None;
    for y in ys {
        match y {
            Ok(v) => ok.push(v),
            Err(e) => {
                failed += 1;
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let outputs = output_names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let col: Vec<f64> = ok.iter().map(|r| r[k]).collect();
            OutputStats::new(name, &col, opts.bins)
        })
        .collect();
    Ok(PropagationResult {
        requested: n,
        n: ok.len(),
        failed,
        first_error,
        outputs,
        samples: opts.keep_samples.then_some(ok),
        seconds: t0.elapsed().as_secs_f64(),
    })
}

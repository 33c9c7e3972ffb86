use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::dist::{sample_marginals, Marginal};
use super::pce::{design, q2, sobol_from_coeffs, total_degree_indices, Pce};
use crate::error::{Error, Result};

/// Noise allowance for the index sanity checks.
pub const SANITY_DELTA: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SobolMethod {
    Pce,
    Saltelli,
}

impl SobolMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SobolMethod::Pce => "pce",
            SobolMethod::Saltelli => "saltelli",
        }
    }
}

/// First-order and total indices with percentile bootstrap intervals.
#[derive(Debug, Clone, Serialize)]
pub struct SobolResult {
    pub method: SobolMethod,
    pub inputs: Vec<String>,
    pub first: Vec<f64>,
    pub total: Vec<f64>,
    pub first_ci: Vec<(f64, f64)>,
    pub total_ci: Vec<(f64, f64)>,
    pub q2: Option<f64>,
    pub degree: Option<usize>,
    /// Regression size for the chaos fit, base size for pick-freeze.
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// The output did not vary; all indices are reported as zero.
    pub degenerate: bool,
}

impl SobolResult {
    /// Violations of the sanity bounds, empty when all hold.
    pub fn sanity_violations(&self) -> Vec<String> {
        let d = SANITY_DELTA;
        let mut v = Vec::new();
        for (i, name) in self.inputs.iter().enumerate() {
            let (s, t) = (self.first[i], self.total[i]);
            if s < -d {
                v.push(format!("S({name}) = {s:.4} < -{d}"));
            }
            if s > t + d {
                v.push(format!("S({name}) = {s:.4} exceeds S_tot = {t:.4}"));
            }
            if t > 1.0 + d {
                v.push(format!("S_tot({name}) = {t:.4} > 1"));
            }
        }
        let sum: f64 = self.first.iter().sum();
        if sum > 1.0 + 2.5 * d {
            v.push(format!("sum of first-order indices {sum:.4} > 1"));
        }
        v
    }

    pub fn csv_header() -> &'static str {
        "output,input,S [-],S_lo [-],S_hi [-],S_tot [-],S_tot_lo [-],S_tot_hi [-],q2 [-],degree,n,method,degenerate"
    }

    /// Rows for `output`, without the header.
    pub fn csv_rows(&self, output: &str) -> String {
        let mut s = String::new();
        let q2 = self.q2.map_or(String::new(), |q| format!("{q}"));
        let deg = self.degree.map_or(String::new(), |d| d.to_string());
        for i in 0..self.inputs.len() {
            writeln!(
                s,
                "{output},{},{},{},{},{},{},{},{q2},{deg},{},{},{}",
                self.inputs[i],
                self.first[i],
                self.first_ci[i].0,
                self.first_ci[i].1,
                self.total[i],
                self.total_ci[i].0,
                self.total_ci[i].1,
                self.n,
                self.method.as_str(),
                self.degenerate
            )
            .unwrap();
        }
        s
    }

    pub fn to_csv(&self, output: &str) -> String {
        format!("{}\n{}", Self::csv_header(), self.csv_rows(output))
    }

    pub fn index_of(&self, input: &str) -> Option<usize> {
        self.inputs.iter().position(|n| n == input)
    }
}

/// Linear-interpolated percentile of sorted data, `q` in `[0, 1]`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    }
}

/// 95 % percentile intervals of each column of bootstrap replicates.
fn intervals(reps: &[Vec<f64>], d: usize, point: &[f64]) -> Vec<(f64, f64)> {
    (0..d)
        .map(|i| {
            if reps.is_empty() {
                return (point[i], point[i]);
            }
            let mut col: Vec<f64> = reps.iter().map(|r| r[i]).collect();
            col.sort_by(f64::total_cmp);
            (percentile(&col, 0.025), percentile(&col, 0.975))
        })
        .collect()
}

fn bootstrap_counts(rng: &mut ChaCha8Rng, n: usize, reps: usize) -> Vec<Vec<u32>> {
    (0..reps)
        .map(|_| {
            let mut c = vec![0u32; n];
            for _ in 0..n {
                c[rng.gen_range(0..n)] += 1;
            }
            c
        })
        .collect()
}

fn mean_var(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    (mean, y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n)
}

/// Variance this small relative to the mean is treated as zero.
fn is_degenerate(mean: f64, var: f64) -> bool {
    var <= 1e-24 * mean.abs().max(1.0).powi(2)
}

fn evaluate<F>(f: &F, xs: &[Vec<f64>]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    xs.par_iter().map(|x| f(x)).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct PceOptions {
    pub n_param: usize,
    pub degree: usize,
    pub bootstrap: usize,
    pub seed: u64,
}

impl Default for PceOptions {
    fn default() -> Self {
        Self {
            n_param: 200,
            degree: 3,
            bootstrap: 500,
            seed: 0,
        }
    }
}

/// Sobol indices from a chaos regression fitted on `n_param` samples, with
/// `n_param / 2` further samples held out for Q2. Constant inputs are left
/// out of the basis and get zero indices.
pub fn pce_sobol<F>(f: &F, names: &[String], marginals: &[Marginal], opts: &PceOptions) -> Result<SobolResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let d = marginals.len();
    if names.len() != d {
        return Err(Error::Distribution("one name per input is required".into()));
    }
    let active: Vec<usize> = (0..d).filter(|&i| !marginals[i].is_constant()).collect();
    let terms = total_degree_indices(active.len(), opts.degree).len();
    if opts.n_param < 2 * terms {
        return Err(Error::Parameter(format!(
            "n_param = {} is below 2 x {terms} basis terms for degree {}; increase n_param or lower the degree",
            opts.n_param, opts.degree
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let train = sample_marginals(marginals, opts.n_param, &mut rng);
    let hold = sample_marginals(marginals, (opts.n_param / 2).max(1), &mut rng);
    let y = evaluate(f, &train)?;
    let y_hold = evaluate(f, &hold)?;
    let to_ref = |x: &Vec<f64>| -> Vec<f64> {
        active.iter().map(|&i| 2.0 * marginals[i].cdf(x[i]) - 1.0).collect()
    };
    let xi: Vec<Vec<f64>> = train.iter().map(to_ref).collect();
    let xi_hold: Vec<Vec<f64>> = hold.iter().map(to_ref).collect();

    let (mean, var) = mean_var(&y);
    let mut res = SobolResult {
        method: SobolMethod::Pce,
        inputs: names.to_vec(),
        first: vec![0.0; d],
        total: vec![0.0; d],
        first_ci: vec![(0.0, 0.0); d],
        total_ci: vec![(0.0, 0.0); d],
        q2: None,
        degree: Some(opts.degree),
        n: opts.n_param,
        mean,
        variance: var,
        degenerate: true,
    };
    if active.is_empty() || is_degenerate(mean, var) {
        res.q2 = Some(1.0);
        return Ok(res);
    }
    let pce = Pce::fit(&xi, &y, opts.degree)?;
    res.q2 = Some(q2(&pce, &xi_hold, &y_hold));
    res.mean = pce.mean();
    res.variance = pce.variance();
    res.degenerate = false;
    let (s, t) = pce.sobol();

    let mut brng = ChaCha8Rng::seed_from_u64(opts.seed);
    brng.set_stream(1);
    let counts = bootstrap_counts(&mut brng, opts.n_param, opts.bootstrap);
    let psi = design(&xi, &pce.indices, opts.degree);
    let yv = DVector::from_column_slice(&y);
    let reps: Vec<Vec<f64>> = counts
        .par_iter()
        .filter_map(|c| {
            // rows drawn zero times drop out of the weighted normal equations
            let drawn: Vec<usize> = (0..c.len()).filter(|&r| c[r] > 0).collect();
            let mut pw = psi.select_rows(&drawn);
            let mut yw = yv.select_rows(&drawn);
            for (i, &r) in drawn.iter().enumerate() {
                let w = (c[r] as f64).sqrt();
                pw.row_mut(i).scale_mut(w);
                yw[i] *= w;
            }
            let gram = pw.tr_mul(&pw);
            let rhs = pw.tr_mul(&yw);
            let coeffs = gram.cholesky()?.solve(&rhs);
            let (bs, bt) = sobol_from_coeffs(&pce.indices, coeffs.as_slice());
            Some(bs.into_iter().chain(bt).collect())
        })
        .collect();
    let k = active.len();
    let point: Vec<f64> = s.iter().chain(&t).copied().collect();
    let ci = intervals(&reps, 2 * k, &point);
    for (j, &i) in active.iter().enumerate() {
        res.first[i] = s[j];
        res.total[i] = t[j];
        res.first_ci[i] = ci[j];
        res.total_ci[i] = ci[k + j];
    }
    Ok(res)
}

/// Jansen estimators on `n` base rows: returns `(S, S_tot)` and the variance.
fn jansen(fa: &[f64], fb: &[f64], fab: &[Vec<f64>], rows: &[usize]) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let n = rows.len() as f64;
    let all: Vec<f64> = rows.iter().flat_map(|&r| [fa[r], fb[r]]).collect();
    let (mean, var) = mean_var(&all);
    if is_degenerate(mean, var) {
        return (vec![0.0; fab.len()], vec![0.0; fab.len()], mean, var);
    }
    let mut s = Vec::with_capacity(fab.len());
    let mut t = Vec::with_capacity(fab.len());
    for g in fab {
        if g.is_empty() {
            s.push(0.0);
            t.push(0.0);
            continue;
        }
        let dt: f64 = rows.iter().map(|&r| (fa[r] - g[r]).powi(2)).sum::<f64>() / (2.0 * n);
        let ds: f64 = rows.iter().map(|&r| (fb[r] - g[r]).powi(2)).sum::<f64>() / (2.0 * n);
        t.push(dt / var);
        s.push(1.0 - ds / var);
    }
    (s, t, mean, var)
}

/// Pick-freeze estimate with base matrices `A`, `B` and one hybrid per
/// non-constant input (`A` with column `i` taken from `B`).
pub fn saltelli_sobol<F>(
    f: &F,
    names: &[String],
    marginals: &[Marginal],
    n_base: usize,
    bootstrap: usize,
    seed: u64,
) -> Result<SobolResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let d = marginals.len();
    if names.len() != d {
        return Err(Error::Distribution("one name per input is required".into()));
    }
    if n_base < 100 {
        return Err(Error::Parameter(format!("n_base = {n_base} is below 100")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = sample_marginals(marginals, n_base, &mut rng);
    let b = sample_marginals(marginals, n_base, &mut rng);
    let fa = evaluate(f, &a)?;
    let fb = evaluate(f, &b)?;
    let fab: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            if marginals[i].is_constant() {
                return Ok(Vec::new());
            }
            let ab: Vec<Vec<f64>> = a
                .iter()
                .zip(&b)
                .map(|(ra, rb)| {
                    let mut r = ra.clone();
                    r[i] = rb[i];
                    r
                })
                .collect();
            evaluate(f, &ab)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<usize> = (0..n_base).collect();
    let (s, t, mean, var) = jansen(&fa, &fb, &fab, &rows);
    let degenerate = is_degenerate(mean, var);

    let mut brng = ChaCha8Rng::seed_from_u64(seed);
    brng.set_stream(1);
    let resamples: Vec<Vec<usize>> = if degenerate {
        Vec::new()
    } else {
        (0..bootstrap)
            .map(|_| (0..n_base).map(|_| brng.gen_range(0..n_base)).collect())
            .collect()
    };
    let reps: Vec<Vec<f64>> = resamples
        .par_iter()
        .map(|r| {
            let (bs, bt, _, _) = jansen(&fa, &fb, &fab, r);
            bs.into_iter().chain(bt).collect()
        })
        .collect();
    let point: Vec<f64> = s.iter().chain(&t).copied().collect();
    let ci = intervals(&reps, 2 * d, &point);
    Ok(SobolResult {
        method: SobolMethod::Saltelli,
        inputs: names.to_vec(),
        first: s,
        total: t,
        first_ci: ci[..d].to_vec(),
        total_ci: ci[d..].to_vec(),
        q2: None,
        degree: None,
        n: n_base,
        mean,
        variance: var,
        degenerate,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n_param: usize,
    pub q2: f64,
    /// Largest deviation of any index from the reference (largest) size.
    pub max_deviation: f64,
    pub seconds: f64,
    pub result: SobolResult,
}

/// Chaos fits at increasing sizes, compared against the largest one.
pub fn sobol_convergence<F>(
    f: &F,
    names: &[String],
    marginals: &[Marginal],
    sizes: &[usize],
    degree: usize,
    seed: u64,
) -> Result<Vec<ConvergenceRow>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("sizes must be non-empty and strictly increasing".into()));
    }
    let mut rows = Vec::new();
    for &n in sizes {
        let t0 = Instant::now();
        let opts = PceOptions {
            n_param: n,
            degree,
            bootstrap: 0,
            seed,
        };
        let result = pce_sobol(f, names, marginals, &opts)?;
        rows.push(ConvergenceRow {
            n_param: n,
            q2: result.q2.unwrap_or(f64::NAN),
            max_deviation: 0.0,
            seconds: t0.elapsed().as_secs_f64(),
            result,
        });
    }
    let reference = rows.last().unwrap().result.clone();
    for r in &mut rows {
        r.max_deviation = r
            .result
            .first
            .iter()
            .chain(&r.result.total)
            .zip(reference.first.iter().chain(&reference.total))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
    }
    Ok(rows)
}

/// Convergence table; timings are only written when asked for, so the
/// default output is reproducible byte for byte.
pub fn convergence_csv(rows: &[ConvergenceRow], timings: bool) -> String {
    let mut s = String::from("n_param,q2 [-],max_deviation [-]");
    if timings {
        s.push_str(",t_exec [s]");
    }
    s.push('\n');
    for r in rows {
        write!(s, "{},{},{}", r.n_param, r.q2, r.max_deviation).unwrap();
        if timings {
            write!(s, ",{}", r.seconds).unwrap();
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(d: usize) -> Vec<String> {
        (1..=d).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn linear_single_variable_is_exact() {
        let m = [Marginal::Uniform { lo: 0.0, hi: 2.0 }, Marginal::Uniform { lo: -1.0, hi: 1.0 }];
        let opts = PceOptions {
            n_param: 40,
            degree: 2,
            bootstrap: 20,
            seed: 1,
        };
        let r = pce_sobol(&|x: &[f64]| Ok(3.0 * x[0]), &names(2), &m, &opts).unwrap();
        assert!((r.first[0] - 1.0).abs() < 1e-10 && (r.total[0] - 1.0).abs() < 1e-10);
        assert!(r.first[1].abs() < 1e-10 && r.total[1].abs() < 1e-10);
        assert!(r.q2.unwrap() > 1.0 - 1e-10);
    }

    #[test]
    fn constant_output_is_flagged() {
        let m = [Marginal::Uniform { lo: 0.0, hi: 1.0 }; 2];
        let r = saltelli_sobol(&|_: &[f64]| Ok(5.0), &names(2), &m, 100, 10, 0).unwrap();
        assert!(r.degenerate);
        assert!(r.first.iter().chain(&r.total).all(|&v| v == 0.0));
        let p = pce_sobol(&|_: &[f64]| Ok(5.0), &names(2), &m, &PceOptions { n_param: 20, degree: 1, ..Default::default() }).unwrap();
        assert!(p.degenerate);
    }

    #[test]
    fn additive_saltelli() {
        let m = [
            Marginal::Uniform { lo: 0.0, hi: 1.0 },
            Marginal::Uniform { lo: 0.0, hi: 2.0 },
            Marginal::Uniform { lo: -1.0, hi: 1.0 },
        ];
        let c = [1.0, 1.0, 0.5];
        let vars: Vec<f64> = m.iter().map(|m| (m.bounds().1 - m.bounds().0).powi(2) / 12.0).collect();
        let tot: f64 = (0..3).map(|i| c[i] * c[i] * vars[i]).sum();
        let f = |x: &[f64]| Ok(c[0] * x[0] + c[1] * x[1] + c[2] * x[2]);
        let r = saltelli_sobol(&f, &names(3), &m, 10_000, 50, 4).unwrap();
        for i in 0..3 {
            let want = c[i] * c[i] * vars[i] / tot;
            assert!((r.first[i] - want).abs() < 0.03, "{i}: {} vs {want}", r.first[i]);
            assert!((r.total[i] - want).abs() < 0.03);
            assert!(r.first_ci[i].0 <= r.first_ci[i].1);
        }
        assert!(r.sanity_violations().is_empty());
    }

    #[test]
    fn convergence_reference_row_is_zero() {
        let m = [Marginal::Uniform { lo: 0.0, hi: 1.0 }; 2];
        let f = |x: &[f64]| Ok(x[0] + x[1] * x[1]);
        let rows = sobol_convergence(&f, &names(2), &m, &[20, 40, 80], 2, 3).unwrap();
        assert_eq!(rows[2].max_deviation, 0.0);
        assert!(rows.iter().all(|r| r.max_deviation < 1e-8));
        assert!(sobol_convergence(&f, &names(2), &m, &[40, 20], 2, 3).is_err());
        assert!(!convergence_csv(&rows, false).contains("t_exec"));
    }
}

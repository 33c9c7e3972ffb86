use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fem::Parameter;

/// Components sampled on a log scale: h_amb, h_bl, E, k_lens.
const LOG_SCALE: [bool; 6] = [false, false, true, true, true, true];

/// Random training set over the parameter domain, reproducible from `seed`.
/// Temperatures are uniform, the remaining components log-uniform.
pub fn training_set(n: usize, seed: u64) -> Vec<Parameter> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = Parameter::domain();
    (0..n)
        .map(|_| {
            let mut v = [0.0; 6];
            for (i, (lo, hi)) in domain.iter().enumerate() {
                let u: f64 = rng.gen();
                v[i] = if LOG_SCALE[i] {
                    (lo.ln() + u * (hi.ln() - lo.ln())).exp()
                } else {
                    lo + u * (hi - lo)
                }
                .clamp(*lo, *hi);
            }
            Parameter::from_array(v)
        })
        .collect()
}

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{map_chunks, Moments};

/// Prior over option values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "distribution", rename_all = "snake_case")]
pub enum PriorSpec {
    #[default]
    Uniform01,
    Normal {
        mean: f64,
        sd: f64,
    },
}

/// Draws used for priors without a closed form.
const MC_DRAWS: usize = 200_000;
const MC_SEED: u64 = 0x0DE5_7A75;

impl PriorSpec {
    pub fn mean(&self) -> f64 {
        match *self {
            PriorSpec::Uniform01 => 0.5,
            PriorSpec::Normal { mean, .. } => mean,
        }
    }
}

/// Expected value of the k-th best of N prior draws, k = 1..=N.
///
/// Closed form for the uniform prior; otherwise Monte Carlo with a fixed seed
/// and antithetic pairs, which makes the table exactly symmetric about the
/// prior mean.
pub fn order_stat_means(n: usize, prior: &PriorSpec) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Invalid("order statistics need N >= 1".into()));
    }
    match *prior {
        PriorSpec::Uniform01 => Ok((1..=n)
            .map(|k| (n + 1 - k) as f64 / (n + 1) as f64)
            .collect()),
        PriorSpec::Normal { mean, sd } => {
            if !(sd.is_finite() && sd > 0.0 && mean.is_finite()) {
                return Err(Error::OutOfRange(format!(
                    "normal prior needs finite mean and sd > 0, got ({mean}, {sd})"
                )));
            }
            let parts = map_chunks(MC_DRAWS / 2, MC_SEED, |rng, m| {
                let mut acc = vec![Moments::default(); n];
                let mut z = vec![0.0f64; n];
                for _ in 0..m {
                    for v in z.iter_mut() {
                        *v = rng.sample(StandardNormal);
                    }
                    z.sort_by(|a, b| b.total_cmp(a));
                    for k in 0..n {
                        acc[k].push(z[k]);
                        // Antithetic draw −z sorted descending is −z reversed.
                        acc[k].push(-z[n - 1 - k]);
                    }
                }
                acc
            });
            let mut total = vec![Moments::default(); n];
            for p in &parts {
                for (t, m) in total.iter_mut().zip(p) {
                    t.merge(m);
                }
            }
            Ok(total.iter().map(|m| mean + sd * m.mean()).collect())
        }
    }
}

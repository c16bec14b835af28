use serde::{Deserialize, Serialize};

use super::data::PredictionRule;
use super::fit::{fit_targets, FitConfig, FitSpec};
use super::loss::{expected_kl, Loss};
use crate::domain::Alternative;
use crate::error::{invalid, Error, Result};
use crate::par::{derive_seed, map_indexed};

/// Reference predictor in the restrictiveness denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaseModel {
    /// A rule fixed in advance, e.g. the mean choice rate of observed data.
    Fixed { rule: PredictionRule },
    /// A family refit to each synthetic rule like the model under test.
    Family { spec: FitSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Restrictiveness {
    pub value: f64,
    /// Delta-method standard error of the ratio of means.
    pub se: f64,
    /// Per synthetic rule: best-fit divergence of the family.
    pub model_divergence: Vec<f64>,
    /// Per synthetic rule: divergence of the base model.
    pub base_divergence: Vec<f64>,
}

/// Mean best-fit divergence of `family` over synthetic rules relative to
/// the base model's mean divergence. Refits use the KL loss; refit `k`
/// uses a seed derived from `cfg.seed` and `k`.
pub fn restrictiveness_index(
    family: &FitSpec,
    base: &BaseModel,
    problems: &[(Alternative, Alternative)],
    weights: &[f64],
    synthetic: &[PredictionRule],
    cfg: &FitConfig,
) -> Result<Restrictiveness> {
    if synthetic.is_empty() {
        return invalid("no synthetic rules");
    }
    if let BaseModel::Fixed { rule } = base {
        if rule.len() != problems.len() {
            return Err(Error::LengthMismatch {
                expected: problems.len(),
                got: rule.len(),
            });
        }
    }
    let divergence = |spec: &FitSpec, target: &PredictionRule, k: usize| -> Result<f64> {
        let c = FitConfig {
            loss: Loss::Kl,
            seed: derive_seed(cfg.seed, k as u64),
            ..cfg.clone()
        };
        Ok(fit_targets(spec, problems, target.probs(), weights, &c)?.objective)
    };
    let pairs = map_indexed(synthetic.len(), |k| -> Result<(f64, f64)> {
        let target = &synthetic[k];
        let a = divergence(family, target, k)?;
        let b = match base {
            BaseModel::Fixed { rule } => expected_kl(rule.probs(), target.probs(), weights)?,
            BaseModel::Family { spec } => divergence(spec, target, k)?,
        };
        Ok((a, b))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (value, se) = ratio_of_means(&a, &b)?;
    Ok(Restrictiveness {
        value,
        se,
        model_divergence: a,
        base_divergence: b,
    })
}

/// ā / b̄ with its delta-method standard error.
pub fn ratio_of_means(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    let k = a.len() as f64;
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (ma, mb) = (a.iter().sum::<f64>() / k, b.iter().sum::<f64>() / k);
    if mb <= 0.0 {
        return invalid("base model divergence is zero");
    }
    let r = ma / mb;
    if a.len() < 2 {
        return Ok((r, f64::NAN));
    }
    let (mut vaa, mut vbb, mut vab) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        vaa += (x - ma).powi(2);
        vbb += (y - mb).powi(2);
        vab += (x - ma) * (y - mb);
    }
    let d = k - 1.0;
    let var = (vaa / d - 2.0 * r * vab / d + r * r * vbb / d) / (mb * mb * k);
    Ok((r, var.max(0.0).sqrt()))
}

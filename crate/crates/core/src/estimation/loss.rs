use serde::{Deserialize, Serialize};

use super::data::{clamp_prob, ChoiceDataset, PredictionRule};
use crate::error::{invalid, Error, Result};

/// Objective minimized by [`super::fit`]. Both have the same minimizer;
/// `Kl` subtracts the target entropy so a perfect fit scores zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    #[default]
    Nll,
    Kl,
}

fn check_aligned(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch {
            expected: a,
            got: b,
        });
    }
    Ok(())
}

fn total_weight(weights: &[f64]) -> Result<f64> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return invalid("weights must be finite and non-negative");
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return invalid("total weight must be positive");
    }
    Ok(total)
}

/// Weighted cross-entropy of predictions `p` against target rates `q`.
pub fn cross_entropy(p: &[f64], q: &[f64], weights: &[f64]) -> Result<f64> {
    check_aligned(q.len(), p.len())?;
    check_aligned(q.len(), weights.len())?;
    let total = total_weight(weights)?;
    let s: f64 = p
        .iter()
        .zip(q)
        .zip(weights)
        .map(|((&p, &q), &w)| {
            let p = clamp_prob(p);
            w * (q * p.ln() + (1.0 - q) * (1.0 - p).ln())
        })
        .sum();
    Ok(-s / total)
}

/// Expected negative log-likelihood of a rule on a dataset, weighted by
/// trials per problem.
pub fn nll(rule: &PredictionRule, data: &ChoiceDataset) -> Result<f64> {
    cross_entropy(rule.probs(), &data.rates(), &data.weights())
}

/// Weighted Bernoulli KL divergence, Σ w·D(p′‖p) / Σ w, with both sides
/// clamped.
pub fn expected_kl(p: &[f64], p_prime: &[f64], weights: &[f64]) -> Result<f64> {
    check_aligned(p.len(), p_prime.len())?;
    check_aligned(p.len(), weights.len())?;
    let total = total_weight(weights)?;
    let s: f64 = p
        .iter()
        .zip(p_prime)
        .zip(weights)
        .map(|((&p, &q), &w)| {
            let (p, q) = (clamp_prob(p), clamp_prob(q));
            w * (q * (q / p).ln() + (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln())
        })
        .sum();
    Ok(s / total)
}

/// Objective value of predictions `p` for targets `q` under `loss`.
pub fn loss_value(loss: Loss, p: &[f64], q: &[f64], weights: &[f64]) -> Result<f64> {
    match loss {
        Loss::Nll => cross_entropy(p, q, weights),
        Loss::Kl => expected_kl(p, q, weights),
    }
}

/// Observation-weighted R² of predictions against empirical rates.
pub fn weighted_r2(rule: &PredictionRule, data: &ChoiceDataset) -> Result<f64> {
    weighted_r2_raw(rule.probs(), &data.rates(), &data.weights())
}

pub(crate) fn weighted_r2_raw(p: &[f64], r: &[f64], w: &[f64]) -> Result<f64> {
    check_aligned(r.len(), p.len())?;
    check_aligned(r.len(), w.len())?;
    let total = total_weight(w)?;
    let mean = r.iter().zip(w).map(|(r, w)| r * w).sum::<f64>() / total;
    let sst: f64 = r.iter().zip(w).map(|(r, w)| w * (r - mean).powi(2)).sum();
    if sst <= 0.0 {
        return invalid("choice rates have zero variance");
    }
    let sse: f64 = p
        .iter()
        .zip(r)
        .zip(w)
        .map(|((p, r), w)| w * (p - r).powi(2))
        .sum();
    Ok(1.0 - sse / sst)
}

/// Share of the base model's excess loss over the best predictor that the
/// model recovers.
pub fn completeness_index(e_base: f64, e_model: f64, e_star: f64) -> Result<f64> {
    if ![e_base, e_model, e_star].iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("completeness inputs".into()));
    }
    if e_base < e_star {
        return invalid(format!(
            "base loss {e_base} below best-predictor loss {e_star}"
        ));
    }
    if e_base == e_star {
        return invalid("base loss equals best-predictor loss");
    }
    Ok((e_base - e_model) / (e_base - e_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Alternative, Lottery};
    use crate::estimation::ChoiceObservation;
    use approx::assert_abs_diff_eq;

    fn dataset(spec: &[(u64, u64)]) -> ChoiceDataset {
        let a = Alternative::from(Lottery::certain(1.0).unwrap());
        let b = Alternative::from(Lottery::certain(2.0).unwrap());
        ChoiceDataset::new(
            spec.iter()
                .map(|&(n, k)| ChoiceObservation::new(a.clone(), b.clone(), n, k).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn nll_single_coin() {
        let d = dataset(&[(2, 1)]);
        let v = nll(&PredictionRule::constant(0.5, 1).unwrap(), &d).unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::LN_2, epsilon = 1e-15);
    }

    #[test]
    fn nll_deterministic_fit_is_near_zero() {
        let d = dataset(&[(5, 5), (3, 0)]);
        let v = nll(&PredictionRule::new(vec![1.0, 0.0]).unwrap(), &d).unwrap();
        assert!((0.0..1e-8).contains(&v));
    }

    #[test]
    fn nll_weighted_entropy_by_hand() {
        let d = dataset(&[(10, 3), (30, 24)]);
        let v = nll(&PredictionRule::new(vec![0.3, 0.8]).unwrap(), &d).unwrap();
        let h = |q: f64| -(q * q.ln() + (1.0 - q) * (1.0 - q).ln());
        assert_abs_diff_eq!(v, (10.0 * h(0.3) + 30.0 * h(0.8)) / 40.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v, 0.528_017_893_167_364_2, epsilon = 1e-12);
    }

    #[test]
    fn r2_endpoints_and_hand_case() {
        let d = dataset(&[(10, 2), (20, 10), (10, 9)]);
        let r = d.rates();
        assert_abs_diff_eq!(
            weighted_r2(&PredictionRule::new(r.clone()).unwrap(), &d).unwrap(),
            1.0
        );
        let mean = (10.0 * 0.2 + 20.0 * 0.5 + 10.0 * 0.9) / 40.0;
        let v = weighted_r2(&PredictionRule::constant(mean, 3).unwrap(), &d).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-14);
        // sst = 10(.2−.525)² + 20(.5−.525)² + 10(.9−.525)² = 2.475
        // sse = 10(.1)² + 20(.1)² + 10(.1)² = 0.4
        let v = weighted_r2(&PredictionRule::new(vec![0.3, 0.6, 0.8]).unwrap(), &d).unwrap();
        assert_abs_diff_eq!(v, 1.0 - 0.4 / 2.475, epsilon = 1e-14);
        assert!(weighted_r2(
            &PredictionRule::constant(0.5, 1).unwrap(),
            &dataset(&[(4, 2)])
        )
        .is_err());
    }

    #[test]
    fn completeness_examples() {
        assert_abs_diff_eq!(completeness_index(1.0, 1.0, 0.2).unwrap(), 0.0);
        assert_abs_diff_eq!(completeness_index(1.0, 0.2, 0.2).unwrap(), 1.0);
        assert_abs_diff_eq!(
            completeness_index(1.0, 0.3, 0.2).unwrap(),
            0.875,
            epsilon = 1e-15
        );
        assert!(completeness_index(0.5, 0.5, 0.5).is_err());
        assert!(completeness_index(0.1, 0.5, 0.5).is_err());
    }

    #[test]
    fn kl_properties() {
        assert_eq!(
            expected_kl(&[0.3, 0.7], &[0.3, 0.7], &[1.0, 2.0]).unwrap(),
            0.0
        );
        let a = expected_kl(&[0.9], &[0.5], &[1.0]).unwrap();
        let b = expected_kl(&[0.5], &[0.9], &[1.0]).unwrap();
        assert_abs_diff_eq!(
            a,
            0.5 * (0.5f64 / 0.9).ln() + 0.5 * (0.5f64 / 0.1).ln(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            b,
            0.9 * (0.9f64 / 0.5).ln() + 0.1 * (0.1f64 / 0.5).ln(),
            epsilon = 1e-14
        );
        assert!((a - b).abs() > 0.1);
        let w1 = expected_kl(&[0.2, 0.6], &[0.4, 0.5], &[1.0, 3.0]).unwrap();
        let w2 = expected_kl(&[0.2, 0.6], &[0.4, 0.5], &[2.0, 6.0]).unwrap();
        assert_abs_diff_eq!(w1, w2, epsilon = 1e-15);
        // Σ w·D is linear in the weights.
        let s1 = expected_kl(&[0.2], &[0.4], &[1.0]).unwrap();
        let s2 = expected_kl(&[0.6], &[0.5], &[1.0]).unwrap();
        assert_abs_diff_eq!(w1 * 4.0, s1 + 3.0 * s2, epsilon = 1e-14);
    }

    #[test]
    fn misalignment_rejected() {
        let d = dataset(&[(2, 1), (2, 1)]);
        assert!(nll(&PredictionRule::constant(0.5, 3).unwrap(), &d).is_err());
        assert!(PredictionRule::new(vec![1.2]).is_err());
    }
}

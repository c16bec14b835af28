//! Option representations for the three choice domains and the preference
//! models that value them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance on the total probability mass of a lottery.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// A vector of attribute levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeVector {
    values: Vec<f64>,
}

impl AttributeVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return invalid(format!(
                "attribute vector needs at least 2 entries, got {}",
                values.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("attribute level".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A finite-support lottery, stored with payoffs strictly ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lottery {
    outcomes: Vec<(f64, f64)>,
}

impl Lottery {
    /// Builds a canonical lottery: duplicate payoffs merged, zero-probability
    /// outcomes dropped, payoffs sorted ascending.
    pub fn new(outcomes: Vec<(f64, f64)>) -> Result<Self> {
        for &(w, p) in &outcomes {
            if !w.is_finite() || !p.is_finite() {
                return Err(Error::NonFinite("lottery outcome".into()));
            }
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!("probability {p} outside [0,1]"));
            }
        }
        let total: f64 = outcomes.iter().map(|o| o.1).sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return invalid(format!("probabilities sum to {total}, not 1"));
        }
        let mut sorted = outcomes;
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
        for (w, p) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == w => last.1 += p,
                _ => merged.push((w, p)),
            }
        }
        merged.retain(|o| o.1 > 0.0);
        if merged.is_empty() {
            return invalid("lottery has no outcome with positive probability");
        }
        Ok(Self { outcomes: merged })
    }

    /// The lottery paying `w` with probability `p` and 0 otherwise.
    pub fn simple(w: f64, p: f64) -> Result<Self> {
        Self::new(vec![(w, p), (0.0, 1.0 - p)])
    }

    /// A sure payment.
    pub fn certain(w: f64) -> Result<Self> {
        Self::new(vec![(w, 1.0)])
    }

    /// Outcomes as (payoff, probability), payoffs ascending.
    pub fn outcomes(&self) -> &[(f64, f64)] {
        &self.outcomes
    }

    /// Right-continuous CDF values at each support point. The last entry is
    /// pinned to exactly 1.
    pub fn cdf_points(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let n = self.outcomes.len();
        self.outcomes
            .iter()
            .enumerate()
            .map(|(i, o)| {
                acc += o.1;
                if i + 1 == n {
                    1.0
                } else {
                    acc
                }
            })
            .collect()
    }

    /// F(w) = P(payoff ≤ w).
    pub fn cdf(&self, w: f64) -> f64 {
        let cum = self.cdf_points();
        let mut f = 0.0;
        for (o, c) in self.outcomes.iter().zip(cum) {
            if o.0 <= w {
                f = c;
            } else {
                break;
            }
        }
        f
    }

    /// Quantile function inf{w : q ≤ F(w)} for q in (0, 1].
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::OutOfRange(format!(
                "quantile level {q} outside (0,1]"
            )));
        }
        let cum = self.cdf_points();
        for (o, c) in self.outcomes.iter().zip(cum) {
            if q <= c {
                return Ok(o.0);
            }
        }
        Ok(self.outcomes.last().map(|o| o.0).unwrap_or(0.0))
    }

    pub fn expected_payoff(&self) -> f64 {
        self.outcomes.iter().map(|(w, p)| w * p).sum()
    }

    /// Mixture λ·self + (1−λ)·other of the probability mass functions.
    pub fn mix(&self, other: &Lottery, lambda: f64) -> Result<Lottery> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::OutOfRange(format!("mixing weight {lambda}")));
        }
        let mut v: Vec<(f64, f64)> = self
            .outcomes
            .iter()
            .map(|&(w, p)| (w, lambda * p))
            .collect();
        v.extend(other.outcomes.iter().map(|&(w, p)| (w, (1.0 - lambda) * p)));
        Lottery::new(v)
    }
}

/// A finite payoff stream, stored with delays (days) strictly ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffFlow {
    payments: Vec<(f64, f64)>,
}

impl PayoffFlow {
    /// Builds a canonical flow: duplicate delays merged, zero amounts dropped.
    /// An empty flow (nothing paid) is valid.
    pub fn new(payments: Vec<(f64, f64)>) -> Result<Self> {
        for &(t, m) in &payments {
            if !t.is_finite() || !m.is_finite() {
                return Err(Error::NonFinite("payment".into()));
            }
            if t < 0.0 {
                return invalid(format!("negative delay {t}"));
            }
        }
        let mut sorted = payments;
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
        for (t, m) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == t => last.1 += m,
                _ => merged.push((t, m)),
            }
        }
        merged.retain(|p| p.1 != 0.0);
        Ok(Self { payments: merged })
    }

    /// A single payment of `amount` after `delay_days`.
    pub fn single(delay_days: f64, amount: f64) -> Result<Self> {
        Self::new(vec![(delay_days, amount)])
    }

    /// Payments as (delay in days, amount), delays ascending.
    pub fn payments(&self) -> &[(f64, f64)] {
        &self.payments
    }

    /// Cumulative payoff M(t): total paid at delays ≤ t.
    pub fn cumulative_payoff(&self, t: f64) -> f64 {
        self.payments
            .iter()
            .take_while(|p| p.0 <= t)
            .map(|p| p.1)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.payments.iter().map(|p| p.1).sum()
    }
}

/// Which kind of option a value belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Attributes,
    Lottery,
    Temporal,
}

/// A choice option in one of the three domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Alternative {
    Attributes(AttributeVector),
    Lottery(Lottery),
    Flow(PayoffFlow),
}

impl Alternative {
    pub fn domain(&self) -> Domain {
        match self {
            Alternative::Attributes(_) => Domain::Attributes,
            Alternative::Lottery(_) => Domain::Lottery,
            Alternative::Flow(_) => Domain::Temporal,
        }
    }
}

impl From<AttributeVector> for Alternative {
    fn from(v: AttributeVector) -> Self {
        Alternative::Attributes(v)
    }
}

impl From<Lottery> for Alternative {
    fn from(v: Lottery) -> Self {
        Alternative::Lottery(v)
    }
}

impl From<PayoffFlow> for Alternative {
    fn from(v: PayoffFlow) -> Self {
        Alternative::Flow(v)
    }
}

/// Preference parameters for one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UtilityModel {
    /// U(x) = Σ β_k x_k.
    LinearAttributes { beta: Vec<f64> },
    /// u(w) = sign(w)·|w|^α.
    CrraSymmetric { alpha: f64 },
    /// u(w) = w^α for gains, −λ(−w)^β for losses.
    PowerLossAverse { alpha: f64, beta: f64, lambda: f64 },
    /// d(t) = δ^(t/period).
    ExponentialDiscount { delta: f64, period_days: f64 },
    /// d(0) = 1, d(t) = β·δ^(t/period) for t > 0.
    QuasiHyperbolic {
        beta_qh: f64,
        delta: f64,
        period_days: f64,
    },
    /// d(t) = (1 + ι·t/period)^(−ζ/ι).
    GeneralizedHyperbolic {
        iota: f64,
        zeta: f64,
        period_days: f64,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

fn unit_open(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!(
            "{name} must lie in (0,1), got {v}"
        )))
    }
}

impl UtilityModel {
    /// Risk-neutral (linear) Bernoulli utility.
    pub fn linear_money() -> Self {
        UtilityModel::CrraSymmetric { alpha: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            UtilityModel::LinearAttributes { beta } => {
                if beta.iter().any(|b| !b.is_finite() || *b == 0.0) {
                    return invalid("attribute weights must be finite and nonzero");
                }
                Ok(())
            }
            UtilityModel::CrraSymmetric { alpha } => positive("alpha", *alpha),
            UtilityModel::PowerLossAverse {
                alpha,
                beta,
                lambda,
            } => {
                positive("alpha", *alpha)?;
                positive("beta", *beta)?;
                positive("lambda", *lambda)
            }
            UtilityModel::ExponentialDiscount { delta, period_days } => {
                unit_open("delta", *delta)?;
                positive("period_days", *period_days)
            }
            UtilityModel::QuasiHyperbolic {
                beta_qh,
                delta,
                period_days,
            } => {
                positive("beta_qh", *beta_qh)?;
                unit_open("delta", *delta)?;
                positive("period_days", *period_days)
            }
            UtilityModel::GeneralizedHyperbolic {
                iota,
                zeta,
                period_days,
            } => {
                positive("iota", *iota)?;
                positive("zeta", *zeta)?;
                positive("period_days", *period_days)
            }
        }
    }

    /// The domain this model values.
    pub fn domain(&self) -> Domain {
        match self {
            UtilityModel::LinearAttributes { .. } => Domain::Attributes,
            UtilityModel::CrraSymmetric { .. } | UtilityModel::PowerLossAverse { .. } => {
                Domain::Lottery
            }
            _ => Domain::Temporal,
        }
    }

    /// Bernoulli utility of a payoff. Errors for non-lottery models.
    pub fn bernoulli(&self, w: f64) -> Result<f64> {
        match *self {
            UtilityModel::CrraSymmetric { alpha } => Ok(crra_symmetric(w, alpha)),
            UtilityModel::PowerLossAverse {
                alpha,
                beta,
                lambda,
            } => Ok(power_loss_averse(w, alpha, beta, lambda)),
            _ => Err(Error::DomainMismatch(
                "model has no Bernoulli utility".into(),
            )),
        }
    }

    /// Discount function for temporal models.
    pub fn discount(&self) -> Result<DiscountFunction> {
        DiscountFunction::from_model(self)
    }
}

pub(crate) fn crra_symmetric(w: f64, alpha: f64) -> f64 {
    if w >= 0.0 {
        w.powf(alpha)
    } else {
        -(-w).powf(alpha)
    }
}

pub(crate) fn power_loss_averse(w: f64, alpha: f64, beta: f64, lambda: f64) -> f64 {
    if w >= 0.0 {
        w.powf(alpha)
    } else {
        -lambda * (-w).powf(beta)
    }
}

/// Discount function d(t) over delays in days, with d(∞) = 0 implicit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DiscountFunction {
    Exponential {
        delta: f64,
        period_days: f64,
    },
    QuasiHyperbolic {
        beta_qh: f64,
        delta: f64,
        period_days: f64,
    },
    GeneralizedHyperbolic {
        iota: f64,
        zeta: f64,
        period_days: f64,
    },
}

impl DiscountFunction {
    /// Requires β_qh ≤ 1 for quasi-hyperbolic models, since d must be
    /// strictly decreasing for the payoff-flow distance.
    pub fn from_model(model: &UtilityModel) -> Result<Self> {
        model.validate()?;
        match *model {
            UtilityModel::ExponentialDiscount { delta, period_days } => {
                Ok(DiscountFunction::Exponential { delta, period_days })
            }
            UtilityModel::QuasiHyperbolic {
                beta_qh,
                delta,
                period_days,
            } => {
                if beta_qh > 1.0 {
                    return Err(Error::OutOfRange(format!(
                        "beta_qh = {beta_qh} > 1 gives a discount function that is not decreasing"
                    )));
                }
                Ok(DiscountFunction::QuasiHyperbolic {
                    beta_qh,
                    delta,
                    period_days,
                })
            }
            UtilityModel::GeneralizedHyperbolic {
                iota,
                zeta,
                period_days,
            } => Ok(DiscountFunction::GeneralizedHyperbolic {
                iota,
                zeta,
                period_days,
            }),
            _ => Err(Error::DomainMismatch(
                "model is not a discount model".into(),
            )),
        }
    }

    pub fn exponential(delta: f64, period_days: f64) -> Result<Self> {
        Self::from_model(&UtilityModel::ExponentialDiscount { delta, period_days })
    }

    /// d(t) for a finite delay in days.
    pub fn eval(&self, t_days: f64) -> f64 {
        match *self {
            DiscountFunction::Exponential { delta, period_days } => {
                delta.powf(t_days / period_days)
            }
            DiscountFunction::QuasiHyperbolic {
                beta_qh,
                delta,
                period_days,
            } => {
                if t_days <= 0.0 {
                    1.0
                } else {
                    beta_qh * delta.powf(t_days / period_days)
                }
            }
            DiscountFunction::GeneralizedHyperbolic {
                iota,
                zeta,
                period_days,
            } => (1.0 + iota * t_days / period_days).powf(-zeta / iota),
        }
    }
}

/// Value of an option under a compatible model.
pub fn value(opt: &Alternative, model: &UtilityModel) -> Result<f64> {
    model.validate()?;
    let v = match (opt, model) {
        (Alternative::Attributes(x), UtilityModel::LinearAttributes { beta }) => {
            if beta.len() != x.len() {
                return Err(Error::LengthMismatch {
                    expected: x.len(),
                    got: beta.len(),
                });
            }
            x.values().iter().zip(beta).map(|(a, b)| a * b).sum()
        }
        (Alternative::Lottery(l), UtilityModel::CrraSymmetric { .. })
        | (Alternative::Lottery(l), UtilityModel::PowerLossAverse { .. }) => {
            let mut s = 0.0;
            for &(w, p) in l.outcomes() {
                s += p * model.bernoulli(w)?;
            }
            s
        }
        (Alternative::Flow(f), m) if m.domain() == Domain::Temporal => {
            // QDU with β_qh > 1 is a valid valuation even though it is not a
            // decreasing discount function, so evaluate directly.
            let d = |t: f64| -> f64 {
                match *m {
                    UtilityModel::ExponentialDiscount { delta, period_days } => {
                        delta.powf(t / period_days)
                    }
                    UtilityModel::QuasiHyperbolic {
                        beta_qh,
                        delta,
                        period_days,
                    } => {
                        if t <= 0.0 {
                            1.0
                        } else {
                            beta_qh * delta.powf(t / period_days)
                        }
                    }
                    UtilityModel::GeneralizedHyperbolic {
                        iota,
                        zeta,
                        period_days,
                    } => (1.0 + iota * t / period_days).powf(-zeta / iota),
                    _ => unreachable!(),
                }
            };
            f.payments().iter().map(|&(t, a)| d(t) * a).sum()
        }
        _ => {
            return Err(Error::DomainMismatch(format!(
                "{:?} option cannot be valued by a {:?} model",
                opt.domain(),
                model.domain()
            )))
        }
    };
    if !v.is_finite() {
        return Err(Error::NonFinite("option value".into()));
    }
    Ok(v)
}

/// Weak dominance of x over y on every β-weighted attribute, strict on one.
pub fn attribute_dominates(x: &AttributeVector, y: &AttributeVector, beta: &[f64]) -> bool {
    let mut strict = false;
    for ((a, b), w) in x.values().iter().zip(y.values()).zip(beta) {
        let d = w * (a - b);
        if d < 0.0 {
            return false;
        }
        if d > 0.0 {
            strict = true;
        }
    }
    strict
}

/// First-order stochastic dominance of x over y: F_x ≤ F_y everywhere with
/// strict inequality somewhere. Valid for any increasing Bernoulli utility.
pub fn fosd(x: &Lottery, y: &Lottery) -> bool {
    let mut grid: Vec<f64> = x
        .outcomes()
        .iter()
        .chain(y.outcomes())
        .map(|o| o.0)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut strict = false;
    for w in grid {
        let (fx, fy) = (x.cdf(w), y.cdf(w));
        if fx > fy {
            return false;
        }
        if fx < fy {
            strict = true;
        }
    }
    strict
}

/// Temporal dominance: M_x ≥ M_y at every delay, strict at one.
pub fn temporal_dominates(x: &PayoffFlow, y: &PayoffFlow) -> bool {
    let mut grid: Vec<f64> = x
        .payments()
        .iter()
        .chain(y.payments())
        .map(|p| p.0)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut strict = false;
    for t in grid {
        let (mx, my) = (x.cumulative_payoff(t), y.cumulative_payoff(t));
        if mx < my {
            return false;
        }
        if mx > my {
            strict = true;
        }
    }
    strict
}

/// Domain dominance of x over y under `model`.
pub fn dominates(x: &Alternative, y: &Alternative, model: &UtilityModel) -> Result<bool> {
    match (x, y, model) {
        (
            Alternative::Attributes(a),
            Alternative::Attributes(b),
            UtilityModel::LinearAttributes { beta },
        ) => {
            if a.len() != b.len() || beta.len() != a.len() {
                return Err(Error::LengthMismatch {
                    expected: a.len(),
                    got: b.len().min(beta.len()),
                });
            }
            Ok(attribute_dominates(a, b, beta))
        }
        (Alternative::Lottery(a), Alternative::Lottery(b), _)
            if model.domain() == Domain::Lottery =>
        {
            Ok(fosd(a, b))
        }
        (Alternative::Flow(a), Alternative::Flow(b), _) if model.domain() == Domain::Temporal => {
            Ok(temporal_dominates(a, b))
        }
        _ => Err(Error::DomainMismatch(
            "dominance check across domains".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_examples() {
        let f = Alternative::Flow(PayoffFlow::single(0.0, 10.0).unwrap());
        for m in [
            UtilityModel::ExponentialDiscount {
                delta: 0.9,
                period_days: 30.0,
            },
            UtilityModel::QuasiHyperbolic {
                beta_qh: 0.7,
                delta: 0.9,
                period_days: 30.0,
            },
            UtilityModel::GeneralizedHyperbolic {
                iota: 0.16,
                zeta: 0.12,
                period_days: 24.0,
            },
        ] {
            assert_eq!(value(&f, &m).unwrap(), 10.0);
        }
        let l = Alternative::Lottery(Lottery::new(vec![(9.0, 0.5), (0.0, 0.5)]).unwrap());
        let v = value(&l, &UtilityModel::CrraSymmetric { alpha: 0.85 }).unwrap();
        assert!((v - 0.5 * 9f64.powf(0.85)).abs() < 1e-14);
        assert!((v - 3.2365039199618897).abs() < 1e-12);
        let a = Alternative::Attributes(AttributeVector::new(vec![10.0, 7.0, 9.0]).unwrap());
        let m = UtilityModel::LinearAttributes { beta: vec![1.0; 3] };
        assert_eq!(value(&a, &m).unwrap(), 26.0);
    }

    #[test]
    fn value_errors() {
        let a = Alternative::Attributes(AttributeVector::new(vec![1.0, 2.0]).unwrap());
        let m = UtilityModel::LinearAttributes { beta: vec![1.0; 3] };
        assert!(matches!(value(&a, &m), Err(Error::LengthMismatch { .. })));
        assert!(matches!(
            value(&a, &UtilityModel::CrraSymmetric { alpha: 1.0 }),
            Err(Error::DomainMismatch(_))
        ));
        assert!(AttributeVector::new(vec![1.0]).is_err());
        assert!(Lottery::new(vec![(1.0, 0.5)]).is_err());
    }

    #[test]
    fn cumulative_payoff_examples() {
        let f = PayoffFlow::single(30.0, 8.25).unwrap();
        assert_eq!(f.cumulative_payoff(29.0), 0.0);
        assert_eq!(f.cumulative_payoff(30.0), 8.25);
        let g = PayoffFlow::new(vec![(30.0, 5.0), (60.0, 5.0)]).unwrap();
        assert_eq!(g.cumulative_payoff(1000.0), 10.0);
    }

    #[test]
    fn quantile_examples() {
        let l = Lottery::simple(23.5, 0.19).unwrap();
        assert_eq!(l.quantile(0.5).unwrap(), 0.0);
        assert_eq!(l.quantile(0.9).unwrap(), 23.5);
        let d = Lottery::certain(4.0).unwrap();
        for q in [0.01, 0.5, 1.0] {
            assert_eq!(d.quantile(q).unwrap(), 4.0);
        }
        assert!(l.quantile(0.0).is_err());
        assert!(l.quantile(1.5).is_err());
    }

    #[test]
    fn canonicalization() {
        let l = Lottery::new(vec![(5.0, 0.25), (1.0, 0.0), (5.0, 0.25), (2.0, 0.5)]).unwrap();
        assert_eq!(l.outcomes(), &[(2.0, 0.5), (5.0, 0.5)]);
        let again = Lottery::new(l.outcomes().to_vec()).unwrap();
        assert_eq!(again, l);
        let f = PayoffFlow::new(vec![(10.0, 3.0), (10.0, -3.0), (5.0, 1.0)]).unwrap();
        assert_eq!(f.payments(), &[(5.0, 1.0)]);
    }

    #[test]
    fn discount_rejects_increasing_quasi_hyperbolic() {
        let m = UtilityModel::QuasiHyperbolic {
            beta_qh: 1.2,
            delta: 0.9,
            period_days: 30.0,
        };
        assert!(DiscountFunction::from_model(&m).is_err());
        // Valuation itself is still defined.
        let f = Alternative::Flow(PayoffFlow::single(30.0, 1.0).unwrap());
        assert!((value(&f, &m).unwrap() - 1.08).abs() < 1e-12);
    }

    #[test]
    fn discount_decreasing_on_grid() {
        let fns = [
            DiscountFunction::exponential(0.95, 30.0).unwrap(),
            UtilityModel::QuasiHyperbolic {
                beta_qh: 0.84,
                delta: 0.96,
                period_days: 24.0,
            }
            .discount()
            .unwrap(),
            UtilityModel::GeneralizedHyperbolic {
                iota: 0.16,
                zeta: 0.12,
                period_days: 24.0,
            }
            .discount()
            .unwrap(),
        ];
        for d in fns {
            assert!(d.eval(0.0) > 0.0);
            let mut prev = d.eval(0.0);
            for k in 1..200 {
                let cur = d.eval(k as f64 * 7.0);
                assert!(cur < prev);
                prev = cur;
            }
            assert!(d.eval(1e9) < 1e-3);
        }
    }
}

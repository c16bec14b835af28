//! Binary choice rules: the complexity model and the logit benchmark
//! families, behind one `rho` entry point.

use serde::{Deserialize, Serialize};

use crate::complexity::{g_eval, signed_ratio, GCurve};
use crate::domain::{self, Alternative, AttributeVector, Domain, Lottery, UtilityModel};
use crate::error::{Error, Result};

/// Value functions of the logit benchmark models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BenchmarkFamily {
    DistortionFree,
    Salience {
        delta_s: f64,
    },
    Focusing {
        theta: f64,
    },
    RelativeThinking {
        omega: f64,
        xi: f64,
    },
    Edu {
        delta: f64,
        period_days: f64,
    },
    Qdu {
        beta_qh: f64,
        delta: f64,
        period_days: f64,
    },
    Hdu {
        iota: f64,
        zeta: f64,
        period_days: f64,
    },
    Eu {
        alpha: f64,
    },
    Rdeu {
        alpha: f64,
        beta: f64,
        lambda: f64,
    },
    Cpt {
        alpha: f64,
        beta: f64,
        lambda: f64,
        chi: f64,
        nu: f64,
    },
}

/// A binary choice rule ρ(x, y).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ChoiceModel {
    Complexity {
        utility: UtilityModel,
        curve: GCurve,
    },
    Logit {
        family: BenchmarkFamily,
        eta: f64,
    },
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::OutOfRange(msg()))
    }
}

impl BenchmarkFamily {
    pub fn domain(&self) -> Domain {
        use BenchmarkFamily::*;
        match self {
            DistortionFree | Salience { .. } | Focusing { .. } | RelativeThinking { .. } => {
                Domain::Attributes
            }
            Edu { .. } | Qdu { .. } | Hdu { .. } => Domain::Temporal,
            Eu { .. } | Rdeu { .. } | Cpt { .. } => Domain::Lottery,
        }
    }

    pub fn validate(&self) -> Result<()> {
        use BenchmarkFamily::*;
        match *self {
            DistortionFree => Ok(()),
            Salience { delta_s } => check(delta_s.is_finite() && delta_s <= 1.0, || {
                format!("delta_s = {delta_s} must be <= 1")
            }),
            Focusing { theta } => check(theta.is_finite() && theta >= 0.0, || {
                format!("theta = {theta} must be >= 0")
            }),
            RelativeThinking { omega, xi } => {
                check((0.0..=1.0).contains(&omega), || {
                    format!("omega = {omega} outside [0,1]")
                })?;
                check(xi.is_finite() && xi > 0.0, || {
                    format!("xi = {xi} must be positive")
                })
            }
            Cpt {
                alpha,
                beta,
                lambda,
                chi,
                nu,
            } => {
                for (n, v) in [
                    ("alpha", alpha),
                    ("beta", beta),
                    ("lambda", lambda),
                    ("chi", chi),
                    ("nu", nu),
                ] {
                    check(v.is_finite() && v > 0.0, || {
                        format!("{n} = {v} must be positive")
                    })?;
                }
                Ok(())
            }
            _ => self.utility().expect("value-based family").validate(),
        }
    }

    /// The context-free utility model behind EDU/QDU/HDU/EU/RDEU.
    pub fn utility(&self) -> Option<UtilityModel> {
        use BenchmarkFamily::*;
        Some(match *self {
            Edu { delta, period_days } => UtilityModel::ExponentialDiscount { delta, period_days },
            Qdu {
                beta_qh,
                delta,
                period_days,
            } => UtilityModel::QuasiHyperbolic {
                beta_qh,
                delta,
                period_days,
            },
            Hdu {
                iota,
                zeta,
                period_days,
            } => UtilityModel::GeneralizedHyperbolic {
                iota,
                zeta,
                period_days,
            },
            Eu { alpha } => UtilityModel::CrraSymmetric { alpha },
            Rdeu {
                alpha,
                beta,
                lambda,
            } => UtilityModel::PowerLossAverse {
                alpha,
                beta,
                lambda,
            },
            _ => return None,
        })
    }
}

impl ChoiceModel {
    pub fn domain(&self) -> Domain {
        match self {
            ChoiceModel::Complexity { utility, .. } => utility.domain(),
            ChoiceModel::Logit { family, .. } => family.domain(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ChoiceModel::Complexity { utility, curve } => {
                utility.validate()?;
                GCurve::new(curve.kappa, curve.gamma, curve.psi).map(|_| ())
            }
            ChoiceModel::Logit { family, eta } => {
                check(eta.is_finite() && *eta >= 0.0, || {
                    format!("eta = {eta} must be >= 0")
                })?;
                family.validate()
            }
        }
    }
}

/// Logistic link sgm_η(t) = 1/(1 + exp(−ηt)).
pub fn logistic(eta: f64, t: f64) -> f64 {
    1.0 / (1.0 + (-eta * t).exp())
}

fn as_attrs(o: &Alternative) -> Result<&AttributeVector> {
    match o {
        Alternative::Attributes(a) => Ok(a),
        _ => Err(Error::DomainMismatch("expected an attribute vector".into())),
    }
}

fn as_lottery(o: &Alternative) -> Result<&Lottery> {
    match o {
        Alternative::Lottery(l) => Ok(l),
        _ => Err(Error::DomainMismatch("expected a lottery".into())),
    }
}

/// Menu-dependent value of x in the binary menu {x, y}.
pub fn context_value(
    family: &BenchmarkFamily,
    x: &AttributeVector,
    y: &AttributeVector,
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    family.validate()?;
    let pairs = x.values().iter().zip(y.values());
    let v = match *family {
        BenchmarkFamily::DistortionFree => x.values().iter().sum(),
        BenchmarkFamily::Salience { delta_s } => pairs
            .map(|(&a, &b)| {
                let m = 0.5 * (a + b);
                let den = a.abs() + m.abs();
                let w = if den == 0.0 {
                    1.0
                } else {
                    (1.0 + (a - m).abs() / den).powf(1.0 - delta_s)
                };
                a * w
            })
            .sum(),
        BenchmarkFamily::Focusing { theta } => {
            pairs.map(|(&a, &b)| a * (a - b).abs().powf(theta)).sum()
        }
        BenchmarkFamily::RelativeThinking { omega, xi } => pairs
            .map(|(&a, &b)| a * ((1.0 - omega) + omega / ((a - b).abs() + xi)))
            .sum(),
        _ => {
            return Err(Error::DomainMismatch(
                "family is not a multiattribute context model".into(),
            ))
        }
    };
    Ok(v)
}

/// Probability weighting q(p) = χp^ν / (χp^ν + (1−p)^ν).
pub fn cpt_weight(p: f64, chi: f64, nu: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let a = chi * p.powf(nu);
    a / (a + (1.0 - p).powf(nu))
}

/// Rank-dependent CPT value with power loss-averse utility. Gains are
/// weighted by decumulative probabilities from the top, losses by cumulative
/// probabilities from the bottom. Zero payoffs carry no utility.
pub fn cpt_value(lot: &Lottery, alpha: f64, beta: f64, lambda: f64, chi: f64, nu: f64) -> f64 {
    let u = |w: f64| domain::power_loss_averse(w, alpha, beta, lambda);
    let q = |p: f64| cpt_weight(p, chi, nu);
    let outs = lot.outcomes();
    let mut v = 0.0;
    // Gains, best first: π_k = q(p_k + … + p_n) − q(p_{k+1} + … + p_n).
    let mut tail = 0.0;
    for &(w, p) in outs.iter().rev().filter(|o| o.0 > 0.0) {
        let next = tail + p;
        v += (q(next) - q(tail)) * u(w);
        tail = next;
    }
    // Losses, worst first: π_k = q(p_{−m} + … + p_k) − q(p_{−m} + … + p_{k−1}).
    let mut head = 0.0;
    for &(w, p) in outs.iter().filter(|o| o.0 < 0.0) {
        let next = head + p;
        v += (q(next) - q(head)) * u(w);
        head = next;
    }
    v
}

/// Values of x and y under a logit benchmark family.
pub fn pair_values(
    family: &BenchmarkFamily,
    x: &Alternative,
    y: &Alternative,
) -> Result<(f64, f64)> {
    family.validate()?;
    match family {
        BenchmarkFamily::DistortionFree
        | BenchmarkFamily::Salience { .. }
        | BenchmarkFamily::Focusing { .. }
        | BenchmarkFamily::RelativeThinking { .. } => {
            let (a, b) = (as_attrs(x)?, as_attrs(y)?);
            Ok((context_value(family, a, b)?, context_value(family, b, a)?))
        }
        BenchmarkFamily::Cpt {
            alpha,
            beta,
            lambda,
            chi,
            nu,
        } => {
            let (a, b) = (as_lottery(x)?, as_lottery(y)?);
            Ok((
                cpt_value(a, *alpha, *beta, *lambda, *chi, *nu),
                cpt_value(b, *alpha, *beta, *lambda, *chi, *nu),
            ))
        }
        _ => {
            let u = family.utility().expect("value-based family");
            Ok((domain::value(x, &u)?, domain::value(y, &u)?))
        }
    }
}

/// Probability that x is chosen from {x, y}.
pub fn rho(model: &ChoiceModel, x: &Alternative, y: &Alternative) -> Result<f64> {
    if x.domain() != y.domain() || x.domain() != model.domain() {
        return Err(Error::DomainMismatch(format!(
            "{:?} model applied to {:?} vs {:?}",
            model.domain(),
            x.domain(),
            y.domain()
        )));
    }
    match model {
        ChoiceModel::Complexity { utility, curve } => {
            let sr = signed_ratio(x, y, utility)?;
            if sr.degenerate {
                return Ok(0.5);
            }
            g_eval(sr.r, curve)
        }
        ChoiceModel::Logit { family, eta } => {
            if !(eta.is_finite() && *eta >= 0.0) {
                return Err(Error::OutOfRange(format!("eta = {eta} must be >= 0")));
            }
            let (vx, vy) = pair_values(family, x, y)?;
            let p = logistic(*eta, vx - vy);
            if p.is_finite() {
                Ok(p)
            } else {
                Err(Error::NonFinite("logit probability".into()))
            }
        }
    }
}

/// Reveal probability of the binary-signal model: the signal shows the true
/// ranking with probability τ = 2G(|r|) − 1 and is uninformative otherwise.
pub fn binary_signal_precision(r: f64, curve: &GCurve) -> Result<f64> {
    Ok(2.0 * g_eval(r.abs(), curve)? - 1.0)
}

/// Choice probability of x under the binary-signal model: (1 + τ)/2 when x
/// is better, (1 − τ)/2 when worse.
pub fn rho_binary_signal(
    x: &Alternative,
    y: &Alternative,
    model: &UtilityModel,
    curve: &GCurve,
) -> Result<f64> {
    let sr = signed_ratio(x, y, model)?;
    if sr.degenerate || sr.r == 0.0 {
        return Ok(0.5);
    }
    let tau = binary_signal_precision(sr.r, curve)?;
    Ok(if sr.r > 0.0 {
        0.5 * (1.0 + tau)
    } else {
        0.5 * (1.0 - tau)
    })
}

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::data::{ChoiceDataset, PredictionRule};
use super::loss::{loss_value, weighted_r2_raw, Loss};
use crate::choice::{rho, BenchmarkFamily, ChoiceModel};
use crate::complexity::GCurve;
use crate::domain::{Alternative, Domain, UtilityModel};
use crate::error::{invalid, Error, Result};
use crate::par::{chunk_rng, map_indexed};

/// Map from an unbounded coordinate to a parameter's natural range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// (0, ∞) via exp.
    Positive,
    /// (0, 1) via the logistic function.
    Unit,
    /// (0, ½) via half the logistic function.
    HalfUnit,
    /// (−∞, 1) via 1 − exp(−u).
    BelowOne,
}

impl Transform {
    pub fn to_natural(self, u: f64) -> f64 {
        match self {
            Transform::Positive => u.exp(),
            Transform::Unit => 1.0 / (1.0 + (-u).exp()),
            Transform::HalfUnit => 0.5 / (1.0 + (-u).exp()),
            Transform::BelowOne => 1.0 - (-u).exp(),
        }
    }

    /// Inverse map. Values on a closed boundary (κ = 0, say) are nudged
    /// inside by 1e-9.
    pub fn to_unbounded(self, x: f64) -> Result<f64> {
        const EDGE: f64 = 1e-9;
        let logit = |p: f64| (p / (1.0 - p)).ln();
        let out = match self {
            Transform::Positive if x >= 0.0 => x.max(EDGE).ln(),
            Transform::Unit if (0.0..=1.0).contains(&x) => logit(x.clamp(EDGE, 1.0 - EDGE)),
            Transform::HalfUnit if (0.0..=0.5).contains(&x) => {
                logit((2.0 * x).clamp(EDGE, 1.0 - EDGE))
            }
            Transform::BelowOne if x <= 1.0 => -(1.0 - x).max(EDGE).ln(),
            _ => {
                return Err(Error::OutOfRange(format!(
                    "{x} outside the range of {self:?}"
                )))
            }
        };
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamDef {
    pub name: &'static str,
    pub transform: Transform,
    pub init: f64,
}

const fn p(name: &'static str, transform: Transform, init: f64) -> ParamDef {
    ParamDef {
        name,
        transform,
        init,
    }
}

const ETA: ParamDef = p("eta", Transform::Positive, 1.0);
const KAPPA: ParamDef = p("kappa", Transform::HalfUnit, 0.1);
const GAMMA: ParamDef = p("gamma", Transform::Positive, 1.0);
const PSI: ParamDef = p("psi", Transform::Positive, 1.0);
const DELTA: ParamDef = p("delta", Transform::Unit, 0.9);
const ALPHA: ParamDef = p("alpha", Transform::Positive, 1.0);
const BETA: ParamDef = p("beta", Transform::Positive, 1.0);
const LAMBDA: ParamDef = p("lambda", Transform::Positive, 1.0);

fn default_period() -> f64 {
    30.0
}

/// Estimable model template. Parameter order is given by [`FitSpec::params`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FitSpec {
    /// One rate shared by every problem.
    ConstantRate,
    /// One free rate per problem.
    Saturated,
    DistortionFree,
    Salience,
    Focusing,
    RelativeThinking,
    Edu {
        #[serde(default = "default_period")]
        period_days: f64,
    },
    Qdu {
        #[serde(default = "default_period")]
        period_days: f64,
    },
    Hdu {
        #[serde(default = "default_period")]
        period_days: f64,
    },
    Eu,
    Rdeu,
    Cpt,
    /// Attribute weights default to one per attribute.
    L1Complexity {
        #[serde(default)]
        beta: Option<Vec<f64>>,
        #[serde(default)]
        psi_free: bool,
    },
    CpfComplexity {
        #[serde(default = "default_period")]
        period_days: f64,
        #[serde(default)]
        psi_free: bool,
    },
    /// Risk-neutral unless `curvature` adds a CRRA exponent.
    CdfComplexity {
        #[serde(default)]
        curvature: bool,
        #[serde(default)]
        psi_free: bool,
    },
}

impl FitSpec {
    pub fn domain(&self) -> Option<Domain> {
        use FitSpec::*;
        match self {
            ConstantRate | Saturated => None,
            DistortionFree | Salience | Focusing | RelativeThinking | L1Complexity { .. } => {
                Some(Domain::Attributes)
            }
            Edu { .. } | Qdu { .. } | Hdu { .. } | CpfComplexity { .. } => Some(Domain::Temporal),
            Eu | Rdeu | Cpt | CdfComplexity { .. } => Some(Domain::Lottery),
        }
    }

    /// Whether the fit has a closed form and skips the simplex search.
    pub fn is_closed_form(&self) -> bool {
        matches!(self, FitSpec::ConstantRate | FitSpec::Saturated)
    }

    pub fn params(&self) -> Vec<ParamDef> {
        use Transform::*;
        let psi = |free: bool| if free { vec![PSI] } else { vec![] };
        match self {
            FitSpec::ConstantRate | FitSpec::Saturated => vec![],
            FitSpec::DistortionFree => vec![ETA],
            FitSpec::Salience => vec![ETA, p("delta_s", BelowOne, 0.5)],
            FitSpec::Focusing => vec![ETA, p("theta", Positive, 0.5)],
            FitSpec::RelativeThinking => vec![ETA, p("omega", Unit, 0.5), p("xi", Positive, 1.0)],
            FitSpec::Edu { .. } => vec![ETA, DELTA],
            FitSpec::Qdu { .. } => vec![ETA, DELTA, p("beta_qh", Positive, 1.0)],
            FitSpec::Hdu { .. } => vec![ETA, p("iota", Positive, 0.1), p("zeta", Positive, 0.1)],
            FitSpec::Eu => vec![ETA, ALPHA],
            FitSpec::Rdeu => vec![ETA, ALPHA, BETA, LAMBDA],
            FitSpec::Cpt => vec![
                ETA,
                ALPHA,
                BETA,
                LAMBDA,
                p("chi", Positive, 1.0),
                p("nu", Positive, 1.0),
            ],
            FitSpec::L1Complexity { psi_free, .. } => [vec![KAPPA, GAMMA], psi(*psi_free)].concat(),
            FitSpec::CpfComplexity { psi_free, .. } => {
                [vec![DELTA, KAPPA, GAMMA], psi(*psi_free)].concat()
            }
            FitSpec::CdfComplexity {
                curvature,
                psi_free,
            } => {
                let alpha = if *curvature { vec![ALPHA] } else { vec![] };
                [vec![KAPPA, GAMMA], psi(*psi_free), alpha].concat()
            }
        }
    }

    /// Model at natural-scale parameters. `attrs` is the attribute count,
    /// used when L1 weights are left at their default.
    pub fn build(&self, theta: &[f64], attrs: usize) -> Result<ChoiceModel> {
        let defs = self.params();
        if self.is_closed_form() {
            return invalid("closed-form predictors have no choice model");
        }
        if theta.len() != defs.len() {
            return Err(Error::LengthMismatch {
                expected: defs.len(),
                got: theta.len(),
            });
        }
        let curve = |k: f64, g: f64, psi: Option<f64>| GCurve::new(k, g, psi.unwrap_or(1.0));
        let logit = |family: BenchmarkFamily| ChoiceModel::Logit {
            family,
            eta: theta[0],
        };
        let model = match self {
            FitSpec::ConstantRate | FitSpec::Saturated => unreachable!(),
            FitSpec::DistortionFree => logit(BenchmarkFamily::DistortionFree),
            FitSpec::Salience => logit(BenchmarkFamily::Salience { delta_s: theta[1] }),
            FitSpec::Focusing => logit(BenchmarkFamily::Focusing { theta: theta[1] }),
            FitSpec::RelativeThinking => logit(BenchmarkFamily::RelativeThinking {
                omega: theta[1],
                xi: theta[2],
            }),
            FitSpec::Edu { period_days } => logit(BenchmarkFamily::Edu {
                delta: theta[1],
                period_days: *period_days,
            }),
            FitSpec::Qdu { period_days } => logit(BenchmarkFamily::Qdu {
                delta: theta[1],
                beta_qh: theta[2],
                period_days: *period_days,
            }),
            FitSpec::Hdu { period_days } => logit(BenchmarkFamily::Hdu {
                iota: theta[1],
                zeta: theta[2],
                period_days: *period_days,
            }),
            FitSpec::Eu => logit(BenchmarkFamily::Eu { alpha: theta[1] }),
            FitSpec::Rdeu => logit(BenchmarkFamily::Rdeu {
                alpha: theta[1],
                beta: theta[2],
                lambda: theta[3],
            }),
            FitSpec::Cpt => logit(BenchmarkFamily::Cpt {
                alpha: theta[1],
                beta: theta[2],
                lambda: theta[3],
                chi: theta[4],
                nu: theta[5],
            }),
            FitSpec::L1Complexity { beta, psi_free } => ChoiceModel::Complexity {
                utility: UtilityModel::LinearAttributes {
                    beta: beta.clone().unwrap_or_else(|| vec![1.0; attrs]),
                },
                curve: curve(theta[0], theta[1], psi_free.then(|| theta[2]))?,
            },
            FitSpec::CpfComplexity {
                period_days,
                psi_free,
            } => ChoiceModel::Complexity {
                utility: UtilityModel::ExponentialDiscount {
                    delta: theta[0],
                    period_days: *period_days,
                },
                curve: curve(theta[1], theta[2], psi_free.then(|| theta[3]))?,
            },
            FitSpec::CdfComplexity {
                curvature,
                psi_free,
            } => {
                let alpha = if *curvature {
                    theta[theta.len() - 1]
                } else {
                    1.0
                };
                ChoiceModel::Complexity {
                    utility: UtilityModel::CrraSymmetric { alpha },
                    curve: curve(theta[0], theta[1], psi_free.then(|| theta[2]))?,
                }
            }
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub starts: usize,
    pub max_iters: u64,
    /// Simplex termination: standard deviation of vertex objectives.
    pub tolerance: f64,
    /// Simplex restarts from the incumbent after convergence.
    pub restarts: usize,
    /// Standard deviation of random starts around the default point, on the
    /// unbounded scale.
    pub spread: f64,
    pub seed: u64,
    pub loss: Loss,
    /// Natural-scale starting points tried before the default and random
    /// starts.
    pub initial_points: Vec<Vec<f64>>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            starts: 20,
            max_iters: 4000,
            tolerance: 1e-12,
            restarts: 2,
            spread: 1.0,
            seed: 0,
            loss: Loss::Nll,
            initial_points: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedParam {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: FitSpec,
    pub params: Vec<FittedParam>,
    pub objective: f64,
    pub predictions: PredictionRule,
    /// Index of the winning start; initial points come first.
    pub start_index: usize,
    /// Best objective among the start points themselves.
    pub best_start_objective: f64,
}

impl FitResult {
    pub fn values(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.value).collect()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }
}

/// Fit on a dataset plus its in-sample log-likelihood and R².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub fit: FitResult,
    pub nll: f64,
    /// `None` when choice rates have zero variance.
    pub r2: Option<f64>,
}

struct Objective<'a> {
    spec: &'a FitSpec,
    defs: Vec<ParamDef>,
    problems: &'a [(Alternative, Alternative)],
    targets: &'a [f64],
    weights: &'a [f64],
    loss: Loss,
    attrs: usize,
}

impl Objective<'_> {
    fn natural(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.defs)
            .map(|(u, d)| d.transform.to_natural(*u))
            .collect()
    }

    fn predict(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let model = self.spec.build(theta, self.attrs)?;
        self.problems
            .iter()
            .map(|(x, y)| rho(&model, x, y))
            .collect()
    }

    fn eval(&self, u: &[f64]) -> f64 {
        let v = self
            .predict(&self.natural(u))
            .and_then(|p| loss_value(self.loss, &p, self.targets, self.weights))
            .unwrap_or(f64::INFINITY);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, u: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.eval(u))
    }
}

fn simplex_search(obj: &Objective<'_>, u0: Vec<f64>, cfg: &FitConfig) -> (Vec<f64>, f64) {
    let mut best = (u0.clone(), obj.eval(&u0));
    for _ in 0..=cfg.restarts {
        let mut vertices = vec![best.0.clone()];
        for i in 0..best.0.len() {
            let mut v = best.0.clone();
            v[i] += 0.5;
            vertices.push(v);
        }
        let Ok(solver) = NelderMead::new(vertices).with_sd_tolerance(cfg.tolerance) else {
            break;
        };
        let Ok(res) = Executor::new(obj_ref(obj), solver)
            .configure(|s| s.max_iters(cfg.max_iters))
            .run()
        else {
            break;
        };
        let state = res.state();
        let cost = state.get_best_cost();
        match state.get_best_param() {
            Some(u) if cost < best.1 => {
                let gain = best.1 - cost;
                best = (u.clone(), cost);
                if gain <= cfg.tolerance {
                    break;
                }
            }
            _ => break,
        }
    }
    best
}

/// Borrowing wrapper so the executor can own a cost function.
struct ObjRef<'a, 'b>(&'a Objective<'b>);

fn obj_ref<'a, 'b>(o: &'a Objective<'b>) -> ObjRef<'a, 'b> {
    ObjRef(o)
}

impl CostFunction for ObjRef<'_, '_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, u: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        self.0.cost(u)
    }
}

fn check_domain(spec: &FitSpec, problems: &[(Alternative, Alternative)]) -> Result<usize> {
    if problems.is_empty() {
        return invalid("no problems to fit");
    }
    if let Some(d) = spec.domain() {
        if let Some((x, _)) = problems
            .iter()
            .find(|(x, y)| x.domain() != d || y.domain() != d)
        {
            return Err(Error::DomainMismatch(format!(
                "{spec:?} cannot be fit to {:?} problems",
                x.domain()
            )));
        }
    }
    Ok(match &problems[0].0 {
        Alternative::Attributes(a) => a.len(),
        _ => 0,
    })
}

/// Minimizes `cfg.loss` of the family's predictions against `targets`.
///
/// Starts are the configured initial points, the template default, then
/// random perturbations of the default; each is refined by a Nelder–Mead
/// search on the unbounded scale. The best objective wins, ties going to the
/// lowest start index.
pub fn fit_targets(
    spec: &FitSpec,
    problems: &[(Alternative, Alternative)],
    targets: &[f64],
    weights: &[f64],
    cfg: &FitConfig,
) -> Result<FitResult> {
    let attrs = check_domain(spec, problems)?;
    if targets.len() != problems.len() {
        return Err(Error::LengthMismatch {
            expected: problems.len(),
            got: targets.len(),
        });
    }
    if weights.len() != problems.len() {
        return Err(Error::LengthMismatch {
            expected: problems.len(),
            got: weights.len(),
        });
    }
    if let Some(t) = targets.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::OutOfRange(format!("target rate {t} outside [0, 1]")));
    }
    if spec.is_closed_form() {
        let (params, probs) = match spec {
            FitSpec::ConstantRate => {
                let rate = targets.iter().zip(weights).map(|(t, w)| t * w).sum::<f64>()
                    / weights.iter().sum::<f64>();
                (
                    vec![FittedParam {
                        name: "rate".into(),
                        value: rate,
                    }],
                    vec![rate; targets.len()],
                )
            }
            _ => (Vec::new(), targets.to_vec()),
        };
        let objective = loss_value(cfg.loss, &probs, targets, weights)?;
        return Ok(FitResult {
            spec: spec.clone(),
            params,
            objective,
            predictions: PredictionRule::new(probs)?,
            start_index: 0,
            best_start_objective: objective,
        });
    }

    let defs = spec.params();
    let obj = Objective {
        spec,
        defs: defs.clone(),
        problems,
        targets,
        weights,
        loss: cfg.loss,
        attrs,
    };
    let mut starts = Vec::new();
    for point in &cfg.initial_points {
        if point.len() != defs.len() {
            return Err(Error::LengthMismatch {
                expected: defs.len(),
                got: point.len(),
            });
        }
        starts.push(
            point
                .iter()
                .zip(&defs)
                .map(|(x, d)| d.transform.to_unbounded(*x))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let u_default = defs
        .iter()
        .map(|d| d.transform.to_unbounded(d.init))
        .collect::<Result<Vec<_>>>()?;
    starts.push(u_default.clone());
    let total = cfg.starts.max(starts.len());
    for k in starts.len()..total {
        let mut rng = chunk_rng(cfg.seed, k as u64);
        starts.push(
            u_default
                .iter()
                .map(|u| u + cfg.spread * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect(),
        );
    }

    let runs = map_indexed(starts.len(), |k| {
        let start_value = obj.eval(&starts[k]);
        if !start_value.is_finite() {
            return (start_value, start_value, starts[k].clone());
        }
        let (u, v) = simplex_search(&obj, starts[k].clone(), cfg);
        (start_value, v, u)
    });
    let best_start_objective = runs.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let (start_index, (_, objective, u)) = runs
        .into_iter()
        .enumerate()
        .filter(|(_, r)| r.1.is_finite())
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.0.cmp(&b.0)))
        .ok_or_else(|| {
            Error::NonConvergence(format!("{spec:?}: objective non-finite at every start"))
        })?;
    let theta = obj.natural(&u);
    let predictions = PredictionRule::new(obj.predict(&theta)?)?;
    Ok(FitResult {
        spec: spec.clone(),
        params: defs
            .iter()
            .zip(&theta)
            .map(|(d, v)| FittedParam {
                name: d.name.into(),
                value: *v,
            })
            .collect(),
        objective,
        predictions,
        start_index,
        best_start_objective,
    })
}

/// Maximum-likelihood fit on a dataset (the configured loss is replaced by
/// the log-likelihood).
pub fn fit(spec: &FitSpec, data: &ChoiceDataset, cfg: &FitConfig) -> Result<FitReport> {
    let cfg = FitConfig {
        loss: Loss::Nll,
        ..cfg.clone()
    };
    let (rates, weights) = (data.rates(), data.weights());
    let fit = fit_targets(spec, &data.problems(), &rates, &weights, &cfg)?;
    let r2 = weighted_r2_raw(fit.predictions.probs(), &rates, &weights).ok();
    Ok(FitReport {
        nll: fit.objective,
        r2,
        fit,
    })
}

/// Start point for `to` taken from a fitted nested model: shared parameter
/// names are copied, others take their template defaults (β_qh = 1, ψ = 1,
/// α = 1, which recover the nested model).
pub fn warm_start(from: &FitResult, to: &FitSpec) -> Vec<f64> {
    to.params()
        .iter()
        .map(|d| from.get(d.name).unwrap_or(d.init))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AttributeVector, PayoffFlow};
    use crate::estimation::ChoiceObservation;
    use approx::assert_abs_diff_eq;

    #[test]
    fn transforms_round_trip() {
        for (t, xs) in [
            (Transform::Positive, vec![1e-3, 1.0, 40.0]),
            (Transform::Unit, vec![0.01, 0.5, 0.96]),
            (Transform::HalfUnit, vec![0.03, 0.25, 0.49]),
            (Transform::BelowOne, vec![-3.0, 0.0, 0.99]),
        ] {
            for x in xs {
                assert_abs_diff_eq!(t.to_natural(t.to_unbounded(x).unwrap()), x, epsilon = 1e-12);
            }
        }
        assert!(Transform::Unit.to_unbounded(1.5).is_err());
        assert!(Transform::HalfUnit.to_natural(-50.0) >= 0.0);
    }

    #[test]
    fn every_template_builds_at_defaults() {
        let specs = [
            FitSpec::DistortionFree,
            FitSpec::Salience,
            FitSpec::Focusing,
            FitSpec::RelativeThinking,
            FitSpec::Edu { period_days: 30.0 },
            FitSpec::Qdu { period_days: 30.0 },
            FitSpec::Hdu { period_days: 30.0 },
            FitSpec::Eu,
            FitSpec::Rdeu,
            FitSpec::Cpt,
            FitSpec::L1Complexity {
                beta: None,
                psi_free: true,
            },
            FitSpec::CpfComplexity {
                period_days: 30.0,
                psi_free: false,
            },
            FitSpec::CdfComplexity {
                curvature: true,
                psi_free: true,
            },
        ];
        for s in specs {
            let init: Vec<f64> = s.params().iter().map(|d| d.init).collect();
            let m = s.build(&init, 3).unwrap();
            assert_eq!(Some(m.domain()), s.domain());
        }
    }

    fn symmetric_attribute_data() -> ChoiceDataset {
        let a = |v: [f64; 2]| Alternative::from(AttributeVector::new(v.to_vec()).unwrap());
        ChoiceDataset::new(vec![
            ChoiceObservation::new(a([1.0, 2.0]), a([2.0, 1.0]), 10, 3).unwrap(),
            ChoiceObservation::new(a([2.0, 1.0]), a([1.0, 2.0]), 10, 7).unwrap(),
            ChoiceObservation::new(a([0.0, 3.0]), a([3.0, 0.0]), 20, 10).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn distortion_free_on_zero_value_differences() {
        let d = symmetric_attribute_data();
        let r = fit(
            &FitSpec::DistortionFree,
            &d,
            &FitConfig {
                starts: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.fit.predictions.probs().iter().all(|p| *p == 0.5));
        assert_abs_diff_eq!(r.r2.unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn domain_mismatch_rejected() {
        let d = symmetric_attribute_data();
        assert!(matches!(
            fit(&FitSpec::Eu, &d, &FitConfig::default()),
            Err(Error::DomainMismatch(_))
        ));
    }

    #[test]
    fn constant_and_saturated_closed_forms() {
        let d = symmetric_attribute_data();
        let c = fit(&FitSpec::ConstantRate, &d, &FitConfig::default()).unwrap();
        assert_abs_diff_eq!(c.fit.get("rate").unwrap(), 0.5, epsilon = 1e-15);
        let s = fit(&FitSpec::Saturated, &d, &FitConfig::default()).unwrap();
        assert_eq!(s.fit.predictions.probs(), &d.rates()[..]);
        assert_abs_diff_eq!(s.r2.unwrap(), 1.0);
    }

    #[test]
    fn edu_recovers_and_qdu_nests() {
        let flow = |t: f64, m: f64| Alternative::from(PayoffFlow::single(t, m).unwrap());
        let mut problems = Vec::new();
        for i in 0..30 {
            let t = 30.0 + 12.0 * i as f64;
            problems.push((
                flow(0.0, 10.0 + (i % 7) as f64),
                flow(t, 14.0 + (i % 5) as f64),
            ));
        }
        let truth = ChoiceModel::Logit {
            family: BenchmarkFamily::Edu {
                delta: 0.95,
                period_days: 30.0,
            },
            eta: 0.8,
        };
        let data = ChoiceDataset::simulate(&truth, &problems, 400, 3).unwrap();
        let cfg = FitConfig {
            starts: 4,
            ..Default::default()
        };
        let edu = fit(&FitSpec::Edu { period_days: 30.0 }, &data, &cfg).unwrap();
        assert!(
            (edu.fit.get("delta").unwrap() - 0.95).abs() < 0.01,
            "{:?}",
            edu.fit.params
        );
        assert!(edu.fit.objective <= edu.fit.best_start_objective);
        let qdu_spec = FitSpec::Qdu { period_days: 30.0 };
        let start = warm_start(&edu.fit, &qdu_spec);
        assert_eq!(start[2], 1.0);
        let qdu = fit(
            &qdu_spec,
            &data,
            &FitConfig {
                initial_points: vec![start],
                ..cfg
            },
        )
        .unwrap();
        assert!(qdu.nll <= edu.nll, "{} > {}", qdu.nll, edu.nll);
    }

    #[test]
    fn multistart_is_deterministic() {
        let d = symmetric_attribute_data();
        let cfg = FitConfig {
            starts: 6,
            seed: 11,
            ..Default::default()
        };
        let a = fit(&FitSpec::RelativeThinking, &d, &cfg).unwrap();
        let b = fit(&FitSpec::RelativeThinking, &d, &cfg).unwrap();
        assert_eq!(a, b);
    }
}

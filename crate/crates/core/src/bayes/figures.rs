//! Simulation builders for the valuation and context-effect figures.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::pricelist::{
    build_adapted_list, list_inputs, simulate_switching_tau, valuation_summary, ListKind,
    ListParams, ValuationSummary, TE_GRID_DAYS,
};
use super::prior::PriorSpec;
use super::structure::{simulate_choice, ComparisonStructure};
use crate::complexity::GCurve;
use crate::domain::{Alternative, AttributeVector, Lottery, PayoffFlow, UtilityModel};
use crate::error::{Error, Result};
use crate::par::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FigureId {
    CePeReversal,
    PveTeReversal,
    Pwf,
    PwfPe,
    DiscountPve,
    DiscountTe,
    HyperbolicAppendix,
    DecoyCases,
}

impl FigureId {
    pub const ALL: [FigureId; 8] = [
        FigureId::CePeReversal,
        FigureId::PveTeReversal,
        FigureId::Pwf,
        FigureId::PwfPe,
        FigureId::DiscountPve,
        FigureId::DiscountTe,
        FigureId::HyperbolicAppendix,
        FigureId::DecoyCases,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FigureId::CePeReversal => "ce-pe-reversal",
            FigureId::PveTeReversal => "pve-te-reversal",
            FigureId::Pwf => "pwf",
            FigureId::PwfPe => "pwf-pe",
            FigureId::DiscountPve => "discount-pve",
            FigureId::DiscountTe => "discount-te",
            FigureId::HyperbolicAppendix => "hyperbolic-appendix",
            FigureId::DecoyCases => "decoy-cases",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown figure id '{s}'")))
    }
}

/// Figure parameters. Every field has a default matching the figure
/// captions; unspecified grids use the experimental designs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FigureConfig {
    pub draws: usize,
    pub kappa: f64,
    pub gamma: f64,
    pub list_size: usize,
    pub prior: PriorSpec,
    /// Risk curvature values for the CE/PE reversal figure.
    pub alphas: Vec<f64>,
    /// Expected value shared by the reversal lotteries.
    pub reversal_expected_value: f64,
    /// Payout probabilities for the reversal figure.
    pub reversal_probs: Vec<f64>,
    pub pe_yardstick: f64,
    pub pwf_payment: f64,
    pub pwf_alpha: f64,
    pub pwf_probs: Vec<f64>,
    pub delta: f64,
    pub period_days: f64,
    pub te_yardstick: f64,
    pub te_grid_days: Vec<f64>,
    /// Anchor (amount, delay days) whose present value the reversal
    /// payments share.
    pub reversal_anchor: (f64, f64),
    pub reversal_delays: Vec<f64>,
    pub pve_delays: Vec<f64>,
    pub te_ratios: Vec<f64>,
    pub hyperbolic_iota: f64,
    pub hyperbolic_zetas: Vec<f64>,
    pub hyperbolic_period_days: f64,
}

impl Default for FigureConfig {
    fn default() -> Self {
        let unit = vec![0.03, 0.05, 0.10, 0.25, 0.5, 0.75, 0.90, 0.95, 0.97];
        Self {
            draws: 100_000,
            kappa: 0.0,
            gamma: 0.5,
            list_size: 15,
            prior: PriorSpec::Uniform01,
            alphas: vec![1.0, 0.9],
            reversal_expected_value: 23.5 * 0.19,
            reversal_probs: (0..16).map(|k| 0.19 + 0.05 * k as f64).collect(),
            pe_yardstick: 24.0,
            pwf_payment: 24.0,
            pwf_alpha: 1.0,
            pwf_probs: unit.clone(),
            delta: 0.95,
            period_days: 30.0,
            te_yardstick: 27.5,
            te_grid_days: TE_GRID_DAYS.to_vec(),
            reversal_anchor: (8.25, 30.0),
            reversal_delays: vec![30.0, 60.0, 120.0, 240.0, 360.0, 480.0, 600.0, 720.0],
            pve_delays: vec![7.0, 30.0, 60.0, 120.0, 240.0, 360.0, 480.0, 720.0, 1080.0],
            te_ratios: vec![0.20, 0.35, 0.50, 0.65, 0.75, 0.85, 0.90, 0.95, 0.97],
            hyperbolic_iota: 0.159,
            hyperbolic_zetas: vec![0.06, 0.12, 0.24],
            hyperbolic_period_days: 24.0,
        }
    }
}

impl FigureConfig {
    pub fn curve(&self) -> Result<GCurve> {
        GCurve::two_param(self.kappa, self.gamma)
    }

    fn exponential(&self) -> UtilityModel {
        UtilityModel::ExponentialDiscount {
            delta: self.delta,
            period_days: self.period_days,
        }
    }

    fn te_params(&self) -> ListParams {
        ListParams {
            yardstick_payment: Some(self.te_yardstick),
            delay_grid: Some(self.te_grid_days.clone()),
        }
    }
}

/// One simulated point: `mean` and `se` of the simulated quantity and the
/// distortion-free `reference` value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub series: String,
    pub x: f64,
    pub mean: f64,
    pub se: f64,
    pub reference: f64,
    pub excluded_mass: f64,
}

/// Mean valuation of `anchor` on an adapted list of the given kind.
pub fn valuation_point(
    anchor: &Alternative,
    kind: ListKind,
    params: &ListParams,
    model: &UtilityModel,
    cfg: &FigureConfig,
    seed: u64,
) -> Result<ValuationSummary> {
    let n = if kind == ListKind::TimeEquivalent {
        params
            .delay_grid
            .as_ref()
            .map(|g| g.len())
            .unwrap_or(TE_GRID_DAYS.len())
    } else {
        cfg.list_size
    };
    let list = build_adapted_list(kind, anchor, n, params)?;
    let (v_x, values, taus) = list_inputs(anchor, &list, model, &cfg.curve()?)?;
    let dist = simulate_switching_tau(v_x, &values, &taus, cfg.draws, seed, &cfg.prior)?;
    valuation_summary(&dist, &list)
}

fn row(series: String, x: f64, s: ValuationSummary, scale: f64, reference: f64) -> FigureRow {
    FigureRow {
        series,
        x,
        mean: s.mean / scale,
        se: s.se / scale,
        reference,
        excluded_mass: s.excluded_mass,
    }
}

/// Simulates a figure's data. Point `i` uses the seed stream derived from
/// (`seed`, `i`), so output is a deterministic function of config and seed.
pub fn simulate_figure(id: FigureId, cfg: &FigureConfig, seed: u64) -> Result<Vec<FigureRow>> {
    if cfg.draws == 0 {
        return Err(Error::Invalid("draws must be positive".into()));
    }
    let mut rows = Vec::new();
    let mut point = 0u64;
    let mut next_seed = || {
        point += 1;
        derive_seed(seed, point)
    };
    match id {
        FigureId::CePeReversal => {
            let pe = ListParams {
                yardstick_payment: Some(cfg.pe_yardstick),
                delay_grid: None,
            };
            for &alpha in &cfg.alphas {
                let u = UtilityModel::CrraSymmetric { alpha };
                for &p in &cfg.reversal_probs {
                    let w = cfg.reversal_expected_value / p;
                    let l = Alternative::Lottery(Lottery::simple(w, p)?);
                    let eu = p * w.powf(alpha);
                    let s = valuation_point(
                        &l,
                        ListKind::CertaintyEquivalent,
                        &ListParams::default(),
                        &u,
                        cfg,
                        next_seed(),
                    )?;
                    rows.push(row(
                        format!("ce/alpha={alpha}"),
                        p,
                        s,
                        1.0,
                        eu.powf(1.0 / alpha),
                    ));
                    let s = valuation_point(
                        &l,
                        ListKind::ProbabilityEquivalent,
                        &pe,
                        &u,
                        cfg,
                        next_seed(),
                    )?;
                    rows.push(row(
                        format!("pe/alpha={alpha}"),
                        p,
                        s,
                        1.0,
                        eu / cfg.pe_yardstick.powf(alpha),
                    ));
                }
            }
        }
        FigureId::PveTeReversal => {
            let m = cfg.exponential();
            let (m0, t0) = cfg.reversal_anchor;
            let pv = m0 * cfg.delta.powf(t0 / cfg.period_days);
            let te_star = cfg.period_days * (pv / cfg.te_yardstick).ln() / cfg.delta.ln();
            for &t in &cfg.reversal_delays {
                let amount = pv / cfg.delta.powf(t / cfg.period_days);
                let f = Alternative::Flow(PayoffFlow::single(t, amount)?);
                let s = valuation_point(
                    &f,
                    ListKind::PresentValueEquivalent,
                    &ListParams::default(),
                    &m,
                    cfg,
                    next_seed(),
                )?;
                rows.push(row("pve".into(), t, s, 1.0, pv));
                let s = valuation_point(
                    &f,
                    ListKind::TimeEquivalent,
                    &cfg.te_params(),
                    &m,
                    cfg,
                    next_seed(),
                )?;
                rows.push(row("te".into(), t, s, 1.0, te_star));
            }
        }
        FigureId::Pwf => {
            let u = UtilityModel::CrraSymmetric {
                alpha: cfg.pwf_alpha,
            };
            for &p in &cfg.pwf_probs {
                let l = Alternative::Lottery(Lottery::simple(cfg.pwf_payment, p)?);
                let s = valuation_point(
                    &l,
                    ListKind::CertaintyEquivalent,
                    &ListParams::default(),
                    &u,
                    cfg,
                    next_seed(),
                )?;
                rows.push(row(
                    "ce".into(),
                    p,
                    s,
                    cfg.pwf_payment,
                    p.powf(1.0 / cfg.pwf_alpha),
                ));
            }
        }
        FigureId::PwfPe => {
            let u = UtilityModel::CrraSymmetric {
                alpha: cfg.pwf_alpha,
            };
            let pe = ListParams {
                yardstick_payment: Some(cfg.pwf_payment),
                delay_grid: None,
            };
            for &ratio in &cfg.pwf_probs {
                let c = Alternative::Lottery(Lottery::certain(ratio * cfg.pwf_payment)?);
                let s = valuation_point(
                    &c,
                    ListKind::ProbabilityEquivalent,
                    &pe,
                    &u,
                    cfg,
                    next_seed(),
                )?;
                rows.push(row("pe".into(), ratio, s, 1.0, ratio.powf(cfg.pwf_alpha)));
            }
        }
        FigureId::DiscountPve => {
            let m = cfg.exponential();
            for &t in &cfg.pve_delays {
                let f = Alternative::Flow(PayoffFlow::single(t, cfg.te_yardstick)?);
                let s = valuation_point(
                    &f,
                    ListKind::PresentValueEquivalent,
                    &ListParams::default(),
                    &m,
                    cfg,
                    next_seed(),
                )?;
                rows.push(row(
                    "pve".into(),
                    t,
                    s,
                    cfg.te_yardstick,
                    cfg.delta.powf(t / cfg.period_days),
                ));
            }
        }
        FigureId::DiscountTe => {
            let m = cfg.exponential();
            for &ratio in &cfg.te_ratios {
                let c = Alternative::Flow(PayoffFlow::single(0.0, ratio * cfg.te_yardstick)?);
                let s = valuation_point(
                    &c,
                    ListKind::TimeEquivalent,
                    &cfg.te_params(),
                    &m,
                    cfg,
                    next_seed(),
                )?;
                let te_star = cfg.period_days * ratio.ln() / cfg.delta.ln();
                rows.push(row("te".into(), ratio, s, 1.0, te_star));
            }
        }
        FigureId::HyperbolicAppendix => {
            let (iota, p) = (cfg.hyperbolic_iota, cfg.hyperbolic_period_days);
            for &zeta in &cfg.hyperbolic_zetas {
                let m = UtilityModel::GeneralizedHyperbolic {
                    iota,
                    zeta,
                    period_days: p,
                };
                let d = m.discount()?;
                for &t in &cfg.pve_delays {
                    let f = Alternative::Flow(PayoffFlow::single(t, cfg.te_yardstick)?);
                    let s = valuation_point(
                        &f,
                        ListKind::PresentValueEquivalent,
                        &ListParams::default(),
                        &m,
                        cfg,
                        next_seed(),
                    )?;
                    rows.push(row(
                        format!("pve/zeta={zeta}"),
                        t,
                        s,
                        cfg.te_yardstick,
                        d.eval(t),
                    ));
                }
                for &ratio in &cfg.te_ratios {
                    let c = Alternative::Flow(PayoffFlow::single(0.0, ratio * cfg.te_yardstick)?);
                    let s = valuation_point(
                        &c,
                        ListKind::TimeEquivalent,
                        &cfg.te_params(),
                        &m,
                        cfg,
                        next_seed(),
                    )?;
                    let te_star = p * (ratio.powf(-iota / zeta) - 1.0) / iota;
                    rows.push(row(format!("te/zeta={zeta}"), ratio, s, 1.0, te_star));
                }
            }
        }
        FigureId::DecoyCases => {
            for (k, est) in decoy_cases(cfg, seed)?.into_iter().enumerate() {
                rows.push(FigureRow {
                    series: format!("case{}", k + 1),
                    x: (k + 1) as f64,
                    mean: est.0,
                    se: est.1,
                    reference: 0.5,
                    excluded_mass: 0.0,
                });
            }
        }
    }
    Ok(rows)
}

/// Decoys for x = (1,2), y = (2,1) with unit weights: z = (1.8,0.8),
/// z' = (1.5,1.1), z'' = (0.8,0.5). Returns (ρ(y,x|{z}), se) per case.
pub fn decoy_cases(cfg: &FigureConfig, seed: u64) -> Result<Vec<(f64, f64)>> {
    let model = UtilityModel::LinearAttributes {
        beta: vec![1.0, 1.0],
    };
    let curve = cfg.curve()?;
    let a = |v: [f64; 2]| AttributeVector::new(v.to_vec()).map(Alternative::from);
    let decoys = [[1.8, 0.8], [1.5, 1.1], [0.8, 0.5]];
    decoys
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let opts = [a([1.0, 2.0])?, a([2.0, 1.0])?, a(*z)?];
            let s = ComparisonStructure::from_options(&opts, &model, &curve)?;
            let est = simulate_choice(
                &s,
                &[0, 1],
                &[2],
                cfg.draws,
                derive_seed(seed, 1000 + k as u64),
                &cfg.prior,
            )?;
            Ok((est.probs[1], est.se[1]))
        })
        .collect()
}

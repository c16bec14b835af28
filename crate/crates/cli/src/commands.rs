use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tradeoff_core::bayes::figures::{simulate_figure, FigureConfig, FigureId};
use tradeoff_core::complexity::{signed_ratio, GCurve};
use tradeoff_core::domain::{dominates, UtilityModel};
use tradeoff_core::estimation::{completeness_index, fit, FitConfig, FitReport, FitSpec};
use tradeoff_core::market::{
    duopoly_equilibrium, duopoly_profit, location_stage_outcome, price_grid,
    three_firm_equilibrium, verify_equilibrium, DuopolyEquilibrium, LocationOutcome, MarketConfig,
    SearchConfig, ThreeFirmEquilibrium,
};

use crate::input::{read_table, DomainArg};
use crate::output::{num, opt_num, write_csv, write_json, Metadata};

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

/// Reads a JSON config, or the type's defaults when no path is given.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    path.map_or_else(|| Ok(T::default()), read_json)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatioConfig {
    /// Preference parameters; the domain's default when absent.
    pub utility: Option<UtilityModel>,
}

#[derive(Serialize)]
struct RatioEcho<'a> {
    domain: DomainArg,
    input: &'a str,
    utility: &'a UtilityModel,
}

pub fn ratio(
    input: &Path,
    domain: DomainArg,
    cfg: RatioConfig,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let table = read_table(input, domain)?;
    let utility = cfg
        .utility
        .unwrap_or_else(|| domain.default_utility(table.attrs));
    let mut rows = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let r = signed_ratio(&row.a, &row.b, &utility)
            .with_context(|| format!("problem '{}'", row.problem_id))?;
        let dom = dominates(&row.a, &row.b, &utility)? || dominates(&row.b, &row.a, &utility)?;
        rows.push(vec![
            row.problem_id.clone(),
            num(r.value_diff),
            num(r.dissimilarity),
            num(r.r),
            u8::from(dom).to_string(),
        ]);
    }
    let echo = RatioEcho {
        domain,
        input: &input.to_string_lossy(),
        utility: &utility,
    };
    let meta = Metadata::new("ratio", seed, &echo)?;
    let header = [
        "problem_id",
        "value_diff",
        "dissimilarity",
        "ratio",
        "dominance_flag",
    ]
    .map(String::from);
    write_csv(out, &meta, &header, &rows)
}

#[derive(Serialize)]
struct FigureEcho<'a> {
    figure: &'a str,
    #[serde(flatten)]
    config: &'a FigureConfig,
}

pub fn figure(id: &str, cfg: FigureConfig, seed: u64, out: &Path) -> Result<()> {
    let id: FigureId = id.parse()?;
    let rows = simulate_figure(id, &cfg, seed)?;
    let meta = Metadata::new(
        "simulate-figure",
        seed,
        &FigureEcho {
            figure: id.name(),
            config: &cfg,
        },
    )?;
    let header = ["series", "x", "mean", "se", "reference", "excluded_mass"].map(String::from);
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.series.clone(),
                num(r.x),
                num(r.mean),
                num(r.se),
                num(r.reference),
                num(r.excluded_mass),
            ]
        })
        .collect();
    write_csv(out, &meta, &header, &body)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitRunConfig {
    pub families: Vec<FitSpec>,
    pub fit: FitConfig,
    /// Irreducible loss for the completeness column; left blank when absent.
    pub e_star: Option<f64>,
    /// Benchmark whose loss anchors completeness at 0.
    pub completeness_base: FitSpec,
}

impl Default for FitRunConfig {
    fn default() -> Self {
        Self {
            families: Vec::new(),
            fit: FitConfig::default(),
            e_star: None,
            completeness_base: FitSpec::ConstantRate,
        }
    }
}

/// Parses a kebab-case family name such as `cpf-complexity`.
pub fn family_from_name(name: &str) -> Result<FitSpec> {
    serde_json::from_value(serde_json::json!({ "model": name.trim() }))
        .with_context(|| format!("unknown model family '{name}'"))
}

#[derive(Serialize)]
struct FitEcho<'a> {
    domain: DomainArg,
    input: &'a str,
    #[serde(flatten)]
    config: &'a FitRunConfig,
}

pub fn fit_cmd(
    input: &Path,
    domain: DomainArg,
    mut cfg: FitRunConfig,
    seed: u64,
    out: &Path,
) -> Result<()> {
    if cfg.families.is_empty() {
        bail!("no model families given");
    }
    cfg.fit.seed = seed;
    let data = read_table(input, domain)?.dataset()?;
    let reports: Vec<FitReport> = cfg
        .families
        .iter()
        .map(|spec| {
            fit(spec, &data, &cfg.fit).with_context(|| format!("fitting {}", spec_name(spec)))
        })
        .collect::<Result<_>>()?;
    let e_base = match cfg.e_star {
        Some(_) => Some(fit(&cfg.completeness_base, &data, &cfg.fit)?.nll),
        None => None,
    };
    let mut names: Vec<String> = Vec::new();
    for r in &reports {
        for p in &r.fit.params {
            if !names.contains(&p.name) {
                names.push(p.name.clone());
            }
        }
    }
    let mut header: Vec<String> = vec!["model".into()];
    header.extend(names.iter().cloned());
    header.extend(["nll", "r2", "completeness", "n_params"].map(String::from));
    let mut rows = Vec::new();
    for r in &reports {
        let mut row = vec![spec_name(&r.fit.spec)];
        row.extend(names.iter().map(|n| opt_num(r.fit.get(n))));
        let completeness = match (e_base, cfg.e_star) {
            (Some(base), Some(star)) => Some(completeness_index(base, r.nll, star)?),
            _ => None,
        };
        row.extend([
            num(r.nll),
            opt_num(r.r2),
            opt_num(completeness),
            r.fit.params.len().to_string(),
        ]);
        rows.push(row);
    }
    let echo = FitEcho {
        domain,
        input: &input.to_string_lossy(),
        config: &cfg,
    };
    write_csv(out, &Metadata::new("fit", seed, &echo)?, &header, &rows)
}

fn spec_name(spec: &FitSpec) -> String {
    serde_json::to_value(spec)
        .ok()
        .and_then(|v| v.get("model").and_then(|m| m.as_str()).map(String::from))
        .unwrap_or_else(|| format!("{spec:?}"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DuopolyConfig {
    pub costs: [f64; 2],
    pub dq: f64,
    pub curve: GCurve,
    pub grid_step: f64,
    /// Deviation grid reaches this far above the higher cost.
    pub grid_span: f64,
}

impl Default for DuopolyConfig {
    fn default() -> Self {
        Self {
            costs: [1.0, 1.0],
            dq: 0.5,
            curve: GCurve::linear(),
            grid_step: 1e-3,
            grid_span: 3.0,
        }
    }
}

#[derive(Serialize)]
struct DuopolyResult {
    equilibrium: DuopolyEquilibrium,
    max_deviation_gain: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThreeFirmConfig {
    pub c: f64,
    pub c_s: f64,
    pub dq: Vec<f64>,
    pub search: SearchConfig,
}

impl Default for ThreeFirmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            c_s: 1.2,
            dq: vec![0.5, 0.6],
            search: SearchConfig::default(),
        }
    }
}

#[derive(Serialize)]
struct ThreeFirmPoint {
    dq: f64,
    equilibrium: ThreeFirmEquilibrium,
}

#[derive(Serialize)]
struct ThreeFirmResult {
    points: Vec<ThreeFirmPoint>,
    /// Whether b's profit falls at each step of the Δq sweep.
    profit_b_decreasing: bool,
}

fn default_stage() -> MarketConfig {
    MarketConfig {
        costs: vec![0.0, 1.0],
        total_quantity: 2.0,
        q_lo: 0.925,
        q_hi: 1.075,
        curve: GCurve::linear(),
    }
}

pub fn market(kind: MarketKind, config: Option<&Path>, seed: u64, out: &Path) -> Result<()> {
    match kind {
        MarketKind::Duopoly => {
            let cfg: DuopolyConfig = load_config(config)?;
            let equilibrium = duopoly_equilibrium(cfg.costs, cfg.dq, &cfg.curve)?;
            let [c0, c1] = cfg.costs;
            let hi = c0.max(c1) + cfg.grid_span;
            let grids = [
                price_grid(c0, hi, cfg.grid_step),
                price_grid(c1, hi, cfg.grid_step),
            ];
            let profit = |i: usize, p: &[f64]| {
                let (ci, cj) = if i == 0 { (c0, c1) } else { (c1, c0) };
                duopoly_profit(p[i], p[1 - i], cfg.dq, &cfg.curve, ci, cj)
            };
            let max_deviation_gain = verify_equilibrium(&equilibrium.prices, profit, &grids)?;
            let meta = Metadata::new("market duopoly", seed, &cfg)?;
            write_json(
                out,
                &meta,
                &DuopolyResult {
                    equilibrium,
                    max_deviation_gain,
                },
            )
        }
        MarketKind::Stage => {
            let cfg: MarketConfig = config.map_or_else(|| Ok(default_stage()), read_json)?;
            cfg.validate()?;
            let outcome: LocationOutcome = location_stage_outcome(&cfg)?;
            write_json(out, &Metadata::new("market stage", seed, &cfg)?, &outcome)
        }
        MarketKind::ThreeFirm => {
            let cfg: ThreeFirmConfig = load_config(config)?;
            let points = cfg
                .dq
                .iter()
                .map(|&dq| {
                    three_firm_equilibrium(dq, cfg.c, cfg.c_s, &cfg.search)
                        .map(|equilibrium| ThreeFirmPoint { dq, equilibrium })
                        .with_context(|| format!("three-firm solver at dq = {dq}"))
                })
                .collect::<Result<Vec<_>>>()?;
            let profit_b_decreasing = points
                .windows(2)
                .all(|w| w[1].equilibrium.profits[1] < w[0].equilibrium.profits[1]);
            let meta = Metadata::new("market three-firm", seed, &cfg)?;
            write_json(
                out,
                &meta,
                &ThreeFirmResult {
                    points,
                    profit_b_decreasing,
                },
            )
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MarketKind {
    Duopoly,
    Stage,
    ThreeFirm,
}

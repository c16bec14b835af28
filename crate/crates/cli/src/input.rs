//! CSV ingestion for the three choice domains.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use tradeoff_core::domain::{Alternative, AttributeVector, Lottery, PayoffFlow, UtilityModel};
use tradeoff_core::estimation::{ChoiceDataset, ChoiceObservation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainArg {
    Multiattribute,
    Lottery,
    Temporal,
}

impl DomainArg {
    /// Utility used when the config names none.
    pub fn default_utility(self, attrs: usize) -> UtilityModel {
        match self {
            DomainArg::Multiattribute => UtilityModel::LinearAttributes {
                beta: vec![1.0; attrs],
            },
            DomainArg::Lottery => UtilityModel::linear_money(),
            DomainArg::Temporal => UtilityModel::ExponentialDiscount {
                delta: 0.95,
                period_days: 30.0,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct Row {
    pub problem_id: String,
    pub trials: u64,
    pub chose_a: u64,
    pub a: Alternative,
    pub b: Alternative,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub rows: Vec<Row>,
    /// Attribute count for multiattribute files, else 0.
    pub attrs: usize,
}

impl Table {
    pub fn dataset(&self) -> Result<ChoiceDataset> {
        let obs = self
            .rows
            .iter()
            .map(|r| ChoiceObservation::new(r.a.clone(), r.b.clone(), r.trials, r.chose_a))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(ChoiceDataset::new(obs)?)
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| anyhow!("missing column '{name}'"))
}

fn number<T: std::str::FromStr>(raw: &str, name: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| anyhow!("column '{name}': cannot parse '{raw}'"))
}

fn list(raw: &str, name: &str) -> Result<Vec<f64>> {
    raw.split(';').map(|v| number::<f64>(v, name)).collect()
}

fn paired(a: &str, b: &str, na: &str, nb: &str) -> Result<Vec<(f64, f64)>> {
    let (xs, ys) = (list(a, na)?, list(b, nb)?);
    if xs.len() != ys.len() {
        bail!(
            "'{na}' has {} entries but '{nb}' has {}",
            xs.len(),
            ys.len()
        );
    }
    Ok(xs.into_iter().zip(ys).collect())
}

pub fn read_table(path: &Path, domain: DomainArg) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let headers = reader.headers().context("missing header row")?.clone();
    let id = column(&headers, "problem_id")?;
    let trials = column(&headers, "n_trials")?;
    let chose = column(&headers, "n_chose_a")?;
    let attr_cols = |side: char| -> Vec<usize> {
        (1..)
            .map_while(|k| column(&headers, &format!("{side}_{k}")).ok())
            .collect()
    };
    let (a_attrs, b_attrs) = (attr_cols('a'), attr_cols('b'));
    let named = |names: [&str; 4]| names.map(|n| column(&headers, n));
    let cols: Vec<usize> = match domain {
        DomainArg::Multiattribute => {
            if a_attrs.is_empty() || a_attrs.len() != b_attrs.len() {
                bail!("multiattribute files need matching a_1..a_k and b_1..b_k columns");
            }
            Vec::new()
        }
        DomainArg::Lottery => named(["a_payoffs", "a_probs", "b_payoffs", "b_probs"])
            .into_iter()
            .collect::<Result<_>>()?,
        DomainArg::Temporal => named(["a_amounts", "a_delays_days", "b_amounts", "b_delays_days"])
            .into_iter()
            .collect::<Result<_>>()?,
    };
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        // Line 1 is the header.
        let line = k + 2;
        let parse = || -> Result<Row> {
            let record = record?;
            let field = |i: usize| record.get(i).unwrap_or("");
            let name = |i: usize| headers.get(i).unwrap_or("").trim();
            let (a, b): (Alternative, Alternative) = match domain {
                DomainArg::Multiattribute => {
                    let side = |cols: &[usize]| -> Result<Alternative> {
                        let v = cols
                            .iter()
                            .map(|&i| number::<f64>(field(i), name(i)))
                            .collect::<Result<Vec<_>>>()?;
                        Ok(AttributeVector::new(v)?.into())
                    };
                    (side(&a_attrs)?, side(&b_attrs)?)
                }
                DomainArg::Lottery => {
                    let side = |pay: usize, prob: usize| -> Result<Alternative> {
                        Ok(
                            Lottery::new(paired(field(pay), field(prob), name(pay), name(prob))?)?
                                .into(),
                        )
                    };
                    (side(cols[0], cols[1])?, side(cols[2], cols[3])?)
                }
                DomainArg::Temporal => {
                    let side = |amt: usize, delay: usize| -> Result<Alternative> {
                        let pairs = paired(field(delay), field(amt), name(delay), name(amt))?;
                        Ok(PayoffFlow::new(pairs)?.into())
                    };
                    (side(cols[0], cols[1])?, side(cols[2], cols[3])?)
                }
            };
            let trials: u64 = number(field(trials), "n_trials")?;
            let chose_a: u64 = number(field(chose), "n_chose_a")?;
            if chose_a > trials {
                bail!("n_chose_a exceeds n_trials");
            }
            Ok(Row {
                problem_id: field(id).to_string(),
                trials,
                chose_a,
                a,
                b,
            })
        };
        rows.push(parse().with_context(|| format!("{}: row at line {line}", path.display()))?);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(Table {
        rows,
        attrs: a_attrs.len(),
    })
}

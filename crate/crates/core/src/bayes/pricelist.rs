use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::prior::{order_stat_means, PriorSpec};
use super::tied;
use crate::complexity::{pair_precision, GCurve, Precision};
use crate::domain::{value, Alternative, Lottery, PayoffFlow, UtilityModel};
use crate::error::{Error, Result};
use crate::par::map_chunks;

/// Default time-equivalent delay grid in days.
pub const TE_GRID_DAYS: [f64; 15] = [
    0.0, 7.0, 30.0, 60.0, 120.0, 180.0, 240.0, 360.0, 480.0, 600.0, 720.0, 900.0, 1080.0, 1260.0,
    1440.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ListKind {
    CertaintyEquivalent,
    ProbabilityEquivalent,
    PresentValueEquivalent,
    TimeEquivalent,
}

/// Ordered price list z¹…zⁿ, best first. `grid` holds the quantity that
/// varies along the list: payment, probability, or absolute delay in days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceList {
    pub kind: ListKind,
    pub entries: Vec<Alternative>,
    pub grid: Vec<f64>,
}

impl PriceList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Yardstick settings for list construction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ListParams {
    /// Payment of the yardstick lottery (PE) or delayed payment (TE).
    pub yardstick_payment: Option<f64>,
    /// TE delays in days before offsetting by the anchor delay.
    pub delay_grid: Option<Vec<f64>>,
}

fn equal_steps(top: f64, bottom: f64, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| bottom + (top - bottom) * (n - k) as f64 / (n - 1) as f64)
        .collect()
}

fn pairing(kind: ListKind, why: &str) -> Error {
    Error::Invalid(format!("{kind:?} list: {why}"))
}

/// Builds a price list adapted to `anchor`: equal steps covering the range
/// between the anchor's extreme outcomes (CE, PVE), yardstick lotteries from
/// the anchor's payout probability down to 0 (PE), or yardstick payments on a
/// delay grid offset by the anchor's delay (TE).
pub fn build_adapted_list(
    kind: ListKind,
    anchor: &Alternative,
    n: usize,
    params: &ListParams,
) -> Result<PriceList> {
    if n < 3 {
        return Err(Error::Invalid(format!("price list needs n >= 3, got {n}")));
    }
    match (kind, anchor) {
        (ListKind::CertaintyEquivalent, Alternative::Lottery(l)) => {
            let lo = l.outcomes().first().unwrap().0;
            let hi = l.outcomes().last().unwrap().0;
            if hi <= lo {
                return Err(pairing(kind, "anchor must have more than one payoff"));
            }
            let grid = equal_steps(hi, lo, n);
            let entries = grid
                .iter()
                .map(|&w| Lottery::certain(w).map(Alternative::from))
                .collect::<Result<_>>()?;
            Ok(PriceList {
                kind,
                entries,
                grid,
            })
        }
        (ListKind::ProbabilityEquivalent, Alternative::Lottery(l)) => {
            let yard = params
                .yardstick_payment
                .ok_or_else(|| pairing(kind, "yardstick payment required"))?;
            let outs = l.outcomes();
            let top = match outs {
                [_] => 1.0,
                [(z, _), (_, p)] if *z == 0.0 => *p,
                _ => {
                    return Err(pairing(
                        kind,
                        "anchor must be a sure payment or a simple lottery",
                    ))
                }
            };
            let hi = outs.last().unwrap().0;
            if !(yard > 0.0 && yard >= hi) {
                return Err(pairing(
                    kind,
                    "yardstick payment must be positive and at least the anchor payoff",
                ));
            }
            let grid = equal_steps(top, 0.0, n);
            let entries = grid
                .iter()
                .map(|&p| Lottery::simple(yard, p).map(Alternative::from))
                .collect::<Result<_>>()?;
            Ok(PriceList {
                kind,
                entries,
                grid,
            })
        }
        (ListKind::PresentValueEquivalent, Alternative::Flow(f)) => {
            if f.payments().iter().any(|p| p.1 <= 0.0) || f.payments().is_empty() {
                return Err(pairing(kind, "anchor must pay positive amounts"));
            }
            let grid = equal_steps(f.total(), 0.0, n);
            let entries = grid
                .iter()
                .map(|&m| PayoffFlow::single(0.0, m).map(Alternative::from))
                .collect::<Result<_>>()?;
            Ok(PriceList {
                kind,
                entries,
                grid,
            })
        }
        (ListKind::TimeEquivalent, Alternative::Flow(f)) => {
            let yard = params
                .yardstick_payment
                .ok_or_else(|| pairing(kind, "yardstick payment required"))?;
            if !(yard > 0.0) {
                return Err(pairing(kind, "yardstick payment must be positive"));
            }
            let base = params
                .delay_grid
                .clone()
                .unwrap_or_else(|| TE_GRID_DAYS.to_vec());
            if base.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: base.len(),
                });
            }
            if base[0] != 0.0 || base.windows(2).any(|w| w[1] <= w[0]) {
                return Err(pairing(
                    kind,
                    "delay grid must start at 0 and increase strictly",
                ));
            }
            let offset = f.payments().last().map(|p| p.0).unwrap_or(0.0);
            let grid: Vec<f64> = base.iter().map(|t| offset + t).collect();
            let entries = grid
                .iter()
                .map(|&t| PayoffFlow::single(t, yard).map(Alternative::from))
                .collect::<Result<_>>()?;
            Ok(PriceList {
                kind,
                entries,
                grid,
            })
        }
        _ => Err(pairing(kind, "anchor domain does not match the list kind")),
    }
}

/// Distribution of the switching index R ∈ {1, …, n+1}; `probs[r − 1]` is
/// P(R = r).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingDistribution {
    pub probs: Vec<f64>,
    pub draws: usize,
    /// True when computed without sampling noise.
    pub exact: bool,
}

impl SwitchingDistribution {
    pub fn mean_r(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    /// Standard error of the mean of R. Computed from the pooled histogram,
    /// which overstates the error of the tie-averaged estimator slightly.
    pub fn se_r(&self) -> f64 {
        if self.exact {
            return 0.0;
        }
        let m = self.mean_r();
        let var: f64 = self
            .probs
            .iter()
            .enumerate()
            .map(|(i, p)| p * ((i + 1) as f64 - m).powi(2))
            .sum();
        (var / self.draws as f64).sqrt()
    }
}

/// Insertion posterior over the rank k ∈ {1..n+1} of x among a perfectly
/// comparable list, given signals τ_j·s_j between x and each entry z^j.
/// Returns p_k for k = 1..=n+1 in O(n).
pub fn insertion_posterior(
    values: &[f64],
    v_x: f64,
    taus: &[Precision],
    ts: &[f64],
) -> Result<Vec<f64>> {
    let n = values.len();
    if taus.len() != n || ts.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: taus.len().min(ts.len()),
        });
    }
    let mut out = vec![0.0; n + 1];
    insertion_into(values, v_x, taus, ts, &mut out);
    Ok(out)
}

/// log p_k = Σ_{j ≥ k} ts_j − Σ_{j < k} ts_j over noisy entries; perfectly
/// comparable entries rule out inconsistent k.
fn insertion_into(values: &[f64], v_x: f64, taus: &[Precision], ts: &[f64], out: &mut [f64]) {
    let n = values.len();
    // Feasible insertion ranks from the hard constraints.
    let (mut lo, mut hi) = (1usize, n + 1);
    for j in 0..n {
        if taus[j].is_perfect() {
            if v_x > values[j] {
                hi = hi.min(j + 1);
            } else {
                lo = lo.max(j + 2);
            }
        }
    }
    let total: f64 = ts
        .iter()
        .zip(taus)
        .filter(|(_, t)| !t.is_perfect())
        .map(|(s, _)| s)
        .sum();
    let mut below = total; // Σ_{j ≥ k} for k = 1
    let mut above = 0.0;
    let mut mx = f64::NEG_INFINITY;
    for k in 1..=n + 1 {
        out[k - 1] = if k >= lo && k <= hi {
            below - above
        } else {
            f64::NEG_INFINITY
        };
        mx = mx.max(out[k - 1]);
        if k <= n && !taus[k - 1].is_perfect() {
            below -= ts[k - 1];
            above += ts[k - 1];
        }
    }
    let mut z = 0.0;
    for w in out.iter_mut() {
        *w = if w.is_finite() { (*w - mx).exp() } else { 0.0 };
        z += *w;
    }
    for w in out.iter_mut() {
        *w /= z;
    }
}

/// Adds the switching distribution implied by one posterior to `hist`.
/// Menus {x, z^j} are decided by comparing posterior means; a tie splits
/// that menu's choice evenly.
fn accumulate_switch(p: &[f64], v: &[f64], hist: &mut [f64], weight: f64) {
    let n = p.len() - 1;
    let ex: f64 = p.iter().zip(v).map(|(a, b)| a * b).sum();
    let mut chosen = 0usize;
    let mut tie = false;
    let mut cum = 0.0; // P(k ≤ j)
    for j in 1..=n {
        cum += p[j - 1];
        let ez = cum * v[j] + (1.0 - cum) * v[j - 1];
        if tied(ez, ex) {
            tie = true;
        } else if ez > ex {
            chosen += 1;
        }
    }
    if tie {
        hist[chosen] += 0.5 * weight;
        hist[chosen + 1] += 0.5 * weight;
    } else {
        hist[chosen] += weight;
    }
}

fn check_list_values(values: &[f64], v_x: f64, taus: &[Precision]) -> Result<()> {
    if values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid(
            "price list values must be strictly decreasing".into(),
        ));
    }
    if values.len() != taus.len() {
        return Err(Error::LengthMismatch {
            expected: values.len(),
            got: taus.len(),
        });
    }
    for (v, t) in values.iter().zip(taus) {
        if t.is_perfect() && *v == v_x {
            return Err(Error::Invalid(
                "perfectly comparable entry has the same value as the target".into(),
            ));
        }
    }
    Ok(())
}

/// Exact switching distribution when no pair carries a noisy signal (every
/// precision is 0 or perfectly comparable).
pub fn switching_analytic(
    v_x: f64,
    values: &[f64],
    taus: &[Precision],
    prior: &PriorSpec,
) -> Result<SwitchingDistribution> {
    check_list_values(values, v_x, taus)?;
    if taus
        .iter()
        .any(|t| matches!(t, Precision::Finite(s) if *s > 0.0))
    {
        return Err(Error::Invalid(
            "analytic path needs all precisions to be 0 or perfect".into(),
        ));
    }
    let n = values.len();
    let v = order_stat_means(n + 1, prior)?;
    let mut p = vec![0.0; n + 1];
    insertion_into(values, v_x, taus, &vec![0.0; n], &mut p);
    let mut hist = vec![0.0; n + 1];
    accumulate_switch(&p, &v, &mut hist, 1.0);
    Ok(SwitchingDistribution {
        probs: hist,
        draws: 0,
        exact: true,
    })
}

/// Monte Carlo switching distribution from values and precisions.
pub fn simulate_switching_tau(
    v_x: f64,
    values: &[f64],
    taus: &[Precision],
    draws: usize,
    seed: u64,
    prior: &PriorSpec,
) -> Result<SwitchingDistribution> {
    check_list_values(values, v_x, taus)?;
    if draws == 0 {
        return Err(Error::Invalid("draws must be positive".into()));
    }
    let n = values.len();
    let v = order_stat_means(n + 1, prior)?;
    let parts = map_chunks(draws, seed, |rng, count| {
        let mut hist = vec![0.0; n + 1];
        let mut ts = vec![0.0; n];
        let mut p = vec![0.0; n + 1];
        for _ in 0..count {
            for j in 0..n {
                ts[j] = match taus[j] {
                    Precision::Finite(t) if t > 0.0 => {
                        let eps: f64 = rng.sample(StandardNormal);
                        let sgn = if v_x > values[j] {
                            1.0
                        } else if v_x < values[j] {
                            -1.0
                        } else {
                            0.0
                        };
                        t * sgn + t.sqrt() * eps
                    }
                    _ => 0.0,
                };
            }
            insertion_into(values, v_x, taus, &ts, &mut p);
            accumulate_switch(&p, &v, &mut hist, 1.0);
        }
        hist
    });
    let mut hist = vec![0.0; n + 1];
    for part in &parts {
        for (h, x) in hist.iter_mut().zip(part) {
            *h += x;
        }
    }
    for h in hist.iter_mut() {
        *h /= draws as f64;
    }
    Ok(SwitchingDistribution {
        probs: hist,
        draws,
        exact: false,
    })
}

/// Values of x and the list entries, and the precision between x and each
/// entry from the domain ratio.
pub fn list_inputs(
    x: &Alternative,
    list: &PriceList,
    model: &UtilityModel,
    curve: &GCurve,
) -> Result<(f64, Vec<f64>, Vec<Precision>)> {
    let v_x = value(x, model)?;
    let values = list
        .entries
        .iter()
        .map(|z| value(z, model))
        .collect::<Result<Vec<_>>>()?;
    let taus = list
        .entries
        .iter()
        .zip(&values)
        .map(|(z, vz)| {
            if *vz == v_x {
                Ok(Precision::Finite(0.0))
            } else {
                pair_precision(x, z, model, curve)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((v_x, values, taus))
}

/// Simulates the switching index of x against a price list, with precisions
/// derived from the domain ratio through `curve`.
pub fn simulate_switching(
    x: &Alternative,
    list: &PriceList,
    model: &UtilityModel,
    curve: &GCurve,
    draws: usize,
    seed: u64,
    prior: &PriorSpec,
) -> Result<SwitchingDistribution> {
    let (v_x, values, taus) = list_inputs(x, list, model, curve)?;
    simulate_switching_tau(v_x, &values, &taus, draws, seed, prior)
}

/// Mean valuation implied by a switching distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValuationSummary {
    pub mean: f64,
    pub se: f64,
    /// Probability of switching indices with no valuation rule; excluded
    /// from `mean`.
    pub excluded_mass: f64,
}

/// Midpoint valuation ½(g_{R−1} + g_R). For time equivalents R = n+1 maps to
/// g_n + ½(g_n − g_{n−1}); other edge indices are excluded and reported.
pub fn valuation_summary(
    dist: &SwitchingDistribution,
    list: &PriceList,
) -> Result<ValuationSummary> {
    let n = list.len();
    if dist.probs.len() != n + 1 {
        return Err(Error::LengthMismatch {
            expected: n + 1,
            got: dist.probs.len(),
        });
    }
    let g = &list.grid;
    let val = |r: usize| -> Option<f64> {
        if r >= 2 && r <= n {
            Some(0.5 * (g[r - 2] + g[r - 1]))
        } else if r == n + 1 && list.kind == ListKind::TimeEquivalent {
            Some(g[n - 1] + 0.5 * (g[n - 1] - g[n - 2]))
        } else {
            None
        }
    };
    let (mut mass, mut s1, mut s2, mut excluded) = (0.0, 0.0, 0.0, 0.0);
    for (i, &p) in dist.probs.iter().enumerate() {
        match val(i + 1) {
            Some(x) => {
                mass += p;
                s1 += p * x;
                s2 += p * x * x;
            }
            None => excluded += p,
        }
    }
    if mass <= 0.0 {
        return Err(Error::Invalid(
            "no switching mass at indices with a valuation rule".into(),
        ));
    }
    let mean = s1 / mass;
    let var = (s2 / mass - mean * mean).max(0.0);
    let se = if dist.exact {
        0.0
    } else {
        (var / (dist.draws as f64 * mass)).sqrt()
    };
    Ok(ValuationSummary {
        mean,
        se,
        excluded_mass: excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adapted_lists() {
        let l = Alternative::Lottery(Lottery::simple(10.0, 0.4).unwrap());
        let ce = build_adapted_list(ListKind::CertaintyEquivalent, &l, 3, &ListParams::default())
            .unwrap();
        assert_eq!(ce.grid, vec![10.0, 5.0, 0.0]);
        let params = ListParams {
            yardstick_payment: Some(24.0),
            delay_grid: None,
        };
        let pe = build_adapted_list(ListKind::ProbabilityEquivalent, &l, 5, &params).unwrap();
        assert_eq!(pe.grid[0], 0.4);
        assert_eq!(pe.grid[4], 0.0);
        let c = Alternative::Lottery(Lottery::certain(6.0).unwrap());
        let pe_c = build_adapted_list(ListKind::ProbabilityEquivalent, &c, 5, &params).unwrap();
        assert_eq!(pe_c.grid, vec![1.0, 0.75, 0.5, 0.25, 0.0]);
        let f = Alternative::Flow(PayoffFlow::single(90.0, 20.0).unwrap());
        let te = build_adapted_list(
            ListKind::TimeEquivalent,
            &f,
            15,
            &ListParams {
                yardstick_payment: Some(27.5),
                delay_grid: None,
            },
        )
        .unwrap();
        assert_eq!(te.grid[0], 90.0);
        assert_eq!(te.grid[14], 90.0 + 1440.0);
        let imm = Alternative::Flow(PayoffFlow::single(0.0, 20.0).unwrap());
        let te0 = build_adapted_list(
            ListKind::TimeEquivalent,
            &imm,
            15,
            &ListParams {
                yardstick_payment: Some(27.5),
                delay_grid: None,
            },
        )
        .unwrap();
        assert_eq!(te0.grid[0], 0.0);
        assert!(build_adapted_list(ListKind::CertaintyEquivalent, &f, 5, &params).is_err());
        assert!(build_adapted_list(ListKind::CertaintyEquivalent, &l, 2, &params).is_err());
    }

    #[test]
    fn insertion_uniform_and_constrained() {
        let vals = [0.9, 0.6, 0.3];
        let p = insertion_posterior(&vals, 0.5, &[Precision::Finite(0.0); 3], &[0.0; 3]).unwrap();
        assert!(p.iter().all(|x| (x - 0.25).abs() < 1e-15));
        let taus = [
            Precision::PerfectlyComparable,
            Precision::Finite(0.0),
            Precision::Finite(0.0),
        ];
        let p = insertion_posterior(&vals, 0.5, &taus, &[0.0; 3]).unwrap();
        assert_eq!(p[0], 0.0);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn valuation_examples() {
        let l = Alternative::Lottery(Lottery::simple(10.0, 0.4).unwrap());
        let ce = build_adapted_list(ListKind::CertaintyEquivalent, &l, 3, &ListParams::default())
            .unwrap();
        let d = SwitchingDistribution {
            probs: vec![0.0, 1.0, 0.0, 0.0],
            draws: 1,
            exact: true,
        };
        assert_eq!(valuation_summary(&d, &ce).unwrap().mean, 7.5);
        let edge = SwitchingDistribution {
            probs: vec![0.0, 0.5, 0.0, 0.5],
            draws: 1,
            exact: true,
        };
        let s = valuation_summary(&edge, &ce).unwrap();
        assert_eq!(s.mean, 7.5);
        assert_eq!(s.excluded_mass, 0.5);

        let f = Alternative::Flow(PayoffFlow::single(0.0, 20.0).unwrap());
        let te = build_adapted_list(
            ListKind::TimeEquivalent,
            &f,
            15,
            &ListParams {
                yardstick_payment: Some(27.5),
                delay_grid: None,
            },
        )
        .unwrap();
        let mut probs = vec![0.0; 16];
        probs[15] = 1.0;
        let top = SwitchingDistribution {
            probs,
            draws: 1,
            exact: true,
        };
        assert_eq!(valuation_summary(&top, &te).unwrap().mean, 1440.0 + 90.0);
    }

    #[test]
    fn uninformative_ce_is_centered() {
        let w = 12.0;
        let l = Alternative::Lottery(Lottery::simple(w, 0.3).unwrap());
        let ce = build_adapted_list(
            ListKind::CertaintyEquivalent,
            &l,
            15,
            &ListParams::default(),
        )
        .unwrap();
        let values: Vec<f64> = ce.grid.clone();
        let taus = vec![Precision::Finite(0.0); 15];
        let d = switching_analytic(w * 0.3, &values, &taus, &PriorSpec::Uniform01).unwrap();
        assert!((d.mean_r() - 8.5).abs() < 1e-12);
        assert!((valuation_summary(&d, &ce).unwrap().mean - w / 2.0).abs() < 1e-12);
    }
}

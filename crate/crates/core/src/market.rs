//! Price competition between firms whose products differ in a
//! two-dimensional quantity profile, with consumers following the L1
//! complexity model.
//!
//! Firms sell the same total quantity, so utility differences are price
//! differences and the L1 distance between offers is Δq + |p_i − p_j|.

use serde::{Deserialize, Serialize};

use crate::complexity::{g_eval, GCurve};
use crate::error::{invalid, Error, Result};
use crate::par::map_indexed;

/// Relative band inside which two prices or profits count as equal.
pub const TIE_BAND: f64 = 1e-12;

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_BAND * 1f64.max(a.abs()).max(b.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub costs: Vec<f64>,
    pub total_quantity: f64,
    pub q_lo: f64,
    pub q_hi: f64,
    #[serde(default = "GCurve::linear")]
    pub curve: GCurve,
}

impl MarketConfig {
    pub fn new(
        costs: Vec<f64>,
        total_quantity: f64,
        q_lo: f64,
        q_hi: f64,
        curve: GCurve,
    ) -> Result<Self> {
        let cfg = Self {
            costs,
            total_quantity,
            q_lo,
            q_hi,
            curve,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.costs.len()) {
            return invalid("market needs two or three firms");
        }
        if self.costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return invalid("costs must be finite and non-negative");
        }
        if !(self.q_lo < self.q_hi) {
            return invalid("q_lo must be below q_hi");
        }
        if !same(self.q_lo + self.q_hi, self.total_quantity) {
            return invalid("q_lo + q_hi must equal the total quantity");
        }
        Ok(())
    }

    /// Largest implementable dissimilarity, 2(q_hi − q_lo).
    pub fn max_dissimilarity(&self) -> f64 {
        2.0 * (self.q_hi - self.q_lo)
    }
}

fn check_dq(dq: f64) -> Result<()> {
    if !(dq.is_finite() && dq >= 0.0) {
        return invalid(format!(
            "quantity dissimilarity {dq} must be finite and >= 0"
        ));
    }
    Ok(())
}

/// Share of firm i against firm j. Identical offers (Δq = 0, equal prices)
/// go to the lower-cost firm, or are split when costs are equal.
pub fn duopoly_demand(
    p_i: f64,
    p_j: f64,
    dq: f64,
    curve: &GCurve,
    c_i: f64,
    c_j: f64,
) -> Result<f64> {
    check_dq(dq)?;
    if !(p_i.is_finite() && p_j.is_finite()) {
        return Err(Error::NonFinite("price".into()));
    }
    let d = dq + (p_i - p_j).abs();
    if d == 0.0 {
        return Ok(if c_i < c_j {
            g_eval(1.0, curve)?
        } else if c_i > c_j {
            g_eval(-1.0, curve)?
        } else {
            0.5
        });
    }
    g_eval(((p_j - p_i) / d).clamp(-1.0, 1.0), curve)
}

pub fn duopoly_profit(
    p_i: f64,
    p_j: f64,
    dq: f64,
    curve: &GCurve,
    c_i: f64,
    c_j: f64,
) -> Result<f64> {
    Ok((p_i - c_i) * duopoly_demand(p_i, p_j, dq, curve, c_i, c_j)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuopolyEquilibrium {
    pub prices: [f64; 2],
    pub shares: [f64; 2],
    pub profits: [f64; 2],
    /// False when the prices are only the symmetric first-order candidate
    /// for a nonlinear curve.
    pub closed_form: bool,
    /// With unequal costs and Δq > 0: whether the high-cost firm's share
    /// and profit both rise with Δq.
    pub high_cost_gains_from_dq: Option<bool>,
}

/// Linear-curve prices for firms with costs (c_lo ≤ c_hi) at dissimilarity
/// Δq > 0: (c_hi + Δq, c_hi + ¼Δq + ¾√(Δq² + 8/9·Δq·Δc)).
pub fn asymmetric_prices(c_lo: f64, c_hi: f64, dq: f64) -> (f64, f64) {
    let dc = c_hi - c_lo;
    (
        c_hi + dq,
        c_hi + 0.25 * dq + 0.75 * (dq * dq + 8.0 / 9.0 * dq * dc).sqrt(),
    )
}

/// Pricing-stage equilibrium for two firms at dissimilarity Δq.
pub fn duopoly_equilibrium(costs: [f64; 2], dq: f64, curve: &GCurve) -> Result<DuopolyEquilibrium> {
    check_dq(dq)?;
    if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return invalid("costs must be finite and non-negative");
    }
    let [c0, c1] = costs;
    let (prices, closed_form) = if curve.is_linear() {
        let (lo, hi) = (c0.min(c1), c0.max(c1));
        let (p_lo, p_hi) = if dq == 0.0 {
            (hi, hi)
        } else {
            asymmetric_prices(lo, hi, dq)
        };
        (if c0 <= c1 { [p_lo, p_hi] } else { [p_hi, p_lo] }, true)
    } else {
        if c0 != c1 {
            return invalid("asymmetric costs need a linear curve");
        }
        let p = c0 + dq / (2.0 * curve.slope_at_zero());
        ([p, p], false)
    };
    let outcome = |dq: f64, prices: [f64; 2]| -> Result<([f64; 2], [f64; 2])> {
        let s0 = duopoly_demand(prices[0], prices[1], dq, curve, c0, c1)?;
        let shares = [s0, 1.0 - s0];
        Ok((
            shares,
            [(prices[0] - c0) * shares[0], (prices[1] - c1) * shares[1]],
        ))
    };
    let (shares, profits) = outcome(dq, prices)?;
    let high_cost_gains_from_dq = if closed_form && c0 != c1 && dq > 0.0 {
        let hi = usize::from(c1 > c0);
        let h = 1e-6 * dq;
        let at = |dq: f64| {
            let (lo, hc) = asymmetric_prices(c0.min(c1), c0.max(c1), dq);
            outcome(dq, if hi == 1 { [lo, hc] } else { [hc, lo] })
        };
        let (s_lo, p_lo) = at(dq - h)?;
        let (s_hi, p_hi) = at(dq + h)?;
        Some(s_hi[hi] > s_lo[hi] && p_hi[hi] > p_lo[hi])
    } else {
        None
    };
    Ok(DuopolyEquilibrium {
        prices,
        shares,
        profits,
        closed_form,
        high_cost_gains_from_dq,
    })
}

/// Evenly spaced prices from `lo` to `hi` (inclusive) at spacing `step`.
pub fn price_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).floor() as usize;
    (0..=n).map(|k| lo + step * k as f64).collect()
}

/// Largest profit gain any firm can get by moving to a price on its grid
/// while others hold `prices`. `profit(i, prices)` is firm i's profit.
pub fn verify_equilibrium<F>(prices: &[f64], profit: F, grids: &[Vec<f64>]) -> Result<f64>
where
    F: Fn(usize, &[f64]) -> Result<f64> + Sync,
{
    if grids.len() != prices.len() {
        return Err(Error::LengthMismatch {
            expected: prices.len(),
            got: grids.len(),
        });
    }
    let gains = map_indexed(prices.len(), |i| -> Result<f64> {
        let base = profit(i, prices)?;
        let mut best = f64::NEG_INFINITY;
        let mut p = prices.to_vec();
        for &q in &grids[i] {
            p[i] = q;
            best = best.max(profit(i, &p)? - base);
        }
        Ok(best)
    });
    gains
        .into_iter()
        .try_fold(f64::NEG_INFINITY, |m, g| Ok(m.max(g?)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocationRegime {
    /// Equal costs: maximal differentiation.
    Differentiate,
    /// Low-cost firm copies the rival's profile.
    Imitate,
    /// Low-cost firm locates as far away as possible.
    Obfuscate,
    /// Both choices give the low-cost firm the same profit; the reported
    /// outcome is the obfuscation branch.
    Indifferent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationOutcome {
    pub regime: LocationRegime,
    pub dq: f64,
    pub equilibrium: DuopolyEquilibrium,
}

/// Low-cost firm's pricing-stage profit at dissimilarity Δq (linear curve).
pub fn low_cost_profit(dq: f64, dc: f64) -> Result<f64> {
    let eq = duopoly_equilibrium([0.0, dc], dq, &GCurve::linear())?;
    Ok(eq.profits[0])
}

/// Location stage with a linear curve. Equal costs: both firms maximize
/// distance. Unequal costs: the high-cost firm moves first, then the
/// low-cost firm picks between copying it and maximal distance.
pub fn location_stage_outcome(cfg: &MarketConfig) -> Result<LocationOutcome> {
    cfg.validate()?;
    if cfg.costs.len() != 2 {
        return invalid("location stage is defined for two firms");
    }
    if !cfg.curve.is_linear() {
        return invalid("location stage needs a linear curve");
    }
    let costs = [cfg.costs[0], cfg.costs[1]];
    let dq_bar = cfg.max_dissimilarity();
    let dc = (costs[1] - costs[0]).abs();
    if dc == 0.0 {
        let equilibrium = duopoly_equilibrium(costs, dq_bar, &cfg.curve)?;
        return Ok(LocationOutcome {
            regime: LocationRegime::Differentiate,
            dq: dq_bar,
            equilibrium,
        });
    }
    let imitate = dc;
    let obfuscate = low_cost_profit(dq_bar, dc)?;
    let regime = if same(imitate, obfuscate) {
        LocationRegime::Indifferent
    } else if imitate > obfuscate {
        LocationRegime::Imitate
    } else {
        LocationRegime::Obfuscate
    };
    let dq = if regime == LocationRegime::Imitate {
        0.0
    } else {
        dq_bar
    };
    Ok(LocationOutcome {
        regime,
        dq,
        equilibrium: duopoly_equilibrium(costs, dq, &cfg.curve)?,
    })
}

/// Firm order in three-firm vectors.
pub const A: usize = 0;
pub const B: usize = 1;
pub const S: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThreeFirmRegime {
    /// p_b ≤ p_a ≤ p_s.
    BAS,
    /// p_a < p_b < p_s.
    ABS,
    /// Any other ordering; shares come from exact enumeration.
    Other,
}

fn reveal_prob(u_i: f64, u_j: f64, d: f64) -> f64 {
    if d == 0.0 {
        1.0
    } else {
        ((u_i - u_j).abs() / d).min(1.0)
    }
}

/// Whether i is truly better than j. Equal utilities with identical offers
/// (a and s at equal prices) favor a.
fn truly_better(i: usize, j: usize, p: &[f64; 3]) -> bool {
    if same(p[i], p[j]) {
        i == A && j == S
    } else {
        p[i] < p[j]
    }
}

/// Shares under the binary-signal model with linear H: each pair's true
/// order is revealed with probability |ΔU|/d_L1, and the consumer picks the
/// option with the best expected rank given the revealed orders, splitting
/// ties. Firm s shares a's quantity profile.
pub fn three_firm_shares(prices: [f64; 3], dq: f64) -> Result<[f64; 3]> {
    check_dq(dq)?;
    if dq == 0.0 {
        return invalid("three-firm demand needs dq > 0");
    }
    let dist = |i: usize, j: usize| {
        let q = if (i == B) != (j == B) { dq } else { 0.0 };
        q + (prices[i] - prices[j]).abs()
    };
    let pairs = [(A, B), (A, S), (B, S)];
    let tau: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| reveal_prob(-prices[i], -prices[j], dist(i, j)))
        .collect();
    let mut shares = [0.0; 3];
    for pattern in 0..8u32 {
        let mut prob = 1.0;
        let mut known = Vec::new();
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if pattern >> k & 1 == 1 {
                prob *= tau[k];
                known.push(if truly_better(i, j, &prices) {
                    (i, j)
                } else {
                    (j, i)
                });
            } else {
                prob *= 1.0 - tau[k];
            }
        }
        if prob == 0.0 {
            continue;
        }
        for (f, w) in best_expected_rank(&known).into_iter().enumerate() {
            shares[f] += prob * w;
        }
    }
    Ok(shares)
}

const ORDERS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Choice weights given known pairs (better, worse): uniform over rankings
/// consistent with them, lowest mean position wins, ties split.
fn best_expected_rank(known: &[(usize, usize)]) -> [f64; 3] {
    let mut pos_sum = [0usize; 3];
    let mut count = 0usize;
    for order in ORDERS {
        let pos = |f: usize| order.iter().position(|&g| g == f).unwrap();
        if known.iter().all(|&(hi, lo)| pos(hi) < pos(lo)) {
            count += 1;
            for (f, s) in pos_sum.iter_mut().enumerate() {
                *s += pos(f);
            }
        }
    }
    debug_assert!(count > 0);
    let best = *pos_sum.iter().min().unwrap();
    let winners = pos_sum.iter().filter(|&&s| s == best).count() as f64;
    pos_sum.map(|s| if s == best { 1.0 / winners } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeFirmProfits {
    pub profits: [f64; 3],
    pub shares: [f64; 3],
    pub regime: ThreeFirmRegime,
}

/// Profits with a and b at cost c and s at cost c_s. The two analyzed
/// orderings use the closed-form shares; others fall back to enumeration.
pub fn three_firm_profits(
    p_a: f64,
    p_b: f64,
    p_s: f64,
    dq: f64,
    c: f64,
    c_s: f64,
) -> Result<ThreeFirmProfits> {
    check_dq(dq)?;
    if dq == 0.0 {
        return invalid("three-firm demand needs dq > 0");
    }
    let le = |x: f64, y: f64| x < y || same(x, y);
    let lt = |x: f64, y: f64| x < y && !same(x, y);
    let (regime, shares) = if le(p_b, p_a) && le(p_a, p_s) {
        let t_ab = dq / (dq + p_a - p_b);
        let t_bs = (p_s - p_b) / (dq + p_s - p_b);
        let u_bs = dq / (dq + p_s - p_b);
        let sa = 0.5 * t_ab * t_bs + t_ab * u_bs;
        (ThreeFirmRegime::BAS, [sa, 1.0 - sa, 0.0])
    } else if lt(p_a, p_b) && lt(p_b, p_s) {
        let u_ab = dq / (dq + p_b - p_a);
        let t_bs = (p_s - p_b) / (dq + p_s - p_b);
        let sb = 0.5 * u_ab * t_bs;
        (ThreeFirmRegime::ABS, [1.0 - sb, sb, 0.0])
    } else {
        (
            ThreeFirmRegime::Other,
            three_firm_shares([p_a, p_b, p_s], dq)?,
        )
    };
    let costs = [c, c, c_s];
    let prices = [p_a, p_b, p_s];
    let profits = [0, 1, 2].map(|i| (prices[i] - costs[i]) * shares[i]);
    Ok(ThreeFirmProfits {
        profits,
        shares,
        regime,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iters: usize,
    /// Interior grid points per price segment before refinement.
    pub grid_points: usize,
    /// Upper price bound as a multiple of Δq above the highest cost.
    pub price_span: f64,
    /// Random starting points tried after the two default ones.
    pub restarts: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tolerance: 1e-8,
            max_iters: 2000,
            grid_points: 64,
            price_span: 6.0,
            restarts: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeFirmEquilibrium {
    pub prices: [f64; 3],
    pub profits: [f64; 3],
    pub shares: [f64; 3],
    pub iterations: usize,
    /// Largest gain from a unilateral deviation found by the final
    /// best-response pass.
    pub residual: f64,
    pub b_below_a: bool,
    /// Whether s prices at cost; `None` unless Δq ≥ c_s − c.
    pub s_at_cost: Option<bool>,
}

/// Maximizes `f` on [lo, hi]. Points in `breaks` split the interval into
/// pieces on which `f` is continuous; each piece is grid-searched and then
/// refined by golden-section search. Ties go to the lowest price.
fn maximize_piecewise<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    grid: usize,
) -> (f64, f64) {
    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|b| *b > lo && *b < hi)
        .collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut best = (lo, f(lo));
    let mut consider = |x: f64, v: f64| {
        if v > best.1 || (v == best.1 && x < best.0) {
            best = (x, v);
        }
    };
    for &x in &cuts {
        consider(x, f(x));
    }
    for w in cuts.windows(2) {
        let (u, v) = (w[0], w[1]);
        let h = (v - u) / (grid + 1) as f64;
        let (mut k_best, mut f_best) = (1, f64::NEG_INFINITY);
        for k in 1..=grid {
            let y = f(u + h * k as f64);
            if y > f_best {
                (k_best, f_best) = (k, y);
            }
        }
        let (mut a, mut b) = (u + h * (k_best - 1) as f64, u + h * (k_best + 1) as f64);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let (x1, x2) = (b - g * (b - a), a + g * (b - a));
            if f(x1) >= f(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        let x = 0.5 * (a + b);
        if x > u && x < v {
            consider(x, f(x));
        }
        consider(u + h * k_best as f64, f_best);
    }
    best
}

/// Equilibrium of the three-firm pricing game by damped sequential best
/// responses (a, then b, then s). Starts are the duopoly prices, a at the
/// entrant's cost, then random points; the first start whose final
/// deviation gain is within 1e-6 of the profit scale is returned.
pub fn three_firm_equilibrium(
    dq: f64,
    c: f64,
    c_s: f64,
    cfg: &SearchConfig,
) -> Result<ThreeFirmEquilibrium> {
    check_dq(dq)?;
    if dq == 0.0 || !(c.is_finite() && c_s.is_finite()) || c_s <= c {
        return invalid("three-firm game needs dq > 0 and c_s > c");
    }
    let costs = [c, c, c_s];
    let hi = c_s.max(c) + cfg.price_span * dq;
    let profit = |i: usize, p: &[f64; 3]| -> f64 {
        three_firm_profits(p[A], p[B], p[S], dq, c, c_s)
            .map(|r| r.profits[i])
            .unwrap_or(f64::NEG_INFINITY)
    };
    let best_response = |i: usize, p: &[f64; 3]| -> (f64, f64) {
        let others: Vec<f64> = (0..3).filter(|&j| j != i).map(|j| p[j]).collect();
        maximize_piecewise(
            |x| {
                let mut q = *p;
                q[i] = x;
                profit(i, &q)
            },
            costs[i],
            hi,
            &others,
            cfg.grid_points,
        )
    };
    let iterate = |mut p: [f64; 3]| -> (Result<usize>, [f64; 3]) {
        for it in 0..cfg.max_iters {
            let mut step: f64 = 0.0;
            for i in 0..3 {
                let br = best_response(i, &p).0;
                step = step.max((br - p[i]).abs());
                // A response at another firm's price sits on a discontinuity;
                // jump there instead of averaging across it.
                let snap = (0..3).any(|j| j != i && br == p[j]);
                p[i] = if snap {
                    br
                } else {
                    p[i] + cfg.damping * (br - p[i])
                };
            }
            if step < cfg.tolerance {
                return (Ok(it + 1), p);
            }
        }
        (
            Err(Error::NonConvergence(format!(
                "best responses still moving after {} sweeps",
                cfg.max_iters
            ))),
            p,
        )
    };
    let residual_at = |p: &[f64; 3]| {
        (0..3)
            .map(|i| best_response(i, p).1 - profit(i, p))
            .fold(0.0, f64::max)
    };
    let mut rng = crate::par::chunk_rng(0x7472_6164_656f_6666, 0);
    let mut starts = vec![[c + dq, c + dq, c_s], [c_s, c + dq, c_s]];
    for _ in 0..cfg.restarts {
        starts.push([0; 3].map(|_| rand::Rng::gen_range(&mut rng, c..hi)));
        starts.last_mut().unwrap()[S] = starts.last().unwrap()[S].max(c_s);
    }
    let mut last_err = None;
    for start in starts {
        let (outcome, p) = iterate(start);
        let iterations = match outcome {
            Ok(n) => n,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let r = three_firm_profits(p[A], p[B], p[S], dq, c, c_s)?;
        let residual = residual_at(&p);
        let scale = r.profits.iter().fold(1e-3 * dq, |m, v| m.max(v.abs()));
        if residual > 1e-6 * scale {
            last_err = Some(Error::NonConvergence(format!(
                "residual {residual:.3e} at {p:?}"
            )));
            continue;
        }
        return Ok(ThreeFirmEquilibrium {
            prices: p,
            profits: r.profits,
            shares: r.shares,
            iterations,
            residual,
            b_below_a: p[B] < p[A],
            s_at_cost: (dq >= c_s - c).then(|| (p[S] - c_s).abs() <= 1e-9),
        });
    }
    Err(last_err.unwrap_or_else(|| Error::NonConvergence("no start converged".into())))
}

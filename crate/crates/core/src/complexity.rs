//! Value-dissimilarity ratios, the G curve, the G→H precision map, and
//! optimal-transport oracles for the distribution distances.

use serde::{Deserialize, Serialize};

use crate::domain::{
    Alternative, AttributeVector, DiscountFunction, Lottery, PayoffFlow, UtilityModel,
};
use crate::error::{invalid, Error, Result};
use crate::normal;

/// Slack allowed when checking that a ratio lies in [−1, 1].
pub const RATIO_TOL: f64 = 1e-12;

/// Parameters of the G curve mapping signed ratios to choice probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GCurve {
    pub kappa: f64,
    pub gamma: f64,
    pub psi: f64,
}

impl GCurve {
    pub fn new(kappa: f64, gamma: f64, psi: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&kappa) {
            return Err(Error::OutOfRange(format!(
                "kappa = {kappa} outside [0, 0.5]"
            )));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::OutOfRange(format!(
                "gamma = {gamma} must be positive"
            )));
        }
        if !(psi.is_finite() && psi > 0.0) {
            return Err(Error::OutOfRange(format!("psi = {psi} must be positive")));
        }
        let curve = Self { kappa, gamma, psi };
        if psi != 1.0 && !curve.is_increasing() {
            return Err(Error::OutOfRange(format!(
                "G is not increasing at gamma = {gamma}, psi = {psi}"
            )));
        }
        Ok(curve)
    }

    /// Grid check that (1 − a)^γ / divisor(a) falls on [0, 1], which makes G
    /// strictly increasing. Always true for ψ = 1.
    fn is_increasing(&self) -> bool {
        const N: usize = 1024;
        let f = |a: f64| (1.0 - a).powf(self.gamma) / self.divisor(a);
        (1..=N).all(|k| f(k as f64 / N as f64) < f((k - 1) as f64 / N as f64))
    }

    /// The two-parameter form (ψ = 1).
    pub fn two_param(kappa: f64, gamma: f64) -> Result<Self> {
        Self::new(kappa, gamma, 1.0)
    }

    /// G(r) = (1 + r)/2.
    pub fn linear() -> Self {
        Self {
            kappa: 0.0,
            gamma: 1.0,
            psi: 1.0,
        }
    }

    pub fn is_linear(&self) -> bool {
        self.kappa == 0.0 && self.gamma == 1.0 && self.psi == 1.0
    }

    fn divisor(&self, a: f64) -> f64 {
        if self.psi == 1.0 {
            1.0
        } else {
            (a.powf(self.psi) + (1.0 - a).powf(self.psi)).powf(1.0 / self.psi)
        }
    }

    /// G(r) without the range check; r is clamped into [−1, 1].
    pub fn eval_clamped(&self, r: f64) -> f64 {
        let r = r.clamp(-1.0, 1.0);
        let a = r.abs();
        let dev = (0.5 - self.kappa) * (1.0 - a).powf(self.gamma) / self.divisor(a);
        if r >= 0.0 {
            (1.0 - self.kappa) - dev
        } else {
            self.kappa + dev
        }
    }

    /// Slope of G at 0. Analytic for ψ = 1, a central difference otherwise
    /// (infinite for ψ < 1).
    pub fn slope_at_zero(&self) -> f64 {
        if self.psi == 1.0 {
            (0.5 - self.kappa) * self.gamma
        } else {
            let h = 1e-7;
            (self.eval_clamped(h) - self.eval_clamped(-h)) / (2.0 * h)
        }
    }
}

/// Signed value-dissimilarity ratio together with its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedRatio {
    pub r: f64,
    pub degenerate: bool,
    pub value_diff: f64,
    pub dissimilarity: f64,
}

/// Precision of a pairwise signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Precision {
    Finite(f64),
    /// Signal reveals the ranking without noise.
    PerfectlyComparable,
}

impl Precision {
    pub fn is_perfect(&self) -> bool {
        matches!(self, Precision::PerfectlyComparable)
    }

    /// Scales a finite precision; perfect comparability is unchanged.
    pub fn scaled(self, factor: f64) -> Precision {
        match self {
            Precision::Finite(t) => Precision::Finite(t * factor),
            p => p,
        }
    }
}

/// Weighted L1 distance between attribute vectors.
pub fn d_l1(x: &AttributeVector, y: &AttributeVector, beta: &[f64]) -> Result<f64> {
    check_l1(x, y, beta)?;
    Ok(x.values()
        .iter()
        .zip(y.values())
        .zip(beta)
        .map(|((a, b), w)| (w * (a - b)).abs())
        .sum())
}

fn check_l1(x: &AttributeVector, y: &AttributeVector, beta: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if beta.len() != x.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: beta.len(),
        });
    }
    if beta.iter().any(|b| *b == 0.0 || !b.is_finite()) {
        return invalid("attribute weights must be finite and nonzero");
    }
    Ok(())
}

/// Cumulative probabilities this close are treated as the same breakpoint,
/// so rounding in mixed lotteries cannot open sliver segments.
const QUANTILE_SNAP: f64 = 1e-12;

/// Quantile segments (u(F_x⁻¹), u(F_y⁻¹), Δq) over the merged CDF breakpoints.
fn lottery_segments(
    x: &Lottery,
    y: &Lottery,
    model: &UtilityModel,
) -> Result<Vec<(f64, f64, f64)>> {
    let (xo, yo) = (x.outcomes(), y.outcomes());
    let (xc, yc) = (x.cdf_points(), y.cdf_points());
    let mut segs = Vec::with_capacity(xo.len() + yo.len());
    let (mut i, mut j, mut prev) = (0usize, 0usize, 0.0f64);
    while i < xo.len() && j < yo.len() {
        let next = xc[i].min(yc[j]);
        let dq = next - prev;
        if dq > 0.0 {
            segs.push((model.bernoulli(xo[i].0)?, model.bernoulli(yo[j].0)?, dq));
        }
        prev = next;
        let (ai, aj) = (xc[i] <= next + QUANTILE_SNAP, yc[j] <= next + QUANTILE_SNAP);
        if ai {
            i += 1;
        }
        if aj {
            j += 1;
        }
    }
    Ok(segs)
}

/// CDF distance ∫|u(F_x⁻¹(q)) − u(F_y⁻¹(q))| dq, summed exactly over segments.
pub fn d_cdf(x: &Lottery, y: &Lottery, model: &UtilityModel) -> Result<f64> {
    model.validate()?;
    Ok(lottery_segments(x, y, model)?
        .iter()
        .map(|(a, b, dq)| (a - b).abs() * dq)
        .sum())
}

/// Joint support {0} ∪ T_x ∪ T_y with ΔM(t_k) and weights d(t_k) − d(t_{k+1}), d(∞) = 0.
fn flow_segments(x: &PayoffFlow, y: &PayoffFlow, d: &DiscountFunction) -> Vec<(f64, f64)> {
    let mut grid: Vec<f64> = std::iter::once(0.0)
        .chain(x.payments().iter().map(|p| p.0))
        .chain(y.payments().iter().map(|p| p.0))
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let (xp, yp) = (x.payments(), y.payments());
    let (mut i, mut j) = (0usize, 0usize);
    let (mut mx, mut my) = (0.0, 0.0);
    let mut out = Vec::with_capacity(grid.len());
    for (k, &t) in grid.iter().enumerate() {
        while i < xp.len() && xp[i].0 <= t {
            mx += xp[i].1;
            i += 1;
        }
        while j < yp.len() && yp[j].0 <= t {
            my += yp[j].1;
            j += 1;
        }
        let next = grid.get(k + 1).map(|&s| d.eval(s)).unwrap_or(0.0);
        out.push((mx - my, d.eval(t) - next));
    }
    out
}

/// CPF distance Σ_k |M_x(t_k) − M_y(t_k)|·(d(t_k) − d(t_{k+1})).
pub fn d_cpf(x: &PayoffFlow, y: &PayoffFlow, d: &DiscountFunction) -> f64 {
    flow_segments(x, y, d)
        .iter()
        .map(|(dm, w)| dm.abs() * w)
        .sum()
}

/// Integral form ln(1/δ)∫δ^t|M_x(t) − M_y(t)|dt (t in periods) for
/// exponential discounting, by composite Gauss–Legendre quadrature. Used to
/// cross-check [`d_cpf`].
pub fn d_cpf_integral(x: &PayoffFlow, y: &PayoffFlow, delta: f64, period_days: f64) -> f64 {
    let (nodes, weights) = gauss_legendre(16);
    let rate = (1.0 / delta).ln();
    let mut grid: Vec<f64> = std::iter::once(0.0)
        .chain(x.payments().iter().map(|p| p.0 / period_days))
        .chain(y.payments().iter().map(|p| p.0 / period_days))
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    // Extend until the discounted tail is negligible.
    let last = *grid.last().unwrap();
    grid.push(last + 45.0 / rate);
    let mut total = 0.0;
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let at = 0.5 * (a + b) * period_days;
        let gap = (x.cumulative_payoff(at) - y.cumulative_payoff(at)).abs();
        if gap == 0.0 {
            continue;
        }
        let pieces = ((b - a) * rate / 0.25).ceil().max(1.0) as usize;
        let h = (b - a) / pieces as f64;
        for p in 0..pieces {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            let s: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(z, wt)| wt * (-rate * (mid + 0.5 * h * z)).exp())
                .sum();
            total += gap * rate * 0.5 * h * s;
        }
    }
    total
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / dp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Signed ratio (value(x) − value(y)) / d(x, y) with the domain distance.
///
/// The numerator is accumulated over the same terms as the distance, so the
/// ratio is exactly ±1 under dominance.
pub fn signed_ratio(x: &Alternative, y: &Alternative, model: &UtilityModel) -> Result<SignedRatio> {
    model.validate()?;
    let (num, den) = match (x, y, model) {
        (
            Alternative::Attributes(a),
            Alternative::Attributes(b),
            UtilityModel::LinearAttributes { beta },
        ) => {
            check_l1(a, b, beta)?;
            a.values()
                .iter()
                .zip(b.values())
                .zip(beta)
                .fold((0.0, 0.0), |(n, d), ((p, q), w)| {
                    let t = w * (p - q);
                    (n + t, d + t.abs())
                })
        }
        (Alternative::Lottery(a), Alternative::Lottery(b), UtilityModel::CrraSymmetric { .. })
        | (
            Alternative::Lottery(a),
            Alternative::Lottery(b),
            UtilityModel::PowerLossAverse { .. },
        ) => lottery_segments(a, b, model)?
            .iter()
            .fold((0.0, 0.0), |(n, d), (p, q, dq)| {
                (n + (p - q) * dq, d + (p - q).abs() * dq)
            }),
        (Alternative::Flow(a), Alternative::Flow(b), _) => {
            let dfn = DiscountFunction::from_model(model)?;
            flow_segments(a, b, &dfn)
                .iter()
                .fold((0.0, 0.0), |(n, d), (dm, w)| (n + dm * w, d + dm.abs() * w))
        }
        _ => {
            return Err(Error::DomainMismatch(format!(
                "ratio of {:?} vs {:?} under a {:?} model",
                x.domain(),
                y.domain(),
                model.domain()
            )))
        }
    };
    if !num.is_finite() || !den.is_finite() {
        return Err(Error::NonFinite("ratio components".into()));
    }
    if den == 0.0 {
        return Ok(SignedRatio {
            r: 0.0,
            degenerate: true,
            value_diff: num,
            dissimilarity: 0.0,
        });
    }
    Ok(SignedRatio {
        r: (num / den).clamp(-1.0, 1.0),
        degenerate: false,
        value_diff: num,
        dissimilarity: den,
    })
}

/// G(r) with a range check on r.
pub fn g_eval(r: f64, curve: &GCurve) -> Result<f64> {
    if !(r.abs() <= 1.0 + RATIO_TOL) {
        return Err(Error::OutOfRange(format!("ratio {r} outside [-1, 1]")));
    }
    Ok(curve.eval_clamped(r))
}

/// Signal precision H(r) = (Φ⁻¹(G(r)))² for r in [0, 1].
pub fn tau_from_ratio(r: f64, curve: &GCurve) -> Result<Precision> {
    if r < -RATIO_TOL || r.is_nan() {
        return Err(Error::OutOfRange(format!(
            "precision needs a nonnegative ratio, got {r}"
        )));
    }
    let g = g_eval(r.max(0.0), curve)?;
    if g >= 1.0 {
        return Ok(Precision::PerfectlyComparable);
    }
    let z = normal::inv_cdf(g);
    Ok(Precision::Finite(z * z))
}

/// Precision between two options under a model and curve.
pub fn pair_precision(
    x: &Alternative,
    y: &Alternative,
    model: &UtilityModel,
    curve: &GCurve,
) -> Result<Precision> {
    let sr = signed_ratio(x, y, model)?;
    if sr.degenerate {
        return Ok(Precision::Finite(0.0));
    }
    tau_from_ratio(sr.r.abs(), curve)
}

/// Optimal transport cost between the utility distributions of two lotteries,
/// by comonotone matching of sorted utilities.
pub fn min_coupling_lottery(x: &Lottery, y: &Lottery, model: &UtilityModel) -> Result<f64> {
    model.validate()?;
    let mut a: Vec<(f64, f64)> = x
        .outcomes()
        .iter()
        .map(|&(w, p)| Ok((model.bernoulli(w)?, p)))
        .collect::<Result<_>>()?;
    let mut b: Vec<(f64, f64)> = y
        .outcomes()
        .iter()
        .map(|&(w, p)| Ok((model.bernoulli(w)?, p)))
        .collect::<Result<_>>()?;
    a.sort_by(|p, q| p.0.total_cmp(&q.0));
    b.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(transport_1d(&mut a, &mut b))
}

/// Two-pointer transport between discrete measures on the line with equal
/// total mass, both sorted by position. Consumes the masses.
fn transport_1d(a: &mut [(f64, f64)], b: &mut [(f64, f64)]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut cost = 0.0;
    while i < a.len() && j < b.len() {
        let m = a[i].1.min(b[j].1);
        cost += m * (a[i].0 - b[j].0).abs();
        a[i].1 -= m;
        b[j].1 -= m;
        // Advance whichever is exhausted; rounding dust is dropped at the end.
        if a[i].1 <= b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    cost
}

/// Cost Σ g(i,j)|u(x_i) − u(y_j)| of an arbitrary coupling matrix indexed by
/// the canonical outcome orders. Marginals are checked to 1e-9.
pub fn coupling_cost(
    x: &Lottery,
    y: &Lottery,
    model: &UtilityModel,
    g: &[Vec<f64>],
) -> Result<f64> {
    let (xo, yo) = (x.outcomes(), y.outcomes());
    if g.len() != xo.len() || g.iter().any(|row| row.len() != yo.len()) {
        return invalid("coupling matrix shape does not match the lotteries");
    }
    for (i, row) in g.iter().enumerate() {
        if (row.iter().sum::<f64>() - xo[i].1).abs() > 1e-9 {
            return invalid("coupling row marginal mismatch");
        }
    }
    for j in 0..yo.len() {
        if (g.iter().map(|r| r[j]).sum::<f64>() - yo[j].1).abs() > 1e-9 {
            return invalid("coupling column marginal mismatch");
        }
    }
    let mut c = 0.0;
    for (i, row) in g.iter().enumerate() {
        for (j, m) in row.iter().enumerate() {
            c += m * (model.bernoulli(xo[i].0)? - model.bernoulli(yo[j].0)?).abs();
        }
    }
    Ok(c)
}

/// Independent (product) coupling of two lotteries.
pub fn product_coupling(x: &Lottery, y: &Lottery) -> Vec<Vec<f64>> {
    x.outcomes()
        .iter()
        .map(|a| y.outcomes().iter().map(|b| a.1 * b.1).collect())
        .collect()
}

/// Optimal transport cost between the discount-weighted measures of two
/// positive flows: each payment places its amount at position d(t), and the
/// smaller total is padded with mass at d(∞) = 0.
pub fn min_coupling_flow(x: &PayoffFlow, y: &PayoffFlow, d: &DiscountFunction) -> Result<f64> {
    if x.payments().iter().chain(y.payments()).any(|p| p.1 <= 0.0) {
        return invalid("coupling oracle requires strictly positive amounts");
    }
    let mut a: Vec<(f64, f64)> = x.payments().iter().map(|&(t, m)| (d.eval(t), m)).collect();
    let mut b: Vec<(f64, f64)> = y.payments().iter().map(|&(t, m)| (d.eval(t), m)).collect();
    let (sa, sb) = (x.total(), y.total());
    if sa < sb {
        a.push((0.0, sb - sa));
    } else if sb < sa {
        b.push((0.0, sa - sb));
    }
    a.sort_by(|p, q| p.0.total_cmp(&q.0));
    b.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(transport_1d(&mut a, &mut b))
}

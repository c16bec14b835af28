use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::data::PredictionRule;
use crate::domain::{dominates, Alternative, UtilityModel};
use crate::error::{invalid, Error, Result};
use crate::par::{chunk_rng, map_indexed};

/// Default gap used for strict order constraints.
pub const ORDER_MARGIN: f64 = 1e-6;

/// Convex set of prediction rules: per-coordinate bounds inside [0, 1] and
/// order constraints `p[hi] ≥ p[lo] + margin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
    orders: Vec<(usize, usize)>,
    margin: f64,
    interior: Vec<f64>,
}

impl ConstraintSet {
    /// Errors unless the set has a non-empty interior.
    pub fn new(
        lower: Vec<f64>,
        upper: Vec<f64>,
        orders: Vec<(usize, usize)>,
        margin: f64,
    ) -> Result<Self> {
        let n = lower.len();
        if n == 0 {
            return invalid("constraint set needs at least one coordinate");
        }
        if upper.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: upper.len(),
            });
        }
        if !(margin.is_finite() && margin >= 0.0) {
            return invalid("margin must be finite and non-negative");
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(0.0..=1.0).contains(l) || !(0.0..=1.0).contains(u) {
                return Err(Error::OutOfRange(format!(
                    "bounds [{l}, {u}] outside [0, 1]"
                )));
            }
        }
        if let Some(&(a, b)) = orders.iter().find(|(a, b)| *a >= n || *b >= n || a == b) {
            return invalid(format!(
                "bad order constraint ({a}, {b}) for {n} coordinates"
            ));
        }
        let topo = topological_order(n, &orders)
            .ok_or_else(|| Error::Infeasible("order constraints contain a cycle".into()))?;
        let mut set = Self {
            lower,
            upper,
            orders,
            margin,
            interior: Vec::new(),
        };
        set.interior = set.find_interior(&topo)?;
        Ok(set)
    }

    /// Weak dominance bounds and monotonicity orders implied by the
    /// dominance relation among the problems' options.
    ///
    /// A problem whose first option dominates gets p ≥ ½ (≤ ½ when the
    /// second dominates). Problems (x, y) and (x′, y) with x dominating x′
    /// get p(x, y) ≥ p(x′, y) + margin, and likewise (x, y′) ≥ (x, y) when y
    /// dominates y′.
    pub fn from_problems(
        problems: &[(Alternative, Alternative)],
        model: &UtilityModel,
        margin: f64,
    ) -> Result<Self> {
        let n = problems.len();
        let (mut lower, mut upper) = (vec![0.0; n], vec![1.0; n]);
        for (i, (x, y)) in problems.iter().enumerate() {
            if dominates(x, y, model)? {
                lower[i] = 0.5;
            } else if dominates(y, x, model)? {
                upper[i] = 0.5;
            }
        }
        let mut orders = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let ((xi, yi), (xj, yj)) = (&problems[i], &problems[j]);
                let better_first = yi == yj && dominates(xi, xj, model)?;
                let worse_second = xi == xj && dominates(yj, yi, model)?;
                if better_first || worse_second {
                    orders.push((i, j));
                }
            }
        }
        Self::new(lower, upper, orders, margin)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn orders(&self) -> &[(usize, usize)] {
        &self.orders
    }

    /// Strictly feasible point used to start chains.
    pub fn interior(&self) -> &[f64] {
        &self.interior
    }

    /// Largest violation of any constraint (≤ 0 when satisfied).
    pub fn max_violation(&self, p: &[f64]) -> f64 {
        let mut v = f64::NEG_INFINITY;
        for i in 0..self.dim() {
            v = v.max(self.lower[i] - p[i]).max(p[i] - self.upper[i]);
        }
        for &(a, b) in &self.orders {
            v = v.max(p[b] + self.margin - p[a]);
        }
        v
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && self.max_violation(p) <= 0.0
    }

    /// Tightens every constraint by slack `s` and propagates bounds along
    /// the order graph. Returns the tightened (lower, upper) envelopes.
    fn envelopes(&self, topo: &[usize], s: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let gap = self.margin + s;
        let mut lo: Vec<f64> = self.lower.iter().map(|l| l + s).collect();
        let mut hi: Vec<f64> = self.upper.iter().map(|u| u - s).collect();
        let mut below = vec![Vec::new(); n];
        let mut above = vec![Vec::new(); n];
        for &(a, b) in &self.orders {
            below[a].push(b);
            above[b].push(a);
        }
        for &i in topo.iter().rev() {
            for &b in &below[i] {
                lo[i] = lo[i].max(lo[b] + gap);
            }
        }
        for &i in topo {
            for &a in &above[i] {
                hi[i] = hi[i].min(hi[a] - gap);
            }
        }
        (lo, hi)
    }

    fn find_interior(&self, topo: &[usize]) -> Result<Vec<f64>> {
        let ok = |s: f64| {
            let (lo, hi) = self.envelopes(topo, s);
            lo.iter().zip(&hi).all(|(l, h)| l <= h)
        };
        if !ok(0.0) {
            return Err(Error::Infeasible("constraints admit no point".into()));
        }
        let (mut a, mut b) = (0.0, 0.5);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if ok(m) {
                a = m;
            } else {
                b = m;
            }
        }
        if a <= 1e-12 {
            return Err(Error::Infeasible(
                "constraint set has an empty interior".into(),
            ));
        }
        let (lo, hi) = self.envelopes(topo, 0.5 * a);
        Ok(lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect())
    }

    /// Feasible step interval [t_min, t_max] along direction `d` from `p`.
    fn chord(&self, p: &[f64], d: &[f64]) -> (f64, f64) {
        let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut cut = |slack: f64, rate: f64| {
            // constraint: slack + t·rate ≥ 0
            let slack = slack.max(0.0);
            if rate > 0.0 {
                t0 = t0.max(-slack / rate);
            } else if rate < 0.0 {
                t1 = t1.min(slack / -rate);
            }
        };
        for i in 0..self.dim() {
            cut(p[i] - self.lower[i], d[i]);
            cut(self.upper[i] - p[i], -d[i]);
        }
        for &(a, b) in &self.orders {
            cut(p[a] - p[b] - self.margin, d[a] - d[b]);
        }
        (t0, t1)
    }
}

fn topological_order(n: usize, orders: &[(usize, usize)]) -> Option<Vec<usize>> {
    // Kahn's algorithm, higher coordinates first.
    let mut indeg = vec![0usize; n];
    let mut out = vec![Vec::new(); n];
    for &(a, b) in orders {
        out[a].push(b);
        indeg[b] += 1;
    }
    let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = queue.pop() {
        order.push(i);
        for &b in &out[i] {
            indeg[b] -= 1;
            if indeg[b] == 0 {
                queue.push(b);
            }
        }
    }
    (order.len() == n).then_some(order)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarConfig {
    /// Steps discarded before the first sample; `None` means 10·dim.
    pub burn_in: Option<usize>,
    /// Steps between samples; `None` means dim.
    pub thinning: Option<usize>,
    /// Independent chains, run in parallel with derived seeds.
    pub chains: usize,
}

impl Default for HarConfig {
    fn default() -> Self {
        Self {
            burn_in: None,
            thinning: None,
            chains: 1,
        }
    }
}

/// Approximately uniform draws from a constraint set by hit-and-run:
/// random direction, exact chord against every constraint, uniform point on
/// the chord.
pub fn har_sample(
    set: &ConstraintSet,
    count: usize,
    cfg: &HarConfig,
    seed: u64,
) -> Result<Vec<PredictionRule>> {
    let dim = set.dim();
    let burn = cfg.burn_in.unwrap_or(10 * dim);
    let thin = cfg.thinning.unwrap_or(dim).max(1);
    let chains = cfg.chains.max(1).min(count.max(1));
    let per_chain = |c: usize| count / chains + usize::from(c < count % chains);
    let results = map_indexed(chains, |c| -> Result<Vec<Vec<f64>>> {
        let mut rng = chunk_rng(seed, c as u64);
        let mut p = set.interior().to_vec();
        let mut d = vec![0.0; dim];
        let mut out = Vec::with_capacity(per_chain(c));
        let mut step = |p: &mut Vec<f64>| -> Result<()> {
            let mut norm = 0.0;
            for di in d.iter_mut() {
                *di = rng.sample::<f64, _>(StandardNormal);
                norm += *di * *di;
            }
            let norm = norm.sqrt();
            d.iter_mut().for_each(|di| *di /= norm);
            let (t0, t1) = set.chord(p, &d);
            if !(t1 >= t0 && t0.is_finite() && t1.is_finite()) {
                return Err(Error::NonConvergence(
                    "hit-and-run chord is numerically empty".into(),
                ));
            }
            let t = t0 + (t1 - t0) * rng.gen::<f64>();
            for (pi, di) in p.iter_mut().zip(&d) {
                *pi += t * di;
            }
            Ok(())
        };
        for _ in 0..burn {
            step(&mut p)?;
        }
        while out.len() < per_chain(c) {
            for _ in 0..thin {
                step(&mut p)?;
            }
            out.push(p.clone());
        }
        Ok(out)
    });
    let mut samples = Vec::with_capacity(count);
    for r in results {
        for p in r? {
            // Rounding can leave a point a few ulps outside; pull it back.
            let p: Vec<f64> = p.iter().map(|v| v.clamp(0.0, 1.0)).collect();
            if set.max_violation(&p) > 1e-12 {
                return Err(Error::NonConvergence(
                    "hit-and-run left the constraint set".into(),
                ));
            }
            samples.push(PredictionRule::new(p)?);
        }
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AttributeVector, Lottery};
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_interval_mean() {
        let set = ConstraintSet::new(vec![0.0], vec![1.0], vec![], 0.0).unwrap();
        let s = har_sample(&set, 10_000, &HarConfig::default(), 4).unwrap();
        let xs: Vec<f64> = s.iter().map(|r| r.probs()[0]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let se = (1.0f64 / 12.0 / xs.len() as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn triangle_mean() {
        let set = ConstraintSet::new(vec![0.0; 2], vec![1.0; 2], vec![(0, 1)], 0.0).unwrap();
        let s = har_sample(
            &set,
            10_000,
            &HarConfig {
                chains: 4,
                ..Default::default()
            },
            9,
        )
        .unwrap();
        assert!(s.iter().all(|r| r.probs()[0] >= r.probs()[1]));
        let m = s.iter().map(|r| r.probs()[0]).sum::<f64>() / s.len() as f64;
        // Var(p1) on the triangle is 1/18; allow for chain correlation.
        assert!((m - 2.0 / 3.0).abs() < 0.02, "{m}");
    }

    #[test]
    fn infeasible_sets() {
        assert!(matches!(
            ConstraintSet::new(vec![0.0; 2], vec![1.0; 2], vec![(0, 1), (1, 0)], 0.0),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            ConstraintSet::new(vec![0.6], vec![0.4], vec![], 0.0),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            ConstraintSet::new(vec![0.5], vec![0.5], vec![], 0.0),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn interior_is_strict() {
        let set = ConstraintSet::new(
            vec![0.5, 0.0, 0.0],
            vec![1.0; 3],
            vec![(1, 0), (2, 1)],
            1e-6,
        )
        .unwrap();
        assert!(set.max_violation(set.interior()) < 0.0);
        assert_abs_diff_eq!(set.interior()[2], set.interior()[2].clamp(0.5, 1.0));
    }

    #[test]
    fn dominance_constraints_from_problems() {
        let a = |v: [f64; 2]| Alternative::from(AttributeVector::new(v.to_vec()).unwrap());
        let model = UtilityModel::LinearAttributes {
            beta: vec![1.0, 1.0],
        };
        let problems = vec![
            (a([2.0, 2.0]), a([1.0, 1.0])),
            (a([1.0, 1.0]), a([2.0, 2.0])),
            (a([3.0, 0.0]), a([0.0, 2.0])),
            (a([2.0, 0.0]), a([0.0, 2.0])),
        ];
        let set = ConstraintSet::from_problems(&problems, &model, ORDER_MARGIN).unwrap();
        assert!(set.orders().contains(&(2, 3)));
        let s = har_sample(&set, 500, &HarConfig::default(), 1).unwrap();
        for r in &s {
            let p = r.probs();
            assert!(p[0] >= 0.5 && p[1] <= 0.5 && p[2] >= p[3] + ORDER_MARGIN);
        }
        let l = |w: f64| Alternative::from(Lottery::certain(w).unwrap());
        let m = UtilityModel::CrraSymmetric { alpha: 1.0 };
        assert!(ConstraintSet::from_problems(&[(l(2.0), l(1.0))], &m, 0.0).is_ok());
    }
}

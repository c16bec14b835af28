use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::prior::{order_stat_means, PriorSpec};
use super::tied;
use crate::complexity::{pair_precision, GCurve, Precision};
use crate::domain::{value, Alternative, UtilityModel};
use crate::error::{Error, Result};
use crate::par::{map_chunks, Moments};

/// Largest option set handled by exact permutation enumeration.
pub const MAX_ENUM: usize = 8;

/// True values and pairwise signal precisions over a finite option set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonStructure {
    values: Vec<f64>,
    tau: Vec<Vec<Precision>>,
}

impl ComparisonStructure {
    pub fn new(values: Vec<f64>, tau: Vec<Vec<Precision>>) -> Result<Self> {
        let n = values.len();
        if tau.len() != n || tau.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid(format!("precision matrix must be {n}x{n}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("option value".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if tau[i][j] != tau[j][i] {
                    return Err(Error::Invalid(format!(
                        "precision matrix not symmetric at ({i},{j})"
                    )));
                }
                match tau[i][j] {
                    Precision::Finite(t) if !(t.is_finite() && t >= 0.0) => {
                        return Err(Error::OutOfRange(format!("precision {t} at ({i},{j})")));
                    }
                    Precision::PerfectlyComparable if values[i] == values[j] => {
                        return Err(Error::Invalid(format!(
                            "options {i} and {j} have equal values and cannot be perfectly comparable"
                        )));
                    }
                    _ => {}
                }
            }
        }
        Ok(Self { values, tau })
    }

    /// Builds values and precisions from options under a model and G curve.
    pub fn from_options(
        options: &[Alternative],
        model: &UtilityModel,
        curve: &GCurve,
    ) -> Result<Self> {
        let values = options
            .iter()
            .map(|o| value(o, model))
            .collect::<Result<Vec<_>>>()?;
        let n = options.len();
        let mut tau = vec![vec![Precision::Finite(0.0); n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let t = if values[i] == values[j] {
                    Precision::Finite(0.0)
                } else {
                    pair_precision(&options[i], &options[j], model, curve)?
                };
                tau[i][j] = t;
                tau[j][i] = t;
            }
        }
        Self::new(values, tau)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tau(&self, i: usize, j: usize) -> Precision {
        self.tau[i][j]
    }

    /// Restriction to a subset of options, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        if idx.iter().any(|&i| i >= self.len()) {
            return Err(Error::Invalid("option index out of range".into()));
        }
        let values = idx.iter().map(|&i| self.values[i]).collect();
        let tau = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| self.tau[i][j]).collect())
            .collect();
        Ok(Self { values, tau })
    }

    /// Multiplies every finite precision by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let tau = self
            .tau
            .iter()
            .map(|r| r.iter().map(|t| t.scaled(factor)).collect())
            .collect();
        Self {
            values: self.values.clone(),
            tau,
        }
    }

    /// Draws one set of pairwise signals.
    pub fn sample_signals<R: Rng + ?Sized>(&self, rng: &mut R) -> SignalDraw {
        let n = self.len();
        let mut ts = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                ts.push(match self.tau[i][j] {
                    Precision::Finite(t) if t > 0.0 => {
                        let eps: f64 = rng.sample(StandardNormal);
                        t * sign(self.values[i] - self.values[j]) + t.sqrt() * eps
                    }
                    _ => 0.0,
                });
            }
        }
        SignalDraw { ts }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// One realization of all pairwise signals, stored as τ_ij·s_ij for i < j in
/// row-major pair order. With s = sgn(v_i − v_j) + ε/√τ this equals
/// τ·sgn + √τ·ε, which stays finite at τ = 0. Perfectly comparable pairs are
/// not stored as signals; they act as constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalDraw {
    pub ts: Vec<f64>,
}

impl SignalDraw {
    /// From raw signals s_ij (i < j, row-major) and a structure's precisions.
    pub fn from_raw(structure: &ComparisonStructure, s: &[f64]) -> Result<Self> {
        let n = structure.len();
        if s.len() != n * (n - 1) / 2 {
            return Err(Error::LengthMismatch {
                expected: n * (n - 1) / 2,
                got: s.len(),
            });
        }
        let mut ts = Vec::with_capacity(s.len());
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                ts.push(match structure.tau(i, j) {
                    Precision::Finite(t) => t * s[k],
                    Precision::PerfectlyComparable => 0.0,
                });
                k += 1;
            }
        }
        Ok(Self { ts })
    }
}

/// Posterior probability of each ranking (rank 0 = best for each option).
#[derive(Debug, Clone, PartialEq)]
pub struct RankingPosterior {
    pub ranks: Vec<Vec<u8>>,
    pub probs: Vec<f64>,
}

impl RankingPosterior {
    /// P(option i has rank k), k = 0 best.
    pub fn marginals(&self) -> Vec<Vec<f64>> {
        let n = self.ranks.first().map(|r| r.len()).unwrap_or(0);
        let mut m = vec![vec![0.0; n]; n];
        for (r, p) in self.ranks.iter().zip(&self.probs) {
            for (i, &k) in r.iter().enumerate() {
                m[i][k as usize] += p;
            }
        }
        m
    }
}

/// All rankings consistent with the perfectly comparable pairs, with each
/// ranking's pairwise orientation σ (+1 when i ranks above j) for the noisy
/// pairs.
struct Enumeration {
    ranks: Vec<Vec<u8>>,
    sigma: Vec<Vec<i8>>,
    noisy: Vec<usize>,
}

fn enumerate(structure: &ComparisonStructure) -> Result<Enumeration> {
    let n = structure.len();
    if n > MAX_ENUM {
        return Err(Error::TooManyOptions(n));
    }
    let mut noisy = Vec::new();
    let mut hard = Vec::new();
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            match structure.tau(i, j) {
                Precision::PerfectlyComparable => {
                    hard.push((i, j, structure.values[i] > structure.values[j]))
                }
                Precision::Finite(t) if t > 0.0 => noisy.push(k),
                _ => {}
            }
            k += 1;
        }
    }
    let mut ranks = Vec::new();
    let mut sigma = Vec::new();
    let mut perm: Vec<u8> = (0..n as u8).collect();
    loop {
        if hard
            .iter()
            .all(|&(i, j, i_better)| (perm[i] < perm[j]) == i_better)
        {
            let mut s = Vec::with_capacity(n * (n - 1) / 2);
            for i in 0..n {
                for j in (i + 1)..n {
                    s.push(if perm[i] < perm[j] { 1 } else { -1 });
                }
            }
            ranks.push(perm.clone());
            sigma.push(s);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    if ranks.is_empty() {
        return Err(Error::Infeasible(
            "no ranking satisfies the perfectly comparable pairs".into(),
        ));
    }
    Ok(Enumeration {
        ranks,
        sigma,
        noisy,
    })
}

fn next_permutation(p: &mut [u8]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn posterior_weights(e: &Enumeration, draw: &SignalDraw, out: &mut Vec<f64>) {
    out.clear();
    out.extend(e.sigma.iter().map(|s| {
        e.noisy
            .iter()
            .map(|&k| draw.ts[k] * s[k] as f64)
            .sum::<f64>()
    }));
    let mx = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for w in out.iter_mut() {
        *w = (*w - mx).exp();
        z += *w;
    }
    for w in out.iter_mut() {
        *w /= z;
    }
}

/// Posterior over rankings given one signal draw, by exact enumeration
/// (N ≤ 8). Rankings that contradict a perfectly comparable pair get zero
/// weight and are omitted.
pub fn ranking_posterior(
    structure: &ComparisonStructure,
    draw: &SignalDraw,
) -> Result<RankingPosterior> {
    let n = structure.len();
    if draw.ts.len() != n * (n - 1) / 2 {
        return Err(Error::LengthMismatch {
            expected: n * (n - 1) / 2,
            got: draw.ts.len(),
        });
    }
    let e = enumerate(structure)?;
    let mut w = Vec::new();
    posterior_weights(&e, draw, &mut w);
    Ok(RankingPosterior {
        ranks: e.ranks,
        probs: w,
    })
}

/// Monte Carlo choice probabilities over a menu, with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceEstimate {
    pub probs: Vec<f64>,
    pub se: Vec<f64>,
    pub draws: usize,
}

/// Estimates ρ(a, A | C) for each a in `menu`: every draw samples all signals
/// in A ∪ C, computes posterior expected values, and picks the best option in
/// A. Tied maxima split the draw's unit of choice equally.
pub fn simulate_choice(
    structure: &ComparisonStructure,
    menu: &[usize],
    context: &[usize],
    draws: usize,
    seed: u64,
    prior: &PriorSpec,
) -> Result<ChoiceEstimate> {
    if menu.is_empty() {
        return Err(Error::Invalid("menu is empty".into()));
    }
    if menu.iter().any(|a| context.contains(a)) {
        return Err(Error::Invalid("menu and context overlap".into()));
    }
    let mut idx: Vec<usize> = menu.to_vec();
    idx.extend_from_slice(context);
    let mut seen = idx.clone();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != idx.len() {
        return Err(Error::Invalid("duplicate option in menu or context".into()));
    }
    if draws == 0 {
        return Err(Error::Invalid("draws must be positive".into()));
    }
    let sub = structure.subset(&idx)?;
    let e = enumerate(&sub)?;
    let n = sub.len();
    let v = order_stat_means(n, prior)?;
    let m = menu.len();
    let parts = map_chunks(draws, seed, |rng, count| {
        let mut acc = vec![Moments::default(); m];
        let mut w = Vec::with_capacity(e.ranks.len());
        let mut ev = vec![0.0; m];
        for _ in 0..count {
            let draw = sub.sample_signals(rng);
            posterior_weights(&e, &draw, &mut w);
            for (a, slot) in ev.iter_mut().enumerate() {
                *slot = e
                    .ranks
                    .iter()
                    .zip(&w)
                    .map(|(r, p)| p * v[r[a] as usize])
                    .sum();
            }
            let best = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let ties = ev.iter().filter(|&&x| tied(x, best)).count() as f64;
            for (a, slot) in acc.iter_mut().enumerate() {
                slot.push(if tied(ev[a], best) { 1.0 / ties } else { 0.0 });
            }
        }
        acc
    });
    let mut total = vec![Moments::default(); m];
    for p in &parts {
        for (t, x) in total.iter_mut().zip(p) {
            t.merge(x);
        }
    }
    Ok(ChoiceEstimate {
        probs: total.iter().map(|x| x.mean()).collect(),
        se: total.iter().map(|x| x.se()).collect(),
        draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal;

    fn pc() -> Precision {
        Precision::PerfectlyComparable
    }

    fn fin(t: f64) -> Precision {
        Precision::Finite(t)
    }

    #[test]
    fn uniform_when_uninformative() {
        let s = ComparisonStructure::new(vec![0.3, 0.2, 0.1], vec![vec![fin(0.0); 3]; 3]).unwrap();
        let post = ranking_posterior(&s, &SignalDraw { ts: vec![0.0; 3] }).unwrap();
        assert_eq!(post.probs.len(), 6);
        for p in post.probs {
            assert!((p - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn hard_constraint_filters() {
        let mut tau = vec![vec![fin(0.0); 3]; 3];
        tau[0][1] = pc();
        tau[1][0] = pc();
        let s = ComparisonStructure::new(vec![0.9, 0.1, 0.5], tau).unwrap();
        let post = ranking_posterior(&s, &SignalDraw { ts: vec![0.0; 3] }).unwrap();
        assert_eq!(post.probs.len(), 3);
        for (r, p) in post.ranks.iter().zip(&post.probs) {
            assert!(r[0] < r[1]);
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn precise_signals_concentrate() {
        use rand::SeedableRng;
        let tau = vec![vec![fin(400.0); 4]; 4];
        let s = ComparisonStructure::new(vec![0.4, 0.9, 0.1, 0.6], tau).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let draw = s.sample_signals(&mut rng);
        let post = ranking_posterior(&s, &draw).unwrap();
        let truth = [2u8, 0, 3, 1];
        let p: f64 = post
            .ranks
            .iter()
            .zip(&post.probs)
            .filter(|(r, _)| r.as_slice() == truth)
            .map(|x| x.1)
            .sum();
        assert!(p > 1.0 - 1e-12, "mass on truth {p}");
    }

    #[test]
    fn rejects_bad_structures() {
        assert!(ComparisonStructure::new(vec![0.5, 0.5], vec![vec![pc(); 2]; 2]).is_err());
        let s = ComparisonStructure::new(vec![0.0; 9], vec![vec![fin(0.0); 9]; 9]).unwrap();
        assert!(matches!(
            ranking_posterior(&s, &SignalDraw { ts: vec![0.0; 36] }),
            Err(Error::TooManyOptions(9))
        ));
        let mut asym = vec![vec![fin(0.0); 2]; 2];
        asym[0][1] = fin(1.0);
        assert!(ComparisonStructure::new(vec![0.0, 1.0], asym).is_err());
    }

    #[test]
    fn binary_choice_matches_normal_cdf() {
        for tau in [0.0, 0.2, 1.5] {
            let s = ComparisonStructure::new(vec![0.7, 0.2], vec![vec![fin(tau); 2]; 2]).unwrap();
            let est = simulate_choice(&s, &[0, 1], &[], 40_000, 5, &PriorSpec::Uniform01).unwrap();
            let exact = normal::cdf(tau.sqrt());
            assert!(
                (est.probs[0] - exact).abs() < 4.0 * est.se[0].max(1e-12),
                "tau {tau}"
            );
            assert!((est.probs[0] + est.probs[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn next_permutation_counts() {
        let mut p = [0u8, 1, 2, 3];
        let mut c = 1;
        while next_permutation(&mut p) {
            c += 1;
        }
        assert_eq!(c, 24);
    }
}

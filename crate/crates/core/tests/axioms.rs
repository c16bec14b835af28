//! Behavioral axioms of the complexity choice rule, checked on random draws
//! in all three domains.

use proptest::prelude::*;
use proptest::test_runner::Config;
use tradeoff_core::choice::{rho, ChoiceModel};
use tradeoff_core::complexity::{d_cdf, d_cpf, d_l1, GCurve};
use tradeoff_core::domain::{
    dominates, Alternative, AttributeVector, DiscountFunction, Lottery, PayoffFlow, UtilityModel,
};

const CASES: u32 = 10_000;
const TOL: f64 = 1e-9;

fn cfg() -> Config {
    Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    }
}

fn curve() -> impl Strategy<Value = GCurve> {
    (0.0..0.45f64, 0.2..3.0f64, 0.5..2.0f64)
        .prop_filter_map("G must increase", |(k, g, p)| GCurve::new(k, g, p).ok())
}

fn weight() -> impl Strategy<Value = f64> {
    prop_oneof![-3.0..-0.1f64, 0.1..3.0f64]
}

/// (utility, k) with k attributes.
fn attr_utility() -> impl Strategy<Value = (UtilityModel, usize)> {
    (2usize..=5).prop_flat_map(|k| {
        prop::collection::vec(weight(), k)
            .prop_map(move |beta| (UtilityModel::LinearAttributes { beta }, k))
    })
}

fn attrs(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20.0..20.0f64, k)
}

fn lottery() -> impl Strategy<Value = Lottery> {
    prop::collection::vec((-10.0..50.0f64, 0.05..1.0f64), 1..=4).prop_map(|raw| {
        let total: f64 = raw.iter().map(|o| o.1).sum();
        Lottery::new(raw.into_iter().map(|(w, p)| (w, p / total)).collect()).unwrap()
    })
}

fn lottery_utility() -> impl Strategy<Value = UtilityModel> {
    (0.3..1.5f64).prop_map(|alpha| UtilityModel::CrraSymmetric { alpha })
}

fn flow() -> impl Strategy<Value = PayoffFlow> {
    prop::collection::vec((0.0..720.0f64, 0.5..50.0f64), 1..=3)
        .prop_map(|p| PayoffFlow::new(p).unwrap())
}

fn flow_utility() -> impl Strategy<Value = UtilityModel> {
    (0.8..0.99f64).prop_map(|delta| UtilityModel::ExponentialDiscount {
        delta,
        period_days: 30.0,
    })
}

fn model(utility: &UtilityModel, curve: &GCurve) -> ChoiceModel {
    ChoiceModel::Complexity {
        utility: utility.clone(),
        curve: *curve,
    }
}

fn av(v: Vec<f64>) -> Alternative {
    AttributeVector::new(v).unwrap().into()
}

fn check_transitivity(
    m: &ChoiceModel,
    x: &Alternative,
    y: &Alternative,
    z: &Alternative,
) -> Result<(), TestCaseError> {
    // Orient the triple so that x ≥ y ≥ z in choice terms.
    let mut t = [x, y, z];
    t.sort_by(|a, b| rho(m, b, a).unwrap().total_cmp(&0.5));
    let [a, b, c] = t;
    let (ab, bc, ac) = (
        rho(m, a, b).unwrap(),
        rho(m, b, c).unwrap(),
        rho(m, a, c).unwrap(),
    );
    if ab >= 0.5 && bc >= 0.5 {
        prop_assert!(ac >= ab.min(bc) - TOL, "rho(a,c) = {ac} < min({ab}, {bc})");
    }
    Ok(())
}

fn check_dominance(
    m: &ChoiceModel,
    u: &UtilityModel,
    g: &GCurve,
    x: &Alternative,
    y: &Alternative,
) -> Result<(), TestCaseError> {
    let top = g.eval_clamped(1.0);
    let p = rho(m, x, y).unwrap();
    if x == y {
        return Ok(());
    }
    if dominates(x, y, u).unwrap() {
        prop_assert!(
            (p - top).abs() <= 1e-12,
            "dominance pair gives {p}, not {top}"
        );
    } else if !dominates(y, x, u).unwrap() {
        prop_assert!(
            p < top && p > 1.0 - top,
            "non-dominance pair reaches the bound: {p}"
        );
    }
    Ok(())
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn attributes_moderate_transitivity(((u, k), g) in (attr_utility(), curve()), s in any::<u64>()) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(s);
        let mut draw = || av((0..k).map(|_| rand::Rng::gen_range(&mut rng, -20.0..20.0)).collect());
        let (x, y, z) = (draw(), draw(), draw());
        check_transitivity(&model(&u, &g), &x, &y, &z)?;
    }

    #[test]
    fn lottery_moderate_transitivity(u in lottery_utility(), g in curve(), x in lottery(), y in lottery(), z in lottery()) {
        check_transitivity(&model(&u, &g), &x.into(), &y.into(), &z.into())?;
    }

    #[test]
    fn flow_moderate_transitivity(u in flow_utility(), g in curve(), x in flow(), y in flow(), z in flow()) {
        check_transitivity(&model(&u, &g), &x.into(), &y.into(), &z.into())?;
    }

    #[test]
    fn attributes_dominance(((u, k), g) in (attr_utility(), curve()), pair in (2usize..=5).prop_flat_map(|k| (attrs(k), attrs(k), prop::collection::vec(0.0..5.0f64, k))), make_dom in any::<bool>()) {
        let UtilityModel::LinearAttributes { beta } = &u else { unreachable!() };
        let (mut x, y, gain) = pair;
        x.truncate(k); let mut y = y; y.truncate(k);
        x.resize(k, 1.0); y.resize(k, 1.0);
        if make_dom {
            x = y.iter().zip(beta).zip(gain.iter().chain(std::iter::repeat(&1.0))).map(|((v, b), e)| v + b.signum() * (e + 1e-3)).collect();
        }
        check_dominance(&model(&u, &g), &u, &g, &av(x), &av(y))?;
    }

    #[test]
    fn lottery_dominance(u in lottery_utility(), g in curve(), x in lottery(), y in lottery(), shift in 0.0..5.0f64, make_dom in any::<bool>()) {
        let x = if make_dom {
            Lottery::new(y.outcomes().iter().map(|&(w, p)| (w + shift + 1e-3, p)).collect()).unwrap()
        } else {
            x
        };
        check_dominance(&model(&u, &g), &u, &g, &x.into(), &y.into())?;
    }

    #[test]
    fn flow_dominance(u in flow_utility(), g in curve(), x in flow(), y in flow(), extra in 0.0..5.0f64, make_dom in any::<bool>()) {
        let x = if make_dom {
            PayoffFlow::new(y.payments().iter().map(|&(t, m)| ((t - 10.0).max(0.0), m + extra)).collect()).unwrap()
        } else {
            x
        };
        check_dominance(&model(&u, &g), &u, &g, &x.into(), &y.into())?;
    }

    #[test]
    fn attributes_monotonicity(((u, k), g) in (attr_utility(), curve()), raw in (attrs(5), attrs(5), prop::collection::vec(0.0..5.0f64, 5))) {
        let UtilityModel::LinearAttributes { beta } = &u else { unreachable!() };
        let (x, y) = (raw.0[..k].to_vec(), raw.1[..k].to_vec());
        let better: Vec<f64> = x.iter().zip(beta).zip(&raw.2).map(|((v, b), e)| v + b.signum() * e).collect();
        let m = model(&u, &g);
        let (x, better, y) = (av(x), av(better), av(y));
        prop_assert!(rho(&m, &better, &y).unwrap() >= rho(&m, &x, &y).unwrap() - TOL);
    }

    #[test]
    fn lottery_monotonicity(u in lottery_utility(), g in curve(), x in lottery(), y in lottery(), gains in prop::collection::vec(0.0..5.0f64, 4)) {
        let better = Lottery::new(x.outcomes().iter().zip(&gains).map(|(&(w, p), e)| (w + e, p)).collect()).unwrap();
        let m = model(&u, &g);
        let (x, better, y): (Alternative, Alternative, Alternative) = (x.into(), better.into(), y.into());
        prop_assert!(rho(&m, &better, &y).unwrap() >= rho(&m, &x, &y).unwrap() - TOL);
    }

    #[test]
    fn flow_monotonicity(u in flow_utility(), g in curve(), x in flow(), y in flow(), gains in prop::collection::vec(0.0..5.0f64, 3), earlier in 0.0..60.0f64) {
        let better = PayoffFlow::new(x.payments().iter().zip(&gains).map(|(&(t, m), e)| ((t - earlier).max(0.0), m + e)).collect()).unwrap();
        let m = model(&u, &g);
        let (x, better, y): (Alternative, Alternative, Alternative) = (x.into(), better.into(), y.into());
        prop_assert!(rho(&m, &better, &y).unwrap() >= rho(&m, &x, &y).unwrap() - TOL);
    }

    #[test]
    fn attributes_linearity(((u, k), g) in (attr_utility(), curve()), raw in (attrs(5), attrs(5), attrs(5)), alpha in 0.05..1.0f64) {
        let cut = |v: &Vec<f64>| v[..k].to_vec();
        let (x, y, z) = (cut(&raw.0), cut(&raw.1), cut(&raw.2));
        let mix = |a: &[f64]| av(a.iter().zip(&z).map(|(p, q)| alpha * p + (1.0 - alpha) * q).collect());
        let m = model(&u, &g);
        let lhs = rho(&m, &av(x.clone()), &av(y.clone())).unwrap();
        prop_assert!((lhs - rho(&m, &mix(&x), &mix(&y)).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn lottery_linearity(u in lottery_utility(), g in curve(), x in lottery(), y in lottery(), z in lottery(), alpha in 0.05..1.0f64) {
        let m = model(&u, &g);
        let lhs = rho(&m, &x.clone().into(), &y.clone().into()).unwrap();
        let (mx, my) = (x.mix(&z, alpha).unwrap(), y.mix(&z, alpha).unwrap());
        let rhs = rho(&m, &mx.into(), &my.into()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn flow_linearity(u in flow_utility(), g in curve(), x in flow(), y in flow(), z in flow(), alpha in 0.05..1.0f64) {
        let mix = |a: &PayoffFlow| {
            let mut p: Vec<(f64, f64)> = a.payments().iter().map(|&(t, v)| (t, alpha * v)).collect();
            p.extend(z.payments().iter().map(|&(t, v)| (t, (1.0 - alpha) * v)));
            PayoffFlow::new(p).unwrap()
        };
        let m = model(&u, &g);
        let lhs = rho(&m, &x.clone().into(), &y.clone().into()).unwrap();
        prop_assert!((lhs - rho(&m, &mix(&x).into(), &mix(&y).into()).unwrap()).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(Config { cases: 2_000, failure_persistence: None, ..Config::default() })]

    #[test]
    fn l1_is_a_metric((u, k) in attr_utility(), raw in (attrs(5), attrs(5), attrs(5))) {
        let UtilityModel::LinearAttributes { beta } = &u else { unreachable!() };
        let v = |a: &Vec<f64>| AttributeVector::new(a[..k].to_vec()).unwrap();
        let (x, y, z) = (v(&raw.0), v(&raw.1), v(&raw.2));
        let d = |a: &AttributeVector, b: &AttributeVector| d_l1(a, b, beta).unwrap();
        prop_assert_eq!(d(&x, &x), 0.0);
        prop_assert!((d(&x, &y) - d(&y, &x)).abs() <= 1e-12 && d(&x, &y) >= 0.0);
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + TOL);
    }

    #[test]
    fn cdf_is_a_metric(u in lottery_utility(), x in lottery(), y in lottery(), z in lottery()) {
        let d = |a: &Lottery, b: &Lottery| d_cdf(a, b, &u).unwrap();
        prop_assert!(d(&x, &x).abs() <= 1e-12);
        prop_assert!((d(&x, &y) - d(&y, &x)).abs() <= 1e-9 && d(&x, &y) >= 0.0);
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + TOL);
    }

    #[test]
    fn cpf_is_a_metric(delta in 0.8..0.99f64, x in flow(), y in flow(), z in flow()) {
        let f = DiscountFunction::exponential(delta, 30.0).unwrap();
        let d = |a: &PayoffFlow, b: &PayoffFlow| d_cpf(a, b, &f);
        prop_assert!(d(&x, &x).abs() <= 1e-12);
        prop_assert!((d(&x, &y) - d(&y, &x)).abs() <= 1e-9 && d(&x, &y) >= 0.0);
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + TOL);
    }
}

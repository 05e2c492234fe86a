//! Property tests: every generated case is checked against an oracle built
//! here or in `common`, never against the library routine under test.

mod common;

use num::{One, Signed, Zero};
use proptest::prelude::*;
use rand::Rng;

use common::*;
use robust_agg::evaluate::{
    dm_success, minimax_value, multistate_regret_bound, multistate_worst_case_regret, regret_at,
    regret_bound_cavvex, worst_case_regret,
};
use robust_agg::feasible::{
    check_feasible, enumerate_adversary_vertices, enumerate_mean_vertices, lift, membership_c, reduce,
};
use robust_agg::hull::{concavify, convexify, is_concave, is_convex};
use robust_agg::model::{binarize_posteriors, AggregationRule, MultiScenario, PosteriorMarginal, Scenario};
use robust_agg::optimize::{optimal_regret_rule, optimal_regret_rule_multistate};
use robust_agg::rational::{int, q, Q};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn neg(values: &[Q]) -> Vec<Q> {
    values.iter().map(|v| -v).collect()
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn conditional_means_satisfy_the_martingale_identity(seed in any::<u64>(), n in 1usize..40) {
        let s = scenario(&mut rng(seed), n);
        let (a, b) = conditionals(s.mu(), s.p1(), s.p2());
        prop_assert_eq!((s.a(), s.b()), (&a, &b));
        prop_assert!(a < b);
        prop_assert_eq!(s.mu() * &b + (Q::one() - s.mu()) * &a, (s.mu() - s.p1()) / (s.p2() - s.p1()));
    }

    #[test]
    fn binarizing_a_binary_marginal_is_the_identity(seed in any::<u64>(), n in 1usize..12) {
        let s = scenario(&mut rng(seed), n);
        let high = s.high_probability();
        let marginal = PosteriorMarginal::new(vec![
            (s.p1().clone(), Q::one() - &high),
            (s.p2().clone(), high),
        ]).unwrap();
        let again = binarize_posteriors(&marginal, s.mu().clone(), n).unwrap();
        prop_assert_eq!((again.p1(), again.p2(), again.a(), again.b()), (s.p1(), s.p2(), s.a(), s.b()));
    }

    #[test]
    fn two_state_multiscenario_matches_the_binary_one(seed in any::<u64>(), n in 1usize..12) {
        let s = scenario(&mut rng(seed), n);
        let mu = s.mu().clone();
        let ms = MultiScenario::new(
            vec!["0".into(), "1".into()],
            vec![Q::one() - &mu, mu.clone()],
            vec![int(-1), int(1)],
            vec![Q::one() - s.p1(), s.p1().clone()],
            vec![Q::one() - s.p2(), s.p2().clone()],
            n,
            None,
        ).unwrap();
        prop_assert_eq!(ms.a_high(), &[s.a().clone(), s.b().clone()][..]);
    }

    #[test]
    fn hulls_agree_with_brute_force(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = rng(seed);
        let rule = random_rule(&mut r, n);
        let f = rule.values();
        let cav = concavify(&rule);
        let vex = convexify(&rule);
        prop_assert!(is_concave(&cav) && is_convex(&vex));
        for k in 0..=n {
            let x = q(k as i64, n as i64);
            prop_assert!(cav.eval(&x).unwrap() >= f[k] && vex.eval(&x).unwrap() <= f[k]);
        }
        for _ in 0..8 {
            let x = between(&mut r, &int(0), &int(1));
            let (c, v) = (cav.eval(&x).unwrap(), vex.eval(&x).unwrap());
            prop_assert_eq!(&c, &brute_cav(f, &x).0);
            prop_assert_eq!(&v, &brute_vex(f, &x).0);
            prop_assert!(c >= v);
            // Lower hull of f is the negated upper hull of -f.
            prop_assert_eq!(&v, &-brute_cav(&neg(f), &x).0);
        }
    }

    #[test]
    fn mean_vertices_are_exact_and_sparse(n in 1usize..=12, num in 0i64..=60, den in 1i64..=60) {
        prop_assume!(num <= den);
        let mean = q(num, den);
        let vertices = enumerate_mean_vertices(n, &mean).unwrap();
        prop_assert!(!vertices.is_empty());
        for v in &vertices {
            prop_assert!(v.atoms().len() <= 2);
            prop_assert_eq!(v.mean(), mean.clone());
            let total: Q = v.atoms().iter().map(|(_, w)| w.clone()).sum();
            prop_assert!(total.is_one());
            prop_assert!(v.atoms().iter().all(|(_, w)| w.is_positive()));
        }
    }

    #[test]
    fn dictator_success_does_not_depend_on_the_structure(seed in any::<u64>(), n in 1usize..=7) {
        let s = scenario(&mut rng(seed), n);
        let identity = AggregationRule::identity(n);
        let want = s.dictator_success();
        let direct = (Q::one() - s.mu()) * (Q::one() - s.a()) + s.mu() * s.b();
        prop_assert_eq!(&want, &direct);
        for rs in enumerate_adversary_vertices(&s) {
            prop_assert_eq!(dm_success(&identity, &rs, s.mu()).unwrap(), want.clone());
        }
    }

    #[test]
    fn regret_is_nonnegative_and_bounded_by_the_hulls(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let s = scenario(&mut r, n);
        let rule = if r.gen_bool(0.3) { perturbed_identity(&mut r, n) } else { random_rule(&mut r, n) };
        let vertices = enumerate_adversary_vertices(&s);
        let mut worst = Q::zero();
        for rs in &vertices {
            let reg = regret_at(&rule, rs, s.mu()).unwrap();
            prop_assert!(!reg.is_negative());
            worst = worst.max(reg);
        }
        prop_assert_eq!(&worst_case_regret(&rule, &s).unwrap().0, &worst);
        // Upper hull at a and lower hull at b, from the brute-force scans.
        let one = Q::one();
        let f = rule.values();
        let bound = &one - (&one - s.mu()) * (&one - brute_cav(f, s.a()).0) - s.mu() * brute_vex(f, s.b()).0;
        prop_assert_eq!(&regret_bound_cavvex(&rule, &s).unwrap(), &bound);
        prop_assert!(bound >= worst, "bound {} below regret {}", bound, worst);
    }

    #[test]
    fn minimax_never_beats_the_dictator_bound(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let s = scenario(&mut r, n);
        let rule = random_rule(&mut r, n);
        let bound = (Q::one() - s.mu()) * (Q::one() - s.a()) + s.mu() * s.b();
        let value = minimax_value(&rule, &s).unwrap();
        prop_assert!(value <= bound);
        prop_assert_eq!(minimax_value(&AggregationRule::identity(n), &s).unwrap(), bound);
    }

    #[test]
    fn reduced_vertices_lift_into_the_full_polytope(seed in any::<u64>(), n in 1usize..=4) {
        let s = scenario(&mut rng(seed), n);
        for rs in enumerate_adversary_vertices(&s) {
            prop_assert!(check_feasible(&rs, &s).unwrap());
            let full = lift(&rs, &s).unwrap();
            prop_assert!(membership_c(&full, &s).unwrap());
            prop_assert_eq!(reduce(&full).unwrap(), rs);
        }
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn optimal_rule_is_a_saddle_point(seed in any::<u64>(), n in 1usize..=6) {
        let s = scenario(&mut rng(seed), n);
        let opt = optimal_regret_rule(&s).unwrap();
        let vertices = enumerate_adversary_vertices(&s);
        let best = vertices
            .iter()
            .map(|rs| regret_at(&opt.rule, rs, s.mu()).unwrap())
            .max()
            .unwrap();
        prop_assert_eq!(&best, &opt.value);
        let total: Q = opt.mixture.iter().map(|w| w.weight.clone()).sum();
        prop_assert!(total.is_one());
        for w in &opt.mixture {
            prop_assert!(w.weight.is_positive());
            prop_assert!(check_feasible(&w.structure, &s).unwrap());
            prop_assert_eq!(regret_at(&opt.rule, &w.structure, s.mu()).unwrap(), opt.value.clone());
        }
        // No rule does better against the mixture than the optimal value.
        for k in 0..=n {
            for v in [Q::zero(), Q::one()] {
                let mut values = opt.rule.values().to_vec();
                values[k] = v;
                let other = AggregationRule::new(values).unwrap();
                let against: Q = opt
                    .mixture
                    .iter()
                    .map(|w| &w.weight * regret_at(&other, &w.structure, s.mu()).unwrap())
                    .sum();
                prop_assert!(against >= opt.value);
            }
        }
    }

    #[test]
    fn optimal_regret_is_symmetric_under_relabelling(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let a = between(&mut r, &int(0), &int(1));
        let b = between(&mut r, &a, &int(1));
        let s = Scenario::from_conditionals(q(1, 2), a.clone(), b.clone(), n);
        let mirror = Scenario::from_conditionals(q(1, 2), Q::one() - &b, Q::one() - &a, n);
        if let (Ok(s), Ok(mirror)) = (s, mirror) {
            let x = optimal_regret_rule(&s).unwrap();
            let y = optimal_regret_rule(&mirror).unwrap();
            prop_assert_eq!(&x.value, &y.value);
            // Mirrored rule: f'(k/n) = 1 - f(1 - k/n).
            let flipped: Vec<Q> = x.rule.values().iter().rev().map(|v| Q::one() - v).collect();
            let flipped = AggregationRule::new(flipped).unwrap();
            prop_assert_eq!(worst_case_regret(&flipped, &mirror).unwrap().0, x.value.clone());
        }
    }

    #[test]
    fn multistate_bound_dominates_the_optimum(seed in any::<u64>()) {
        let mut r = rng(seed);
        let Some((ms, _, _)) = multistate_instance(&mut r) else { return Ok(()) };
        prop_assume!(ms.n() <= 5);
        let opt = optimal_regret_rule_multistate(&ms).unwrap();
        let rule = random_rule(&mut r, ms.n());
        let worst = multistate_worst_case_regret(&rule, &ms).unwrap().0;
        prop_assert!(worst >= opt.value);
        prop_assert!(multistate_regret_bound(&rule, &ms).unwrap() >= worst);
        prop_assert!(multistate_regret_bound(&opt.rule, &ms).unwrap() >= opt.value);
    }
}

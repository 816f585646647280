use mbc_core::axioms::{check_cons, falsify, recheck, search};
use mbc_core::crastar::{crastar_rows, crastar_trace};
use mbc_core::problem::{
    are_equal, is_feasible, is_pareto_efficient, reduced_problem, removal_problem, truncated_claims,
};
use mbc_core::rational::{format_rational, parse_rational};
use mbc_core::rules::{cra_rows, mean_of_rows, ra_single};
use mbc_core::{
    cra_exact, crastar_exact, csp, parse_problem, write_problem, Axiom, Budget, GenParams,
    MbcProblem, OrderPolicy, Permutation, RuleUnderTest, Q,
};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

/// Small integer instance: every claimant demands at least one issue and
/// every issue is demanded by someone.
fn problem(max_n: usize, max_m: usize) -> impl Strategy<Value = MbcProblem> {
    (1..=max_n, 1..=max_m)
        .prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(0i64..=12, m),
                prop::collection::vec(0i64..=8, n),
                prop::collection::vec(1u32..(1u32 << m), n),
            )
        })
        .prop_map(|(estates, claims, mut masks)| {
            let (n, m) = (masks.len(), estates.len());
            for i in 0..m {
                if masks.iter().all(|mask| mask >> i & 1 == 0) {
                    masks[i % n] |= 1 << i;
                }
            }
            let alpha: Vec<Vec<usize>> = masks
                .iter()
                .map(|mask| {
                    (0..m)
                        .filter(|i| mask >> i & 1 == 1)
                        .map(|i| i + 1)
                        .collect()
                })
                .collect();
            let refs: Vec<&[usize]> = alpha.iter().map(Vec::as_slice).collect();
            MbcProblem::numbered_int(&estates, &claims, &refs).unwrap()
        })
}

fn with_order(max_n: usize, max_m: usize) -> impl Strategy<Value = (MbcProblem, Permutation)> {
    problem(max_n, max_m)
        .prop_flat_map(|p| {
            let n = p.n();
            (Just(p), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        })
        .prop_map(|(p, order)| {
            let n = p.n();
            (p, Permutation::new(order, n).unwrap())
        })
}

/// `p` with claimants listed in the order `perm` (new position k holds old claimant `perm[k]`).
fn relisted(p: &MbcProblem, perm: &[usize]) -> MbcProblem {
    let alpha: Vec<Vec<usize>> = perm
        .iter()
        .map(|&j| p.alpha(j).iter().map(|i| i + 1).collect())
        .collect();
    let refs: Vec<&[usize]> = alpha.iter().map(Vec::as_slice).collect();
    MbcProblem::numbered(
        p.estates().to_vec(),
        perm.iter().map(|&j| p.claims()[j].clone()).collect(),
        &refs,
    )
    .unwrap()
}

fn budget() -> Budget {
    Budget::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn csp_is_feasible_and_efficient((p, sigma) in with_order(6, 4)) {
        let x = csp(&p, &sigma);
        prop_assert!(is_feasible(&p, &x));
        prop_assert!(is_pareto_efficient(&p, &x).unwrap().efficient);
    }

    #[test]
    fn csp_is_consistent((p, sigma) in with_order(6, 4), mask in 1u32..64) {
        let keep: Vec<usize> = (0..p.n()).filter(|j| mask >> j & 1 == 1).collect();
        prop_assume!(!keep.is_empty());
        let ids = sigma.as_slice().iter().map(|&j| p.claimants()[j].clone()).collect();
        let rule = RuleUnderTest::Csp(OrderPolicy::Explicit(ids));
        prop_assert!(!check_cons(&rule, &p, &keep, budget()).unwrap().is_violated());
    }

    #[test]
    fn cra_treats_equals_equally_and_ignores_listing((p, sigma) in with_order(5, 3)) {
        let x = cra_exact(&p, budget()).unwrap().allocation;
        prop_assert!(is_feasible(&p, &x));
        for j in 0..p.n() {
            for k in j + 1..p.n() {
                if are_equal(&p, j, k) {
                    prop_assert_eq!(&x[j], &x[k]);
                }
            }
        }
        let y = cra_exact(&relisted(&p, sigma.as_slice()), budget()).unwrap().allocation;
        for (k, &j) in sigma.as_slice().iter().enumerate() {
            prop_assert_eq!(&y[k], &x[j]);
        }
    }

    #[test]
    fn crastar_is_feasible_and_ignores_listing((p, sigma) in with_order(5, 3)) {
        let x = crastar_exact(&p, budget()).unwrap().allocation;
        prop_assert!(is_feasible(&p, &x));
        let y = crastar_exact(&relisted(&p, sigma.as_slice()), budget()).unwrap().allocation;
        for (k, &j) in sigma.as_slice().iter().enumerate() {
            prop_assert_eq!(&y[k], &x[j]);
        }
    }

    #[test]
    fn tree_walks_match_leaf_means(p in problem(5, 3)) {
        let rows = cra_rows(&p, budget()).unwrap();
        prop_assert_eq!(
            mean_of_rows(rows.iter().map(|(_, x)| x), p.n()),
            cra_exact(&p, budget()).unwrap().allocation
        );
        let rows = crastar_rows(&p, budget()).unwrap();
        prop_assert_eq!(
            mean_of_rows(rows.iter().map(|(_, x)| x), p.n()),
            crastar_exact(&p, budget()).unwrap().allocation
        );
    }

    #[test]
    fn single_issue_rules_coincide(p in problem(5, 1)) {
        let ra = ra_single(&p.estates()[0], p.claims());
        prop_assert_eq!(&cra_exact(&p, budget()).unwrap().allocation, &ra);
        prop_assert_eq!(&crastar_exact(&p, budget()).unwrap().allocation, &ra);
    }

    #[test]
    fn truncation_is_idempotent(p in problem(6, 4)) {
        let once = truncated_claims(&p);
        let twice = truncated_claims(&p.with_claims(once.clone()).unwrap());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn keeping_everyone_reduces_to_itself((p, sigma) in with_order(6, 4)) {
        let x = csp(&p, &sigma);
        let all: Vec<usize> = (0..p.n()).collect();
        prop_assert_eq!(reduced_problem(&p, &x, &all).unwrap(), p);
    }

    #[test]
    fn removal_never_leaves_negative_estates(p in problem(6, 4), pick in 0usize..6) {
        prop_assume!(p.n() >= 2);
        let leaver = pick % p.n();
        let removal = removal_problem(&p, leaver).unwrap();
        prop_assert!(removal.problem.estates().iter().all(|e| !e.is_negative()));
        prop_assert_eq!(removal.problem.n(), p.n() - 1);
        for id in &removal.clamped {
            let i = p.issue_index(id).unwrap();
            prop_assert!(p.estates()[i] < p.claims()[leaver]);
        }
    }

    #[test]
    fn issue_steps_only_shrink_the_state(p in problem(5, 3), pick in 0usize..6) {
        let orders: Vec<Permutation> = Permutation::all(p.m()).collect();
        let omega = &orders[pick % orders.len()];
        let mut estates = p.estates().to_vec();
        let mut claims = p.claims().to_vec();
        for step in crastar_trace(&p, omega) {
            for (before, after) in estates.iter().zip(&step.after.estates) {
                prop_assert!(after <= before && !after.is_negative());
            }
            for (before, after) in claims.iter().zip(&step.after.claims) {
                prop_assert!(after <= before && !after.is_negative());
            }
            for (c, t) in step.after.claims.iter().zip(&step.after.truncated) {
                prop_assert!(t <= c);
            }
            estates = step.after.estates;
            claims = step.after.claims;
        }
    }

    #[test]
    fn orders_sharing_a_prefix_share_its_steps(p in problem(5, 3)) {
        prop_assume!(p.m() >= 2);
        let orders: Vec<Permutation> = Permutation::all(p.m()).collect();
        for a in &orders {
            for b in &orders {
                let shared = a.as_slice().iter().zip(b.as_slice()).take_while(|(x, y)| x == y).count();
                let ta = crastar_trace(&p, a);
                let tb = crastar_trace(&p, b);
                prop_assert_eq!(&ta[..shared], &tb[..shared]);
            }
        }
    }

    #[test]
    fn problem_files_round_trip(p in problem(6, 4)) {
        let text = write_problem(&p);
        let back = parse_problem(&text).unwrap();
        prop_assert_eq!(write_problem(&back), text);
        prop_assert_eq!(back, p);
    }

    #[test]
    fn rationals_print_and_parse_back(num in -10_000i64..10_000, den in 1i64..500) {
        let q = Q::new(num.into(), den.into());
        prop_assert_eq!(parse_rational(&format_rational(&q)).unwrap(), q);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn violations_always_recheck(p in problem(4, 3)) {
        for rule in [RuleUnderTest::Cra, RuleUnderTest::Crastar, RuleUnderTest::Csp(OrderPolicy::Listed)] {
            for axiom in Axiom::ALL {
                let report = search(&rule, axiom, &p, None, budget()).unwrap();
                if report.is_violated() {
                    prop_assert!(recheck(&report, &rule, &p, budget()).unwrap(), "{axiom} {report:?}");
                } else {
                    prop_assert!(report.witness.is_none());
                }
            }
        }
    }

    #[test]
    fn falsify_is_deterministic(seed in any::<u64>()) {
        let params = GenParams::default();
        let rule = RuleUnderTest::Cra;
        let a = falsify(&rule, Axiom::Bal, &params, seed, 20, budget()).unwrap();
        let b = falsify(&rule, Axiom::Bal, &params, seed, 20, budget()).unwrap();
        if let Some(cx) = &a {
            prop_assert!(cx.problem.estates().iter().all(|e| !e.is_negative()));
            prop_assert!(!cx.problem.claims().iter().all(Zero::is_zero));
        }
        prop_assert_eq!(a, b);
    }
}

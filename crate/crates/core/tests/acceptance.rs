//! Acceptance criteria 1 to 10. Each test prints its sub-checks followed by
//! one `criterion N: PASS|FAIL` line. Run with
//! `cargo test --test acceptance -- --nocapture --test-threads=1` to see them all.

use std::path::PathBuf;

use mbc_core::axioms::{check_bal, check_pmon, check_pri, check_rmon, falsify, recheck};
use mbc_core::crastar::{crastar_rows, crastar_trace};
use mbc_core::problem::{are_equal, is_feasible, is_pareto_efficient, removal_problem};
use mbc_core::rational::{format_rational, parse_rational};
use mbc_core::rules::{cra_rows, ra_single, sp_single};
use mbc_core::{
    cra_exact, cra_sample, crastar_exact, csp, parse_problem, random_mbc, Allocation, Axiom,
    Budget, GenParams, MbcProblem, OrderPolicy, Permutation, RuleUnderTest, Witness, Q,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> MbcProblem {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_problem(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn q(text: &str) -> Q {
    parse_rational(text).unwrap()
}

fn alloc(values: &[&str]) -> Allocation {
    Allocation::new(values.iter().map(|v| q(v)).collect())
}

fn ints(values: &[i64]) -> Allocation {
    Allocation::from_ints(values)
}

fn qs(values: &[&str]) -> Vec<Q> {
    values.iter().map(|v| q(v)).collect()
}

struct Checks {
    items: Vec<(String, bool)>,
}

impl Checks {
    fn new() -> Self {
        Checks { items: Vec::new() }
    }

    fn add(&mut self, label: impl Into<String>, ok: bool) {
        self.items.push((label.into(), ok));
    }

    fn finish(self, n: u32, title: &str) {
        for (label, ok) in &self.items {
            println!("  [{}] {label}", if *ok { " ok " } else { "FAIL" });
        }
        let pass = self.items.iter().all(|(_, ok)| *ok);
        println!(
            "criterion {n}: {} ({title})",
            if pass { "PASS" } else { "FAIL" }
        );
        assert!(pass, "criterion {n} failed");
    }
}

fn csp_rule(order: &str) -> RuleUnderTest {
    RuleUnderTest::Csp(OrderPolicy::Explicit(
        order.chars().map(String::from).collect(),
    ))
}

/// Issue order, step index, then the estates, updated claims and truncated claims after it.
type StateRow = (
    &'static str,
    usize,
    [&'static str; 3],
    [&'static str; 5],
    [&'static str; 5],
);

fn budget() -> Budget {
    Budget::default()
}

#[test]
fn criterion_01_csp_example() {
    let p = fixture("crossed_eight_claimants.json");
    let sigma = Permutation::parse("13572468", p.claimants()).unwrap();
    let mut c = Checks::new();
    let x = csp(&p, &sigma);
    c.add(
        format!("csp under 13572468 = {x:?}"),
        x == ints(&[3, 2, 4, 0, 5, 0, 3, 5]),
    );
    c.finish(1, "CSP on the eight-claimant instance");
}

#[test]
fn criterion_02_cra_table_and_peff() {
    let p = fixture("peff_counterexample.json");
    let mut c = Checks::new();
    let rows = cra_rows(&p, budget()).unwrap();
    let expected = [
        ("123", [2, 2, 6]),
        ("132", [2, 1, 7]),
        ("213", [0, 4, 4]),
        ("231", [0, 4, 4]),
        ("312", [2, 1, 7]),
        ("321", [2, 1, 7]),
    ];
    c.add("six order rows", rows.len() == 6);
    for ((order, x), (label, want)) in rows.iter().zip(expected) {
        c.add(
            format!("row {label}"),
            order.label(p.claimants()) == label && *x == ints(&want),
        );
    }
    let cra = cra_exact(&p, budget()).unwrap().allocation;
    c.add(
        "CRA = (8/6, 13/6, 35/6)",
        cra == alloc(&["8/6", "13/6", "35/6"]),
    );
    let verdict = is_pareto_efficient(&p, &cra).unwrap();
    let witness = verdict.witness.as_ref();
    c.add("CRA is not Pareto efficient", !verdict.efficient);
    c.add(
        "witness claimant 1 with delta 1/2",
        witness.is_some_and(|w| p.claimants()[w.claimant] == "1" && w.delta == q("1/2")),
    );
    c.finish(2, "CRA table and Pareto failure");
}

#[test]
fn criterion_03_rmon_counterexample() {
    let p = fixture("rmon_counterexample.json");
    let sigma = Permutation::parse("13572468", p.claimants()).unwrap();
    let mut c = Checks::new();
    c.add(
        "E = (9,12,7) gives (3,2,4,0,5,0,3,4)",
        csp(&p, &sigma) == ints(&[3, 2, 4, 0, 5, 0, 3, 4]),
    );
    let raised = qs(&["9", "13", "7"]);
    let richer = p.with_estates(raised.clone()).unwrap();
    c.add(
        "E' = (9,13,7) gives (3,2,4,0,5,0,4,3)",
        csp(&richer, &sigma) == ints(&[3, 2, 4, 0, 5, 0, 4, 3]),
    );
    let rule = csp_rule("13572468");
    let report = check_rmon(&rule, &p, &raised, budget()).unwrap();
    c.add(
        "check_rmon reports claimant 8 dropping 4 -> 3",
        report.witness
            == Some(Witness::ResourceDrop {
                estates: raised,
                claimant: "8".into(),
                before: q("4"),
                after: q("3"),
            }),
    );
    c.add(
        "witness rechecks",
        recheck(&report, &rule, &p, budget()).unwrap(),
    );
    c.finish(3, "resource monotonicity counterexample");
}

#[test]
fn criterion_04_cra_population_and_balance() {
    let p = fixture("three_by_three.json");
    let mut c = Checks::new();
    let rows = cra_rows(&p, budget()).unwrap();
    let expected = [
        [3, 2, 5],
        [3, 2, 5],
        [1, 4, 3],
        [1, 4, 3],
        [3, 2, 5],
        [3, 2, 5],
    ];
    c.add("six order rows", rows.len() == 6);
    for (k, ((order, x), want)) in rows.iter().zip(expected).enumerate() {
        c.add(
            format!("row {} (#{k})", order.label(p.claimants())),
            *x == ints(&want),
        );
    }
    let cra = cra_exact(&p, budget()).unwrap().allocation;
    c.add(
        "CRA = (7/3, 8/3, 13/3)",
        cra == alloc(&["7/3", "8/3", "13/3"]),
    );

    for (leaver, want) in [(2, [3, 2]), (1, [1, 3]), (0, [2, 5])] {
        let sub = removal_problem(&p, leaver).unwrap().problem;
        let x = cra_exact(&sub, budget()).unwrap().allocation;
        c.add(
            format!("without claimant {}: {:?}", p.claimants()[leaver], want),
            x == ints(&want),
        );
    }

    let pmon = check_pmon(&RuleUnderTest::Cra, &p, 2, budget()).unwrap();
    c.add(
        "P-MON violated when claimant 3 leaves",
        matches!(&pmon.witness, Some(Witness::PopulationGain { leaver, .. }) if leaver == "3"),
    );
    let bal = check_bal(&RuleUnderTest::Cra, &p, 0, 1, budget()).unwrap();
    c.add(
        "BAL gaps 4/3 vs 2/3",
        bal.witness
            == Some(Witness::Imbalance {
                first: "1".into(),
                second: "2".into(),
                first_impact: q("4/3"),
                second_impact: q("2/3"),
            }),
    );
    c.finish(4, "CRA population monotonicity and balance");
}

#[test]
fn criterion_05_crastar_walkthrough() {
    let p = fixture("two_level_example.json");
    let mut c = Checks::new();
    let rows = crastar_rows(&p, budget()).unwrap();
    let expected = [
        ("123", ["8/3", "11/3", "8/3", "11/3", "13/3"]),
        ("132", ["8/3", "11/3", "8/3", "10/3", "14/3"]),
        ("213", ["3", "3", "2", "5", "3"]),
        ("231", ["3", "3", "2", "5", "3"]),
        ("312", ["3", "3.25", "2.25", "4.5", "3.5"]),
        ("321", ["3", "3.25", "2.25", "4.5", "3.5"]),
    ];
    c.add("six issue-order rows", rows.len() == 6);
    for ((order, x), (label, want)) in rows.iter().zip(expected) {
        c.add(
            format!("row {label}"),
            order.label(p.issues()) == label && *x == alloc(&want),
        );
    }
    let star = crastar_exact(&p, budget()).unwrap().allocation;
    c.add(
        "CRA* = (26/9, 119/36, 83/36, 13/3, 11/3)",
        star == alloc(&["26/9", "119/36", "83/36", "13/3", "11/3"]),
    );

    // (issue order, step, e', c', c'') as listed in the worked example.
    let states: [StateRow; 9] = [
        (
            "123",
            0,
            ["0", "11/3", "8"],
            ["1/3", "1/3", "1/3", "6", "5"],
            ["0", "0", "0", "11/3", "5"],
        ),
        (
            "123",
            1,
            ["0", "0", "13/3"],
            ["0", "0", "0", "0", "5"],
            ["0", "0", "0", "0", "13/3"],
        ),
        (
            "132",
            0,
            ["0", "11/3", "8"],
            ["1/3", "1/3", "1/3", "6", "5"],
            ["0", "0", "0", "11/3", "5"],
        ),
        (
            "132",
            1,
            ["0", "1/3", "0"],
            ["0", "0", "0", "1/3", "1/3"],
            ["0", "0", "0", "0", "0"],
        ),
        (
            "213",
            0,
            ["4", "0", "3"],
            ["3", "1", "1", "1", "5"],
            ["3", "0", "0", "0", "3"],
        ),
        (
            "312",
            0,
            ["9", "5.5", "0"],
            ["3", "4", "3", "1.5", "1.5"],
            ["3", "4", "3", "0", "0"],
        ),
        (
            "312",
            1,
            ["0.5", "0", "0"],
            ["0", "0.75", "0.75", "0", "0"],
            ["0", "0", "0", "0", "0"],
        ),
        (
            "321",
            0,
            ["9", "5.5", "0"],
            ["3", "4", "3", "1.5", "1.5"],
            ["3", "4", "3", "0", "0"],
        ),
        (
            "321",
            1,
            ["3.5", "0", "0"],
            ["3", "0.75", "0.75", "0", "0"],
            ["3", "0", "0", "0", "0"],
        ),
    ];
    for (order, step, e, cu, ct) in states {
        let omega = Permutation::parse(order, p.issues()).unwrap();
        let trace = crastar_trace(&p, &omega);
        let after = &trace[step].after;
        c.add(
            format!("order {order}, update after step {}", step + 1),
            after.estates == qs(&e) && after.claims == qs(&cu) && after.truncated == qs(&ct),
        );
    }
    c.finish(5, "two-level rule walkthrough");
}

#[test]
fn criterion_06_crastar_cross_checks() {
    let mut c = Checks::new();
    let fig = fixture("three_by_three.json");
    let star = crastar_exact(&fig, budget()).unwrap().allocation;
    let cra = cra_exact(&fig, budget()).unwrap().allocation;
    c.add(
        "three-by-three: CRA* = CRA = (7/3, 8/3, 13/3)",
        star == cra && cra == alloc(&["7/3", "8/3", "13/3"]),
    );

    let p = fixture("peff_counterexample.json");
    let rows = crastar_rows(&p, budget()).unwrap();
    c.add(
        "issue-order rows (1,3,5) and (3/2,5/2,11/2)",
        rows.iter().map(|(_, x)| x.clone()).collect::<Vec<_>>()
            == vec![ints(&[1, 3, 5]), alloc(&["3/2", "5/2", "11/2"])],
    );
    let star = crastar_exact(&p, budget()).unwrap().allocation;
    c.add(
        "CRA* = (5/4, 11/4, 21/4)",
        star == alloc(&["5/4", "11/4", "21/4"]),
    );
    c.add(
        "CRA* is Pareto efficient",
        is_pareto_efficient(&p, &star).unwrap().efficient,
    );
    let cra = cra_exact(&p, budget()).unwrap().allocation;
    c.add(
        "CRA is not Pareto efficient",
        !is_pareto_efficient(&p, &cra).unwrap().efficient,
    );
    c.finish(6, "two-level rule cross-checks");
}

fn has_equal_pair(p: &MbcProblem) -> bool {
    (0..p.n()).any(|j| (j + 1..p.n()).any(|k| are_equal(p, j, k)))
}

#[test]
fn criterion_07_property_suite() {
    let params = GenParams {
        claimants: (2, 6),
        issues: (1, 4),
        ..GenParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut infeasible = 0;
    let mut inefficient = 0;
    let mut pri = 0;
    let mut cons = 0;
    let mut avg_infeasible = 0;
    let mut ete = 0;
    let mut with_duplicates = 0;
    let mut first_pri: Option<String> = None;
    for t in 0..500 {
        let p = random_mbc(&params, 70_000 + t);
        for _ in 0..3 {
            let mut order: Vec<usize> = (0..p.n()).collect();
            order.shuffle(&mut rng);
            let sigma = Permutation::new(order, p.n()).unwrap();
            let x = csp(&p, &sigma);
            infeasible += usize::from(!is_feasible(&p, &x));
            inefficient += usize::from(!is_pareto_efficient(&p, &x).unwrap().efficient);
            let report = check_pri(&x, &p, &sigma).unwrap();
            if report.is_violated() {
                pri += 1;
                first_pri.get_or_insert_with(|| {
                    format!("instance seed {}: {}", 70_000 + t, report.witness.unwrap())
                });
            }
            let ids: Vec<String> = sigma
                .as_slice()
                .iter()
                .map(|&j| p.claimants()[j].clone())
                .collect();
            let rule = RuleUnderTest::Csp(OrderPolicy::Explicit(ids));
            let keep = mbc_core::generate::random_keep_set(p.n(), &mut rng);
            let report = mbc_core::axioms::check_cons(&rule, &p, &keep, budget()).unwrap();
            cons += usize::from(report.is_violated());
        }
        let cra = cra_exact(&p, budget()).unwrap().allocation;
        let star = crastar_exact(&p, budget()).unwrap().allocation;
        avg_infeasible +=
            usize::from(!is_feasible(&p, &cra)) + usize::from(!is_feasible(&p, &star));
        if has_equal_pair(&p) {
            with_duplicates += 1;
            for x in [&cra, &star] {
                let unequal =
                    (0..p.n()).any(|j| (j + 1..p.n()).any(|k| are_equal(&p, j, k) && x[j] != x[k]));
                ete += usize::from(unequal);
            }
        }
    }
    let mut c = Checks::new();
    c.add(
        format!("CSP infeasible outputs: {infeasible}"),
        infeasible == 0,
    );
    c.add(
        format!("CSP Pareto failures: {inefficient}"),
        inefficient == 0,
    );
    c.add(
        format!(
            "CSP priority violations: {pri}{}",
            first_pri
                .map(|w| format!(" (first: {w})"))
                .unwrap_or_default()
        ),
        pri == 0,
    );
    c.add(format!("CSP consistency failures: {cons}"), cons == 0);
    c.add(
        format!("CRA/CRA* infeasible outputs: {avg_infeasible}"),
        avg_infeasible == 0,
    );
    c.add(
        format!("CRA/CRA* equal-treatment failures: {ete} over {with_duplicates} instances with equal claimants"),
        ete == 0 && with_duplicates > 0,
    );
    c.finish(7, "random property suite");
}

#[test]
fn criterion_08_single_issue_coincidence() {
    let params = GenParams::single_issue();
    let mut mismatches = Vec::new();
    for seed in 0..200 {
        let p = random_mbc(&params, 90_000 + seed);
        let e = &p.estates()[0];
        for sigma in Permutation::all(p.n()) {
            if csp(&p, &sigma) != sp_single(e, p.claims(), &sigma) {
                mismatches.push(format!("seed {seed}: csp vs sp_single"));
            }
        }
        let ra = ra_single(e, p.claims());
        let cra = cra_exact(&p, budget()).unwrap().allocation;
        let star = crastar_exact(&p, budget()).unwrap().allocation;
        if cra != ra || star != ra {
            mismatches.push(format!("seed {seed}: averaged rules differ"));
        }
    }
    let mut c = Checks::new();
    c.add(
        format!("mismatches over 200 instances: {}", mismatches.len()),
        mismatches.is_empty(),
    );
    c.finish(8, "single-issue coincidence");
}

fn render(x: &Allocation) -> String {
    x.values()
        .iter()
        .map(format_rational)
        .collect::<Vec<_>>()
        .join(" ")
}

#[test]
fn criterion_09_sampling_convergence() {
    let p = fixture("three_by_three.json");
    let exact = cra_exact(&p, budget()).unwrap().allocation;
    let exact_f: Vec<f64> = exact
        .values()
        .iter()
        .map(mbc_core::rational::to_f64)
        .collect();
    let mut within = 0;
    for seed in 0..100 {
        let est = cra_sample(&p, 20_000, seed).unwrap().allocation;
        let close = est
            .values()
            .iter()
            .zip(&exact_f)
            .all(|(v, e)| (mbc_core::rational::to_f64(v) - e).abs() <= 0.05);
        within += usize::from(close);
    }
    let once = render(&cra_sample(&p, 20_000, 17).unwrap().allocation);
    let again = render(&cra_sample(&p, 20_000, 17).unwrap().allocation);
    let mut c = Checks::new();
    c.add(format!("{within}/100 seeds within 0.05"), within >= 95);
    c.add("same seed, byte-identical output", once == again);
    c.finish(9, "sampling convergence");
}

#[test]
fn criterion_10_falsification_regressions() {
    let params = GenParams::default();
    let csp_listed = || RuleUnderTest::Csp(OrderPolicy::Listed);
    let expect_found = [
        (RuleUnderTest::Cra, Axiom::Peff),
        (RuleUnderTest::Cra, Axiom::Pmon),
        (RuleUnderTest::Cra, Axiom::Bal),
        (RuleUnderTest::Crastar, Axiom::Pmon),
        (RuleUnderTest::Crastar, Axiom::Bal),
        (csp_listed(), Axiom::Rmon),
        (csp_listed(), Axiom::Ete),
    ];
    let expect_none = [
        (csp_listed(), Axiom::Peff),
        (csp_listed(), Axiom::Pri),
        (csp_listed(), Axiom::Cons),
    ];
    let mut c = Checks::new();
    for (rule, axiom) in expect_found {
        let found = falsify(&rule, axiom, &params, 1, 5_000, budget()).unwrap();
        let label = match &found {
            Some(cx) => format!(
                "({}, {axiom}) violation at trial {}, shrunk to n={} m={}",
                rule.name(),
                cx.trial,
                cx.problem.n(),
                cx.problem.m()
            ),
            None => format!("({}, {axiom}) none found", rule.name()),
        };
        let ok = found.is_some_and(|cx| recheck(&cx.report, &rule, &cx.problem, budget()).unwrap());
        c.add(label, ok);
    }
    for (rule, axiom) in expect_none {
        let found = falsify(&rule, axiom, &params, 1, 5_000, budget()).unwrap();
        let label = match &found {
            Some(cx) => format!(
                "({}, {axiom}) unexpected violation at trial {}: {}",
                rule.name(),
                cx.trial,
                cx.report.witness.as_ref().unwrap()
            ),
            None => format!("({}, {axiom}) none found in 5000 instances", rule.name()),
        };
        c.add(label, found.is_none());
    }
    c.finish(10, "falsification regressions");
}

//! Per-instance checks of the seven axioms, and a seeded falsifier that
//! searches random instances for violations and shrinks what it finds.
//!
//! A verdict is always about one instance: `HoldsOnInstance` means no
//! violation was found there, never that the axiom holds in general.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::crastar::crastar_exact;
use crate::generate::{random_mbc, GenParams};
use crate::problem::{
    are_equal, are_homologous, is_feasible, is_pareto_efficient, reduced_problem, removal_problem,
    Allocation, MbcProblem, ModelError, ValidationError,
};
use crate::rational::{format_rational, Q};
use crate::rules::{cra_exact, csp, Budget, ClaimantOrder, Permutation, RuleError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AxiomError {
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("no tabulated allocation for this problem")]
    MissingTableEntry,
    #[error("the raised estates must dominate the original ones componentwise")]
    NotDominating,
    #[error("the pair must name two different claimants")]
    SameClaimant,
    #[error("unknown axiom {0:?}")]
    UnknownAxiom(String),
    #[error("rule produced an infeasible allocation")]
    InfeasibleOutput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    Peff,
    Ete,
    Cons,
    Pri,
    Rmon,
    Pmon,
    Bal,
}

impl Axiom {
    pub const ALL: [Axiom; 7] = [
        Axiom::Peff,
        Axiom::Ete,
        Axiom::Cons,
        Axiom::Pri,
        Axiom::Rmon,
        Axiom::Pmon,
        Axiom::Bal,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Axiom::Peff => "PEFF",
            Axiom::Ete => "ETE",
            Axiom::Cons => "CONS",
            Axiom::Pri => "PRI",
            Axiom::Rmon => "R-MON",
            Axiom::Pmon => "P-MON",
            Axiom::Bal => "BAL",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Axiom {
    type Err = AxiomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Axiom::ALL
            .into_iter()
            .find(|a| a.tag().replace('-', "").eq_ignore_ascii_case(&key))
            .ok_or_else(|| AxiomError::UnknownAxiom(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    HoldsOnInstance,
    Violated,
}

/// Evidence of a violation. Claimants are named by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// `claimant` can gain `delta` with nobody else changing.
    Improvement { claimant: String, delta: Q },
    UnequalTreatment {
        first: String,
        second: String,
        first_award: Q,
        second_award: Q,
    },
    /// `first` precedes `second` but loses more.
    PriorityLoss {
        first: String,
        second: String,
        first_loss: Q,
        second_loss: Q,
    },
    Inconsistent {
        keep: Vec<String>,
        claimant: String,
        original: Q,
        reduced: Q,
    },
    /// More resources, less for `claimant`.
    ResourceDrop {
        estates: Vec<Q>,
        claimant: String,
        before: Q,
        after: Q,
    },
    /// `claimant` gains when `leaver` departs fully compensated.
    PopulationGain {
        leaver: String,
        claimant: String,
        before: Q,
        after: Q,
    },
    /// `R_first(p) - R_first(p without second)` differs from
    /// `R_second(p) - R_second(p without first)`.
    Imbalance {
        first: String,
        second: String,
        first_impact: Q,
        second_impact: Q,
    },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = format_rational;
        match self {
            Witness::Improvement { claimant, delta } => {
                write!(f, "claimant {claimant} can gain {} with nobody else losing", r(delta))
            }
            Witness::UnequalTreatment { first, second, first_award, second_award } => write!(
                f,
                "equal claimants {first} and {second} receive {} and {}",
                r(first_award),
                r(second_award)
            ),
            Witness::PriorityLoss { first, second, first_loss, second_loss } => write!(
                f,
                "claimant {first} precedes homologous {second} but loses {} > {}",
                r(first_loss),
                r(second_loss)
            ),
            Witness::Inconsistent { keep, claimant, original, reduced } => write!(
                f,
                "keeping {{{}}}: claimant {claimant} gets {} originally but {} in the reduced problem",
                keep.join(","),
                r(original),
                r(reduced)
            ),
            Witness::ResourceDrop { estates, claimant, before, after } => write!(
                f,
                "estates raised to ({}): claimant {claimant} drops from {} to {}",
                estates.iter().map(r).collect::<Vec<_>>().join(", "),
                r(before),
                r(after)
            ),
            Witness::PopulationGain { leaver, claimant, before, after } => write!(
                f,
                "after {leaver} leaves fully paid, claimant {claimant} rises from {} to {}",
                r(before),
                r(after)
            ),
            Witness::Imbalance { first, second, first_impact, second_impact } => write!(
                f,
                "removing {second} changes {first} by {}, removing {first} changes {second} by {}",
                r(first_impact),
                r(second_impact)
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub notes: Vec<String>,
}

impl AxiomReport {
    fn holds(axiom: Axiom) -> Self {
        AxiomReport {
            axiom,
            verdict: Verdict::HoldsOnInstance,
            witness: None,
            notes: Vec::new(),
        }
    }

    fn violated(axiom: Axiom, witness: Witness) -> Self {
        AxiomReport {
            axiom,
            verdict: Verdict::Violated,
            witness: Some(witness),
            notes: Vec::new(),
        }
    }

    pub fn is_violated(&self) -> bool {
        self.verdict == Verdict::Violated
    }

    fn with_notes(mut self, notes: Vec<String>) -> Self {
        self.notes.extend(notes);
        self
    }
}

/// How a priority rule orders the claimants of whatever problem it is given.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderPolicy {
    /// Claimants in the order the problem lists them.
    Listed,
    /// A fixed sequence of claimant ids; on subproblems the absent ids are skipped.
    Explicit(Vec<String>),
}

/// Allocations supplied from outside, keyed by the exact problem they answer.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AllocationTable(pub Vec<(MbcProblem, Allocation)>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleUnderTest {
    Csp(OrderPolicy),
    Cra,
    Crastar,
    Table(AllocationTable),
}

impl RuleUnderTest {
    pub fn name(&self) -> String {
        match self {
            RuleUnderTest::Csp(OrderPolicy::Listed) => "csp".into(),
            RuleUnderTest::Csp(OrderPolicy::Explicit(ids)) => {
                let sep = if ids.iter().all(|id| id.chars().count() == 1) {
                    ""
                } else {
                    ","
                };
                format!("csp:{}", ids.join(sep))
            }
            RuleUnderTest::Cra => "cra".into(),
            RuleUnderTest::Crastar => "crastar".into(),
            RuleUnderTest::Table(_) => "table".into(),
        }
    }

    /// Priority order used for `p`: the rule's own order for CSP, the listed order otherwise.
    pub fn order_for(&self, p: &MbcProblem) -> Result<ClaimantOrder, AxiomError> {
        match self {
            RuleUnderTest::Csp(OrderPolicy::Explicit(ids)) => {
                let order: Vec<usize> = ids.iter().filter_map(|id| p.claimant_index(id)).collect();
                Ok(Permutation::new(order, p.n())?)
            }
            _ => Ok(Permutation::identity(p.n())),
        }
    }

    pub fn evaluate(&self, p: &MbcProblem, budget: Budget) -> Result<Allocation, AxiomError> {
        let x = match self {
            RuleUnderTest::Csp(_) => csp(p, &self.order_for(p)?),
            RuleUnderTest::Cra => cra_exact(p, budget)?.allocation,
            RuleUnderTest::Crastar => crastar_exact(p, budget)?.allocation,
            RuleUnderTest::Table(table) => table
                .0
                .iter()
                .find(|(q, _)| q == p)
                .map(|(_, x)| x.clone())
                .ok_or(AxiomError::MissingTableEntry)?,
        };
        if !is_feasible(p, &x) {
            return Err(AxiomError::InfeasibleOutput);
        }
        Ok(x)
    }
}

fn id(p: &MbcProblem, j: usize) -> String {
    p.claimants()[j].clone()
}

pub fn check_peff(
    rule: &RuleUnderTest,
    p: &MbcProblem,
    budget: Budget,
) -> Result<AxiomReport, AxiomError> {
    let x = rule.evaluate(p, budget)?;
    let verdict = is_pareto_efficient(p, &x)?;
    Ok(match verdict.witness {
        None => AxiomReport::holds(Axiom::Peff),
        Some(w) => AxiomReport::violated(
            Axiom::Peff,
            Witness::Improvement {
                claimant: id(p, w.claimant),
                delta: w.delta,
            },
        ),
    })
}

pub fn check_ete(
    rule: &RuleUnderTest,
    p: &MbcProblem,
    budget: Budget,
) -> Result<AxiomReport, AxiomError> {
    let x = rule.evaluate(p, budget)?;
    for j in 0..p.n() {
        for k in j + 1..p.n() {
            if are_equal(p, j, k) && x[j] != x[k] {
                return Ok(AxiomReport::violated(
                    Axiom::Ete,
                    Witness::UnequalTreatment {
                        first: id(p, j),
                        second: id(p, k),
                        first_award: x[j].clone(),
                        second_award: x[k].clone(),
                    },
                ));
            }
        }
    }
    Ok(AxiomReport::holds(Axiom::Ete))
}

/// Consistency for the departure of everyone outside `keep` (claimant indices).
pub fn check_cons(
    rule: &RuleUnderTest,
    p: &MbcProblem,
    keep: &[usize],
    budget: Budget,
) -> Result<AxiomReport, AxiomError> {
    let x = rule.evaluate(p, budget)?;
    let reduced = reduced_problem(p, &x, keep)?;
    let y = rule.evaluate(&reduced, budget)?;
    let keep_ids: Vec<String> = reduced.claimants().to_vec();
    for (k, claimant) in keep_ids.iter().enumerate() {
        let j = p.claimant_index(claimant).expect("kept claimant exists");
        if x[j] != y[k] {
            return Ok(AxiomReport::violated(
                Axiom::Cons,
                Witness::Inconsistent {
                    keep: keep_ids.clone(),
                    claimant: claimant.clone(),
                    original: x[j].clone(),
                    reduced: y[k].clone(),
                },
            ));
        }
    }
    Ok(AxiomReport::holds(Axiom::Cons))
}

/// Priority: for homologous `j` served before `k`, `c_j - x_j <= c_k - x_k`.
pub fn check_pri(
    x: &Allocation,
    p: &MbcProblem,
    order: &ClaimantOrder,
) -> Result<AxiomReport, AxiomError> {
    if !is_feasible(p, x) {
        return Err(AxiomError::InfeasibleOutput);
    }
    let sequence = order.as_slice();
    let loss = |j: usize| &p.claims()[j] - &x[j];
    for (a, &j) in sequence.iter().enumerate() {
        for &k in &sequence[a + 1..] {
            if are_homologous(p, j, k) && loss(j) > loss(k) {
                return Ok(AxiomReport::violated(
                    Axiom::Pri,
                    Witness::PriorityLoss {
                        first: id(p, j),
                        second: id(p, k),
                        first_loss: loss(j),
                        second_loss: loss(k),
                    },
                ));
            }
        }
    }
    Ok(AxiomReport::holds(Axiom::Pri))
}

/// Resource monotonicity for the move from the problem's estates to `raised`.
pub fn check_rmon(
    rule: &RuleUnderTest,
    p: &MbcProblem,
    raised: &[Q],
    budget: Budget,
) -> Result<AxiomReport, AxiomError> {
    if raised.len() != p.m() || raised.iter().zip(p.estates()).any(|(a, e)| a < e) {
        return Err(AxiomError::NotDominating);
    }
    let richer = p.with_estates(raised.to_vec())?;
    let x = rule.evaluate(p, budget)?;
    let y = rule.evaluate(&richer, budget)?;
    if let Some(j) = (0..p.n()).find(|&j| y[j] < x[j]) {
        return Ok(AxiomReport::violated(
            Axiom::Rmon,
            Witness::ResourceDrop {
                estates: raised.to_vec(),
                claimant: id(p, j),
                before: x[j].clone(),
                after: y[j].clone(),
            },
        ));
    }
    Ok(AxiomReport::holds(Axiom::Rmon))
}

fn clamp_notes(leaver: &str, clamped: &[String]) -> Vec<String> {
    if clamped.is_empty() {
        return Vec::new();
    }
    vec![format!(
        "removing {leaver}: estate of issue(s) {} clamped at 0",
        clamped.join(",")
    )]
}

pub fn check_pmon(
    rule: &RuleUnderTest,
    p: &MbcProblem,
    leaver: usize,
    budget: Budget,
) -> Result<AxiomReport, AxiomError> {
    let removal = removal_problem(p, leaver)?;
    let notes = clamp_notes(&id(p, leaver), &removal.clamped);
    let x = rule.evaluate(p, budget)?;
    let y = rule.evaluate(&removal.problem, budget)?;
    for (k, claimant) in removal.problem.claimants().iter().enumerate() {
        let j = p
            .claimant_index(claimant)
            .expect("remaining claimant exists");
        if y[k] > x[j] {
            return Ok(AxiomReport::violated(
                Axiom::Pmon,
                Witness::PopulationGain {
                    leaver: id(p, leaver),
                    claimant: claimant.clone(),
                    before: x[j].clone(),
                    after: y[k].clone(),
                },
            )
            .with_notes(notes));
        }
    }
    Ok(AxiomReport::holds(Axiom::Pmon).with_notes(notes))
}

pub fn check_bal(
    rule: &RuleUnderTest,
    p: &MbcProblem,
    first: usize,
    second: usize,
    budget: Budget,
) -> Result<AxiomReport, AxiomError> {
    if first == second {
        return Err(AxiomError::SameClaimant);
    }
    let x = rule.evaluate(p, budget)?;
    let without_second = removal_problem(p, second)?;
    let without_first = removal_problem(p, first)?;
    let mut notes = clamp_notes(&id(p, second), &without_second.clamped);
    notes.extend(clamp_notes(&id(p, first), &without_first.clamped));
    let award_in = |sub: &MbcProblem, who: usize| -> Result<Q, AxiomError> {
        let y = rule.evaluate(sub, budget)?;
        let k = sub.claimant_index(&id(p, who)).expect("claimant survives");
        Ok(y[k].clone())
    };
    let first_impact = &x[first] - award_in(&without_second.problem, first)?;
    let second_impact = &x[second] - award_in(&without_first.problem, second)?;
    let report = if first_impact == second_impact {
        AxiomReport::holds(Axiom::Bal)
    } else {
        AxiomReport::violated(
            Axiom::Bal,
            Witness::Imbalance {
                first: id(p, first),
                second: id(p, second),
                first_impact,
                second_impact,
            },
        )
    };
    Ok(report.with_notes(notes))
}

/// Re-runs the operations a violated report cites and confirms they
/// reproduce the same witness exactly.
pub fn recheck(
    report: &AxiomReport,
    rule: &RuleUnderTest,
    p: &MbcProblem,
    budget: Budget,
) -> Result<bool, AxiomError> {
    let Some(witness) = &report.witness else {
        return Ok(!report.is_violated());
    };
    let idx = |name: &str| {
        p.claimant_index(name)
            .ok_or(ModelError::UnknownClaimant(usize::MAX))
    };
    let again = match witness {
        Witness::Improvement { claimant, delta } => {
            let mut x = rule.evaluate(p, budget)?.into_inner();
            x[idx(claimant)?] += delta;
            if !delta.is_positive() || !is_feasible(p, &Allocation::new(x)) {
                return Ok(false);
            }
            check_peff(rule, p, budget)?
        }
        Witness::UnequalTreatment { .. } => check_ete(rule, p, budget)?,
        Witness::PriorityLoss { .. } => {
            check_pri(&rule.evaluate(p, budget)?, p, &rule.order_for(p)?)?
        }
        Witness::Inconsistent { keep, .. } => {
            let keep = keep.iter().map(|k| idx(k)).collect::<Result<Vec<_>, _>>()?;
            check_cons(rule, p, &keep, budget)?
        }
        Witness::ResourceDrop { estates, .. } => check_rmon(rule, p, estates, budget)?,
        Witness::PopulationGain { leaver, .. } => check_pmon(rule, p, idx(leaver)?, budget)?,
        Witness::Imbalance { first, second, .. } => {
            check_bal(rule, p, idx(first)?, idx(second)?, budget)?
        }
    };
    Ok(again.verdict == report.verdict && again.witness == report.witness)
}

/// Runs `axiom` on `p` over every applicable case (all keep sets, leavers or
/// pairs) and returns the first violation, or a holding report.
///
/// For R-MON, `raise` is added to the estates; without it each issue is
/// raised by one unit in turn, then all together.
pub fn search(
    rule: &RuleUnderTest,
    axiom: Axiom,
    p: &MbcProblem,
    raise: Option<&[Q]>,
    budget: Budget,
) -> Result<AxiomReport, AxiomError> {
    let n = p.n();
    let mut notes = Vec::new();
    let mut first_violation = |report: AxiomReport| -> Option<AxiomReport> {
        if report.is_violated() {
            return Some(report);
        }
        notes.extend(report.notes);
        None
    };
    match axiom {
        Axiom::Peff => return check_peff(rule, p, budget),
        Axiom::Ete => return check_ete(rule, p, budget),
        Axiom::Pri => return check_pri(&rule.evaluate(p, budget)?, p, &rule.order_for(p)?),
        Axiom::Cons => {
            // Proper nonempty keep sets in bitmask order, capped for large n.
            let masks = (1u64 << n.min(12)).saturating_sub(1);
            for mask in 1..masks.max(1) {
                let keep: Vec<usize> = (0..n).filter(|&j| mask >> j & 1 == 1).collect();
                if keep.len() == n {
                    continue;
                }
                if let Some(v) = first_violation(check_cons(rule, p, &keep, budget)?) {
                    return Ok(v);
                }
            }
        }
        Axiom::Rmon => {
            let raises: Vec<Vec<Q>> = match raise {
                Some(r) => vec![r.to_vec()],
                None => {
                    let unit = |i: usize| -> Vec<Q> {
                        (0..p.m())
                            .map(|k| {
                                if k == i {
                                    Q::from_integer(1.into())
                                } else {
                                    Q::zero()
                                }
                            })
                            .collect()
                    };
                    let mut all: Vec<Vec<Q>> = (0..p.m()).map(unit).collect();
                    if p.m() > 1 {
                        all.push(vec![Q::from_integer(1.into()); p.m()]);
                    }
                    all
                }
            };
            for r in raises {
                let raised: Vec<Q> = p.estates().iter().zip(&r).map(|(e, d)| e + d).collect();
                if let Some(v) = first_violation(check_rmon(rule, p, &raised, budget)?) {
                    return Ok(v);
                }
            }
        }
        Axiom::Pmon => {
            if n >= 2 {
                for leaver in 0..n {
                    if let Some(v) = first_violation(check_pmon(rule, p, leaver, budget)?) {
                        return Ok(v);
                    }
                }
            }
        }
        Axiom::Bal => {
            if n >= 2 {
                for j in 0..n {
                    for k in j + 1..n {
                        if let Some(v) = first_violation(check_bal(rule, p, j, k, budget)?) {
                            return Ok(v);
                        }
                    }
                }
            }
        }
    }
    notes.sort();
    notes.dedup();
    Ok(AxiomReport::holds(axiom).with_notes(notes))
}

/// A violating instance found by [`falsify`], after shrinking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub problem: MbcProblem,
    /// Estate increase used for R-MON, aligned with `problem.issues()`.
    pub raise: Option<Vec<Q>>,
    pub report: AxiomReport,
    /// Zero-based index of the random trial that first violated.
    pub trial: usize,
}

/// Draws up to `trials` random instances looking for a violation of `axiom`
/// by `rule`; the first one found is shrunk and returned.
///
/// Deterministic in `(rule, axiom, params, seed, trials)`.
pub fn falsify(
    rule: &RuleUnderTest,
    axiom: Axiom,
    params: &GenParams,
    seed: u64,
    trials: usize,
    budget: Budget,
) -> Result<Option<Counterexample>, AxiomError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Q::new(BigInt::from(1), BigInt::from(params.denominator.max(1)));
    for trial in 0..trials {
        let p = random_mbc(params, rng.gen());
        let raise = (axiom == Axiom::Rmon).then(|| random_raise(&p, params, &unit, &mut rng));
        let report = search(rule, axiom, &p, raise.as_deref(), budget)?;
        if report.is_violated() {
            let (problem, raise, report) = shrink(rule, axiom, p, raise, report, budget)?;
            return Ok(Some(Counterexample {
                problem,
                raise,
                report,
                trial,
            }));
        }
    }
    Ok(None)
}

fn random_raise(p: &MbcProblem, params: &GenParams, unit: &Q, rng: &mut impl Rng) -> Vec<Q> {
    let top = params.claim_range.1.max(1);
    let mut raise: Vec<Q> = (0..p.m())
        .map(|_| {
            if rng.gen_bool(0.5) {
                unit * Q::from_integer(rng.gen_range(1..=top).into())
            } else {
                Q::zero()
            }
        })
        .collect();
    if raise.iter().all(Zero::is_zero) {
        let i = rng.gen_range(0..p.m());
        raise[i] = unit.clone();
    }
    raise
}

fn halve(v: &Q) -> Q {
    Q::new(v.numer().div_floor(&BigInt::from(2)), v.denom().clone())
}

type Candidate = (MbcProblem, Option<Vec<Q>>, AxiomReport);

/// Greedy shrinking: drop claimants one at a time, then halve claims,
/// estates and the R-MON raise, keeping each change that still violates.
fn shrink(
    rule: &RuleUnderTest,
    axiom: Axiom,
    problem: MbcProblem,
    raise: Option<Vec<Q>>,
    report: AxiomReport,
    budget: Budget,
) -> Result<Candidate, AxiomError> {
    let mut best: Candidate = (problem, raise, report);
    let still_violates =
        |p: &MbcProblem, r: &Option<Vec<Q>>| -> Result<Option<AxiomReport>, AxiomError> {
            let report = search(rule, axiom, p, r.as_deref(), budget)?;
            Ok(report.is_violated().then_some(report))
        };
    'outer: loop {
        let (p, raise, _) = &best;
        for j in 0..p.n() {
            let Ok(smaller) = p.drop_claimant(j) else {
                continue;
            };
            let raise = raise.as_ref().map(|r| {
                smaller
                    .issues()
                    .iter()
                    .map(|id| r[p.issue_index(id).expect("issue survives")].clone())
                    .collect::<Vec<_>>()
            });
            if let Some(report) = still_violates(&smaller, &raise)? {
                best = (smaller, raise, report);
                continue 'outer;
            }
        }
        let mut tries: Vec<(MbcProblem, Option<Vec<Q>>)> = Vec::new();
        for j in 0..p.n() {
            let h = halve(&p.claims()[j]);
            if h != p.claims()[j] {
                let mut claims = p.claims().to_vec();
                claims[j] = h;
                tries.push((p.with_claims(claims)?, raise.clone()));
            }
        }
        for i in 0..p.m() {
            let h = halve(&p.estates()[i]);
            if h != p.estates()[i] {
                let mut estates = p.estates().to_vec();
                estates[i] = h;
                tries.push((p.with_estates(estates)?, raise.clone()));
            }
        }
        if let Some(r) = raise {
            for i in 0..r.len() {
                let h = halve(&r[i]);
                if h != r[i] {
                    let mut r2 = r.clone();
                    r2[i] = h;
                    tries.push((p.clone(), Some(r2)));
                }
            }
        }
        for (q, r) in tries {
            if let Some(report) = still_violates(&q, &r)? {
                best = (q, r, report);
                continue 'outer;
            }
        }
        return Ok(best);
    }
}

//! Two-level random arrival (CRA*).
//!
//! Issues are processed one at a time in some order. At each step the
//! claimants of the current issue share it by random arrival, with every
//! live estate they demand constraining them; estates and claims are then
//! charged and claims re-truncated by the remaining estates. The rule
//! averages the resulting allocations over all issue orders.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::problem::{is_feasible, truncate, Allocation, MbcProblem};
use crate::rational::{format_rational, Q};
use crate::rules::{
    Budget, MeanAccumulator, Mode, Permutation, RuleError, RuleValue, SampleSummary,
};
use crate::sweep::{all_orders_totals, factorial, factorial_big, sweep};

/// Order in which issues are processed (ω).
pub type IssueOrder = Permutation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CrastarError {
    #[error("update left {what} {id:?} negative ({value})")]
    Negative {
        what: &'static str,
        id: String,
        value: String,
    },
    #[error("issue index {0} out of range")]
    UnknownIssue(usize),
}

/// State between issue steps: live estates, updated claims and truncated claims.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CrastarState {
    pub step: usize,
    pub estates: Vec<Q>,
    pub claims: Vec<Q>,
    pub truncated: Vec<Q>,
}

impl CrastarState {
    pub fn initial(p: &MbcProblem) -> Self {
        CrastarState {
            step: 0,
            estates: p.estates().to_vec(),
            claims: p.claims().to_vec(),
            truncated: truncate(p.claims(), p.estates(), p.alpha_sets()),
        }
    }
}

/// Random arrival share of `issue` among its claimants, given `state`.
///
/// Every order of the issue's claimants is swept with the truncated claims
/// against all live estates, and the awards are averaged. Returns an empty
/// map when nobody claims the issue, and zeros when all their truncated
/// claims are zero.
pub fn issue_step(p: &MbcProblem, state: &CrastarState, issue: usize) -> BTreeMap<usize, Q> {
    let participants = p.members(issue);
    if participants.iter().all(|&j| state.truncated[j].is_zero()) {
        return participants.iter().map(|&j| (j, Q::zero())).collect();
    }
    let totals = all_orders_totals(
        participants,
        &state.truncated,
        p.alpha_sets(),
        &state.estates,
    );
    let count = Q::from_integer(factorial_big(participants.len()));
    participants
        .iter()
        .map(|&j| (j, &totals[j] / &count))
        .collect()
}

/// As [`issue_step`], averaging over `samples` random claimant orders instead of all of them.
fn issue_step_sampled(
    p: &MbcProblem,
    state: &CrastarState,
    issue: usize,
    samples: u64,
    rng: &mut impl Rng,
) -> BTreeMap<usize, Q> {
    let participants = p.members(issue);
    if participants.iter().all(|&j| state.truncated[j].is_zero()) {
        return participants.iter().map(|&j| (j, Q::zero())).collect();
    }
    let mut sum = vec![Q::zero(); p.n()];
    let mut order = participants.to_vec();
    for _ in 0..samples {
        order.copy_from_slice(participants);
        order.shuffle(rng);
        let mut residual = state.estates.clone();
        let mut out = vec![Q::zero(); p.n()];
        sweep(
            order.iter().copied(),
            &state.truncated,
            p.alpha_sets(),
            &mut residual,
            &mut out,
        );
        for &j in participants {
            sum[j] += &out[j];
        }
    }
    let count = Q::from_integer(samples.into());
    participants
        .iter()
        .map(|&j| (j, &sum[j] / &count))
        .collect()
}

/// Charges `amounts` (awarded on `issue`) to every estate the recipients
/// demand, lowers their claims, and re-truncates all claims.
pub fn apply_update(
    p: &MbcProblem,
    state: &CrastarState,
    amounts: &BTreeMap<usize, Q>,
    issue: usize,
) -> Result<CrastarState, CrastarError> {
    if issue >= p.m() {
        return Err(CrastarError::UnknownIssue(issue));
    }
    let mut estates = state.estates.clone();
    let mut claims = state.truncated.clone();
    for (&j, amount) in amounts {
        for &i in p.alpha(j) {
            estates[i] -= amount;
        }
        claims[j] -= amount;
    }
    if let Some(i) = estates.iter().position(Signed::is_negative) {
        return Err(CrastarError::Negative {
            what: "estate",
            id: p.issues()[i].clone(),
            value: format_rational(&estates[i]),
        });
    }
    if let Some(j) = claims.iter().position(Signed::is_negative) {
        return Err(CrastarError::Negative {
            what: "claim",
            id: p.claimants()[j].clone(),
            value: format_rational(&claims[j]),
        });
    }
    let truncated = truncate(&claims, &estates, p.alpha_sets());
    Ok(CrastarState {
        step: state.step + 1,
        estates,
        claims,
        truncated,
    })
}

/// One processed issue: its random arrival shares and the state after the update phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub issue: usize,
    pub amounts: BTreeMap<usize, Q>,
    pub after: CrastarState,
}

/// Every step taken for the issue order `omega`.
pub fn crastar_trace(p: &MbcProblem, omega: &IssueOrder) -> Vec<StepRecord> {
    assert_eq!(omega.len(), p.m(), "issue order must cover every issue");
    let mut state = CrastarState::initial(p);
    let mut steps = Vec::with_capacity(p.m());
    for &issue in omega.as_slice() {
        let amounts = issue_step(p, &state, issue);
        state =
            apply_update(p, &state, &amounts, issue).expect("issue step stays within live estates");
        steps.push(StepRecord {
            issue,
            amounts,
            after: state.clone(),
        });
    }
    steps
}

/// Allocation `A^ω` for one issue order.
pub fn crastar_for_issue_order(p: &MbcProblem, omega: &IssueOrder) -> Allocation {
    let mut total = vec![Q::zero(); p.n()];
    for step in crastar_trace(p, omega) {
        for (j, amount) in step.amounts {
            total[j] += amount;
        }
    }
    let x = Allocation::new(total);
    debug_assert!(is_feasible(p, &x));
    x
}

fn orders_needed(p: &MbcProblem) -> u128 {
    let widest = (0..p.m()).map(|i| p.members(i).len()).max().unwrap_or(0);
    factorial(p.m()).saturating_mul(factorial(widest))
}

/// Exact CRA*: the mean of [`crastar_for_issue_order`] over all `m!` issue orders.
///
/// Issue orders are walked as a prefix tree, so orders sharing a prefix share
/// its steps; the award at depth `d` is weighted by the `(m - d - 1)!` orders
/// completing that prefix.
pub fn crastar_exact(p: &MbcProblem, budget: Budget) -> Result<RuleValue, RuleError> {
    budget.check(orders_needed(p))?;
    let m = p.m();
    let weights: Vec<Q> = (0..=m).map(|d| Q::from_integer(factorial_big(d))).collect();
    let mut totals = vec![Q::zero(); p.n()];
    let mut used = vec![false; m];
    walk_issue_orders(
        p,
        &CrastarState::initial(p),
        &mut used,
        &weights,
        &mut totals,
    );
    let count = &weights[m];
    let allocation = Allocation::new(totals.into_iter().map(|t| t / count).collect());
    debug_assert!(is_feasible(p, &allocation));
    Ok(RuleValue::exact(allocation))
}

fn walk_issue_orders(
    p: &MbcProblem,
    state: &CrastarState,
    used: &mut [bool],
    weights: &[Q],
    totals: &mut [Q],
) {
    let m = p.m();
    let depth = state.step;
    if depth == m {
        return;
    }
    let completions = &weights[m - depth - 1];
    for issue in 0..m {
        if used[issue] {
            continue;
        }
        let amounts = issue_step(p, state, issue);
        for (&j, amount) in &amounts {
            if !amount.is_zero() {
                totals[j] += amount * completions;
            }
        }
        let next =
            apply_update(p, state, &amounts, issue).expect("issue step stays within live estates");
        used[issue] = true;
        walk_issue_orders(p, &next, used, weights, totals);
        used[issue] = false;
    }
}

/// `A^ω` for every issue order, lexicographically.
pub fn crastar_rows(
    p: &MbcProblem,
    budget: Budget,
) -> Result<Vec<(IssueOrder, Allocation)>, RuleError> {
    budget.check(orders_needed(p))?;
    Ok(Permutation::all(p.m())
        .map(|omega| {
            let x = crastar_for_issue_order(p, &omega);
            (omega, x)
        })
        .collect())
}

/// Sampled CRA*.
///
/// When `m! <= outer_samples` every issue order is used once; otherwise
/// `outer_samples` issue orders are drawn with replacement. Likewise an issue
/// step is exact when its claimants have at most `inner_samples` orders, and
/// averages `inner_samples` drawn orders otherwise. All draws come from one
/// ChaCha8 stream seeded with `seed`.
pub fn crastar_sample(
    p: &MbcProblem,
    outer_samples: u64,
    inner_samples: u64,
    seed: u64,
) -> Result<RuleValue, RuleError> {
    if outer_samples == 0 || inner_samples == 0 {
        return Err(RuleError::NoSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omegas: Vec<IssueOrder> = if factorial(p.m()) <= outer_samples as u128 {
        Permutation::all(p.m()).collect()
    } else {
        (0..outer_samples)
            .map(|_| {
                let mut o: Vec<usize> = (0..p.m()).collect();
                o.shuffle(&mut rng);
                Permutation::new(o, p.m()).expect("shuffled identity")
            })
            .collect()
    };
    let mut acc = MeanAccumulator::new(p.n());
    for omega in &omegas {
        let mut state = CrastarState::initial(p);
        let mut total = vec![Q::zero(); p.n()];
        for &issue in omega.as_slice() {
            let amounts = if factorial(p.members(issue).len()) <= inner_samples as u128 {
                issue_step(p, &state, issue)
            } else {
                issue_step_sampled(p, &state, issue, inner_samples, &mut rng)
            };
            for (&j, a) in &amounts {
                total[j] += a;
            }
            state = apply_update(p, &state, &amounts, issue)
                .expect("issue step stays within live estates");
        }
        acc.push(&Allocation::new(total));
    }
    let (allocation, half_width) = acc.finish();
    assert!(
        is_feasible(p, &allocation),
        "sampled mean left the feasible set"
    );
    Ok(RuleValue {
        allocation,
        mode: Mode::Sampled(SampleSummary {
            samples: omegas.len() as u64,
            inner_samples: Some(inner_samples),
            seed,
            half_width,
        }),
    })
}

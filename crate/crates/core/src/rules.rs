//! Sequential priority and random arrival rules, for a single estate and for
//! problems with crossed claims.

use itertools::Itertools;
use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::problem::{is_feasible, Allocation, MbcProblem};
use crate::rational::{to_f64, Q};
use crate::sweep::{all_orders_totals, factorial, factorial_big, sweep};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("exact evaluation needs {needed} orders, over the budget of {limit}; use sampling or raise the budget")]
    BudgetExceeded { needed: u128, limit: u128 },
    #[error("not an order of the {expected} entries: {reason}")]
    InvalidOrder { expected: usize, reason: String },
    #[error("sample count must be at least 1")]
    NoSamples,
}

/// Cap on the number of orders an exact evaluation may enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_orders: u128,
}

impl Default for Budget {
    /// 10! orders.
    fn default() -> Self {
        Budget {
            max_orders: factorial(10),
        }
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget {
            max_orders: u128::MAX,
        }
    }

    pub fn check(&self, needed: u128) -> Result<(), RuleError> {
        if needed > self.max_orders {
            return Err(RuleError::BudgetExceeded {
                needed,
                limit: self.max_orders,
            });
        }
        Ok(())
    }
}

/// A permutation of `0..len`, listed by position: `order[0]` is served first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(order: Vec<usize>, len: usize) -> Result<Self, RuleError> {
        let invalid = |reason: String| RuleError::InvalidOrder {
            expected: len,
            reason,
        };
        if order.len() != len {
            return Err(invalid(format!("got {} entries", order.len())));
        }
        let mut seen = vec![false; len];
        for &j in &order {
            if j >= len {
                return Err(invalid(format!("index {j} out of range")));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(invalid(format!("index {j} repeated")));
            }
        }
        Ok(Permutation(order))
    }

    pub fn identity(len: usize) -> Self {
        Permutation((0..len).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `position[j]` is the rank at which `j` is served.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (rank, &j) in self.0.iter().enumerate() {
            pos[j] = rank;
        }
        pos
    }

    /// Joins `ids` in order: concatenated when every id is one character, comma-separated otherwise.
    pub fn label(&self, ids: &[String]) -> String {
        let parts: Vec<&str> = self.0.iter().map(|&j| ids[j].as_str()).collect();
        if parts.iter().all(|s| s.chars().count() == 1) {
            parts.concat()
        } else {
            parts.join(",")
        }
    }

    /// Reads `"13572468"` (single-character ids) or `"1,3,5"` against `ids`.
    pub fn parse(text: &str, ids: &[String]) -> Result<Self, RuleError> {
        let text = text.trim();
        let tokens: Vec<String> = if text.contains(',') {
            text.split(',').map(|t| t.trim().to_string()).collect()
        } else if ids.iter().all(|s| s.chars().count() == 1) {
            text.chars().map(String::from).collect()
        } else {
            text.split_whitespace().map(String::from).collect()
        };
        let order = tokens
            .iter()
            .map(|t| {
                ids.iter()
                    .position(|id| id == t)
                    .ok_or_else(|| RuleError::InvalidOrder {
                        expected: ids.len(),
                        reason: format!("unknown id {t:?}"),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Permutation::new(order, ids.len())
    }

    /// All permutations of `0..len` in lexicographic order, streamed.
    pub fn all(len: usize) -> impl Iterator<Item = Permutation> {
        (0..len).permutations(len).map(Permutation)
    }
}

/// Claimant priority order σ.
pub type ClaimantOrder = Permutation;

/// Exact or sampled value of a rule.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleValue {
    pub allocation: Allocation,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    Exact,
    Sampled(SampleSummary),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSummary {
    pub samples: u64,
    /// Inner order samples per issue step (two-level rule only).
    pub inner_samples: Option<u64>,
    pub seed: u64,
    /// Per-claimant 95% normal half-width of the mean; absent with fewer than two samples.
    pub half_width: Option<Vec<f64>>,
}

impl RuleValue {
    pub fn exact(allocation: Allocation) -> Self {
        RuleValue {
            allocation,
            mode: Mode::Exact,
        }
    }
}

/// Sequential priority for one estate: `min(c_i, max(0, e - sum of claims served before i))`.
pub fn sp_single(estate: &Q, claims: &[Q], order: &ClaimantOrder) -> Allocation {
    let pos = order.positions();
    Allocation::new(
        (0..claims.len())
            .map(|i| {
                let ahead: Q = (0..claims.len())
                    .filter(|&j| pos[j] < pos[i])
                    .map(|j| &claims[j])
                    .sum();
                let left = estate - ahead;
                if left.is_positive() {
                    claims[i].clone().min(left)
                } else {
                    Q::zero()
                }
            })
            .collect(),
    )
}

/// Random arrival for one estate: the mean of [`sp_single`] over every order,
/// evaluated leaf by leaf.
pub fn ra_single(estate: &Q, claims: &[Q]) -> Allocation {
    let n = claims.len();
    let mut sum = vec![Q::zero(); n];
    for order in Permutation::all(n) {
        for (s, v) in sum
            .iter_mut()
            .zip(sp_single(estate, claims, &order).into_inner())
        {
            *s += v;
        }
    }
    let count = Q::from_integer(factorial_big(n));
    Allocation::new(sum.into_iter().map(|s| s / &count).collect())
}

/// Constrained sequential priority: claimants are served in `order`, each
/// taking as much as its claim and the live residual of all its issues allow;
/// every issue it demands is charged what it actually received.
pub fn csp(p: &MbcProblem, order: &ClaimantOrder) -> Allocation {
    assert_eq!(order.len(), p.n(), "order must cover every claimant");
    let mut residual = p.estates().to_vec();
    let mut out = vec![Q::zero(); p.n()];
    sweep(
        order.as_slice().iter().copied(),
        p.claims(),
        p.alpha_sets(),
        &mut residual,
        &mut out,
    );
    Allocation::new(out)
}

/// Literal closed form that charges predecessors' full claims instead of their awards.
///
/// Diagnostic only: it disagrees with the sweep whenever an earlier claimant was
/// rationed, e.g. claimant 8 of the eight-claimant instance gets 2 here but 5 from [`csp`].
pub fn csp_closed_form(p: &MbcProblem, order: &ClaimantOrder) -> Allocation {
    let pos = order.positions();
    Allocation::new(
        (0..p.n())
            .map(|j| {
                let room = p
                    .alpha(j)
                    .iter()
                    .map(|&i| {
                        let ahead: Q = p
                            .members(i)
                            .iter()
                            .filter(|&&k| pos[k] < pos[j])
                            .map(|&k| &p.claims()[k])
                            .sum();
                        &p.estates()[i] - ahead
                    })
                    .min()
                    .expect("alpha nonempty");
                if room.is_positive() {
                    p.claims()[j].clone().min(room)
                } else {
                    Q::zero()
                }
            })
            .collect(),
    )
}

/// Constrained random arrival: exact mean of [`csp`] over all `n!` claimant orders.
pub fn cra_exact(p: &MbcProblem, budget: Budget) -> Result<RuleValue, RuleError> {
    budget.check(factorial(p.n()))?;
    let participants: Vec<usize> = (0..p.n()).collect();
    let totals = all_orders_totals(&participants, p.claims(), p.alpha_sets(), p.estates());
    let count = Q::from_integer(factorial_big(p.n()));
    let allocation = Allocation::new(totals.into_iter().map(|t| t / &count).collect());
    debug_assert!(is_feasible(p, &allocation));
    Ok(RuleValue::exact(allocation))
}

/// [`csp`] for every claimant order, lexicographically.
pub fn cra_rows(
    p: &MbcProblem,
    budget: Budget,
) -> Result<Vec<(ClaimantOrder, Allocation)>, RuleError> {
    budget.check(factorial(p.n()))?;
    Ok(Permutation::all(p.n())
        .map(|order| {
            let x = csp(p, &order);
            (order, x)
        })
        .collect())
}

/// Mean of explicitly enumerated rows; an independent route to [`cra_exact`].
pub fn mean_of_rows<'a>(rows: impl IntoIterator<Item = &'a Allocation>, n: usize) -> Allocation {
    let mut sum = vec![Q::zero(); n];
    let mut count = 0u64;
    for row in rows {
        for (s, v) in sum.iter_mut().zip(row.values()) {
            *s += v;
        }
        count += 1;
    }
    let count = Q::from_integer(count.into());
    Allocation::new(sum.into_iter().map(|s| s / &count).collect())
}

/// Monte Carlo estimate of the constrained random arrival rule.
///
/// Orders are drawn uniformly with replacement from a ChaCha8 stream seeded
/// with `seed`; the mean is kept exact, so it is feasible by convexity.
pub fn cra_sample(p: &MbcProblem, samples: u64, seed: u64) -> Result<RuleValue, RuleError> {
    if samples == 0 {
        return Err(RuleError::NoSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = MeanAccumulator::new(p.n());
    let mut order: Vec<usize> = (0..p.n()).collect();
    for _ in 0..samples {
        order.sort_unstable();
        order.shuffle(&mut rng);
        acc.push(&csp(p, &Permutation(order.clone())));
    }
    let (allocation, half_width) = acc.finish();
    assert!(
        is_feasible(p, &allocation),
        "sampled mean left the feasible set"
    );
    Ok(RuleValue {
        allocation,
        mode: Mode::Sampled(SampleSummary {
            samples,
            inner_samples: None,
            seed,
            half_width,
        }),
    })
}

/// Exact running sum plus floating second moments for dispersion.
pub(crate) struct MeanAccumulator {
    sum: Vec<Q>,
    sum_f: Vec<f64>,
    sum_sq: Vec<f64>,
    count: u64,
}

impl MeanAccumulator {
    pub(crate) fn new(n: usize) -> Self {
        MeanAccumulator {
            sum: vec![Q::zero(); n],
            sum_f: vec![0.0; n],
            sum_sq: vec![0.0; n],
            count: 0,
        }
    }

    pub(crate) fn push(&mut self, x: &Allocation) {
        for (j, v) in x.values().iter().enumerate() {
            self.sum[j] += v;
            let f = to_f64(v);
            self.sum_f[j] += f;
            self.sum_sq[j] += f * f;
        }
        self.count += 1;
    }

    pub(crate) fn finish(self) -> (Allocation, Option<Vec<f64>>) {
        let n = self.count as f64;
        let half_width = (self.count >= 2).then(|| {
            self.sum_f
                .iter()
                .zip(&self.sum_sq)
                .map(|(s, sq)| {
                    let var = ((sq - s * s / n) / (n - 1.0)).max(0.0);
                    1.96 * (var / n).sqrt()
                })
                .collect()
        });
        let count = Q::from_integer(self.count.into());
        let mean = self.sum.into_iter().map(|s| s / &count).collect();
        (Allocation::new(mean), half_width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::problem::is_pareto_efficient;
    use crate::rational::{int, ratio};

    fn ints(v: &[i64]) -> Vec<Q> {
        v.iter().map(|&x| int(x)).collect()
    }

    fn order(p: &MbcProblem, text: &str) -> ClaimantOrder {
        Permutation::parse(text, p.claimants()).unwrap()
    }

    #[test]
    fn permutation_validation_and_parsing() {
        assert!(Permutation::new(vec![0, 0], 2).is_err());
        assert!(Permutation::new(vec![0, 2], 2).is_err());
        assert!(Permutation::new(vec![0], 2).is_err());
        let ids: Vec<String> = ["a", "bb", "c"].iter().map(|s| s.to_string()).collect();
        let p = Permutation::parse("c,a,bb", &ids).unwrap();
        assert_eq!(p.as_slice(), &[2, 0, 1]);
        assert_eq!(p.label(&ids), "c,a,bb");
        assert_eq!(p.positions(), vec![1, 2, 0]);
        assert!(Permutation::parse("c,a", &ids).is_err());
        assert!(Permutation::parse("c,a,zz", &ids).is_err());
        let all: Vec<_> = Permutation::all(3).map(|p| p.as_slice().to_vec()).collect();
        assert_eq!(all[0], vec![0, 1, 2]);
        assert_eq!(all[1], vec![0, 2, 1]);
        assert_eq!(all.len(), 6);
    }

    #[test]
    fn sp_single_cases() {
        let claims = ints(&[2, 5]);
        assert_eq!(
            sp_single(&int(4), &claims, &Permutation::identity(2)),
            Allocation::from_ints(&[2, 2])
        );
        assert_eq!(
            sp_single(
                &int(40),
                &ints(&[2, 5, 7]),
                &Permutation::new(vec![2, 0, 1], 3).unwrap()
            ),
            Allocation::from_ints(&[2, 5, 7])
        );
        assert_eq!(
            sp_single(&int(0), &claims, &Permutation::identity(2)),
            Allocation::zeros(2)
        );
    }

    #[test]
    fn ra_single_cases() {
        assert_eq!(
            ra_single(&int(10), &ints(&[4, 3, 6])),
            Allocation::from_ints(&[3, 2, 5])
        );
        assert_eq!(
            ra_single(&int(8), &ints(&[6, 5])),
            Allocation::new(vec![ratio(9, 2), ratio(7, 2)])
        );
        assert_eq!(
            ra_single(&int(5), &ints(&[4, 4])),
            Allocation::new(vec![ratio(5, 2), ratio(5, 2)])
        );
    }

    #[test]
    fn csp_worked_orders() {
        let p = fixtures::eight_claimants();
        let sigma = order(&p, "13572468");
        assert_eq!(
            csp(&p, &sigma),
            Allocation::from_ints(&[3, 2, 4, 0, 5, 0, 3, 5])
        );

        let p = fixtures::rmon_counterexample();
        assert_eq!(
            csp(&p, &sigma),
            Allocation::from_ints(&[3, 2, 4, 0, 5, 0, 3, 4])
        );
        let richer = p.with_estates(ints(&[9, 13, 7])).unwrap();
        assert_eq!(
            csp(&richer, &sigma),
            Allocation::from_ints(&[3, 2, 4, 0, 5, 0, 4, 3])
        );
    }

    #[test]
    fn closed_form_diverges_from_sweep() {
        let p = fixtures::eight_claimants();
        let sigma = order(&p, "13572468");
        let literal = csp_closed_form(&p, &sigma);
        assert_eq!(literal[7], int(2));
        assert_eq!(csp(&p, &sigma)[7], int(5));
    }

    #[test]
    fn csp_on_one_issue_is_sp() {
        let p = MbcProblem::numbered_int(&[4], &[2, 5, 7], &[&[1], &[1], &[1]]).unwrap();
        for sigma in Permutation::all(3) {
            assert_eq!(csp(&p, &sigma), sp_single(&int(4), p.claims(), &sigma));
        }
    }

    #[test]
    fn cra_tables() {
        let p = fixtures::no_peff();
        let rows = cra_rows(&p, Budget::default()).unwrap();
        let got: Vec<_> = rows
            .iter()
            .map(|(o, x)| (o.label(p.claimants()), x.clone()))
            .collect();
        let want = [
            ("123", [2, 2, 6]),
            ("132", [2, 1, 7]),
            ("213", [0, 4, 4]),
            ("231", [0, 4, 4]),
            ("312", [2, 1, 7]),
            ("321", [2, 1, 7]),
        ];
        for ((label, x), (wl, wx)) in got.iter().zip(want) {
            assert_eq!(label, wl);
            assert_eq!(*x, Allocation::from_ints(&wx));
        }
        let exact = cra_exact(&p, Budget::default()).unwrap();
        assert_eq!(
            exact.allocation,
            Allocation::new(vec![ratio(8, 6), ratio(13, 6), ratio(35, 6)])
        );
        assert_eq!(
            exact.allocation,
            mean_of_rows(rows.iter().map(|(_, x)| x), 3)
        );
        assert!(
            !is_pareto_efficient(&p, &exact.allocation)
                .unwrap()
                .efficient
        );

        let p = fixtures::three_by_three();
        assert_eq!(
            cra_exact(&p, Budget::default()).unwrap().allocation,
            Allocation::new(vec![ratio(7, 3), ratio(8, 3), ratio(13, 3)])
        );
    }

    #[test]
    fn cra_budget_refusal() {
        let p = fixtures::eight_claimants();
        let small = Budget { max_orders: 5040 };
        assert_eq!(
            cra_exact(&p, small),
            Err(RuleError::BudgetExceeded {
                needed: 40320,
                limit: 5040
            })
        );
    }

    #[test]
    fn cra_sampling() {
        let p = fixtures::three_by_three();
        let a = cra_sample(&p, 500, 9).unwrap();
        let b = cra_sample(&p, 500, 9).unwrap();
        assert_eq!(a, b);
        match &a.mode {
            Mode::Sampled(s) => {
                assert_eq!(s.samples, 500);
                assert_eq!(s.half_width.as_ref().unwrap().len(), 3);
            }
            Mode::Exact => panic!("expected sampled mode"),
        }
        let solo = MbcProblem::numbered_int(&[4, 9], &[7], &[&[1, 2]]).unwrap();
        assert_eq!(
            cra_sample(&solo, 3, 1).unwrap().allocation,
            Allocation::from_ints(&[4])
        );
        assert_eq!(cra_sample(&p, 0, 1), Err(RuleError::NoSamples));
    }

    #[test]
    fn one_sample_has_no_dispersion() {
        let p = fixtures::three_by_three();
        let v = cra_sample(&p, 1, 3).unwrap();
        assert!(matches!(
            v.mode,
            Mode::Sampled(SampleSummary {
                half_width: None,
                ..
            })
        ));
    }
}

//! Problem instances with crossed claims: every claimant holds a single claim
//! that is charged against each issue it demands.
//!
//! Identifiers are opaque strings; internally claimants and issues are dense
//! indices in the order they were listed.

use std::collections::{HashMap, HashSet};
use std::ops::Index;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::rational::{format_rational, int, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("problem has no claimants")]
    NoClaimants,
    #[error("issue {0:?} is listed twice")]
    DuplicateIssue(String),
    #[error("claimant {0:?} is listed twice")]
    DuplicateClaimant(String),
    #[error("{section}: key {key:?} appears twice")]
    DuplicateKey { section: &'static str, key: String },
    #[error("estates: no estate for issue {0:?}")]
    MissingEstate(String),
    #[error("claims: no claim for claimant {0:?}")]
    MissingClaim(String),
    #[error("alpha: no issue set for claimant {0:?}")]
    MissingAlpha(String),
    #[error("{section}: {key:?} is not a listed {kind}")]
    UnknownKey {
        section: &'static str,
        key: String,
        kind: &'static str,
    },
    #[error("alpha: claimant {claimant:?} references unknown issue {issue:?}")]
    UnknownIssue { claimant: String, issue: String },
    #[error("alpha: claimant {0:?} claims no issue")]
    EmptyAlpha(String),
    #[error("estates: issue {issue:?} has negative estate {value}")]
    NegativeEstate { issue: String, value: String },
    #[error("claims: claimant {claimant:?} has negative claim {value}")]
    NegativeClaim { claimant: String, value: String },
    #[error("issue {0:?} is claimed by nobody")]
    UnclaimedIssue(String),
}

impl ValidationError {
    /// `(section, key)` of the offending entry, used to anchor messages to a file line.
    pub fn anchor(&self) -> Option<(&'static str, &str)> {
        use ValidationError::*;
        match self {
            NoClaimants => None,
            DuplicateIssue(k) | UnclaimedIssue(k) => Some(("issues", k)),
            DuplicateClaimant(k) => Some(("claimants", k)),
            DuplicateKey { section, key } | UnknownKey { section, key, .. } => Some((section, key)),
            MissingEstate(k) => Some(("issues", k)),
            MissingClaim(k) | MissingAlpha(k) => Some(("claimants", k)),
            UnknownIssue { claimant, .. } | EmptyAlpha(claimant) => Some(("alpha", claimant)),
            NegativeEstate { issue, .. } => Some(("estates", issue)),
            NegativeClaim { claimant, .. } => Some(("claims", claimant)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("allocation has {found} entries, problem has {expected} claimants")]
    AllocationLength { expected: usize, found: usize },
    #[error("allocation is not feasible")]
    Infeasible,
    #[error("claimant index {0} out of range")]
    UnknownClaimant(usize),
    #[error("the kept set of claimants is empty")]
    EmptyKeep,
    #[error("removal needs at least two claimants")]
    TooFewClaimants,
    #[error("reduced estate of issue {issue:?} is negative ({value})")]
    NegativeReducedEstate { issue: String, value: String },
}

/// Unvalidated problem description, as read from a file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawProblem {
    pub issues: Vec<String>,
    pub claimants: Vec<String>,
    pub estates: Vec<(String, Q)>,
    pub claims: Vec<(String, Q)>,
    pub alpha: Vec<(String, Vec<String>)>,
}

/// A validated multi-issue bankruptcy problem with crossed claims.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MbcProblem {
    issues: Vec<String>,
    claimants: Vec<String>,
    estates: Vec<Q>,
    claims: Vec<Q>,
    /// Sorted issue indices claimed by each claimant.
    alpha: Vec<Vec<usize>>,
    /// Claimants demanding each issue, in claimant order.
    members: Vec<Vec<usize>>,
    binding: Vec<bool>,
}

pub fn validate_problem(raw: RawProblem) -> Result<MbcProblem, ValidationError> {
    if raw.claimants.is_empty() {
        return Err(ValidationError::NoClaimants);
    }
    let issue_idx = index_ids(&raw.issues).map_err(ValidationError::DuplicateIssue)?;
    let claimant_idx = index_ids(&raw.claimants).map_err(ValidationError::DuplicateClaimant)?;

    let estates = keyed(&raw.estates, "estates", &issue_idx, "issue")?;
    let claims = keyed(&raw.claims, "claims", &claimant_idx, "claimant")?;
    let alpha_sets = keyed(&raw.alpha, "alpha", &claimant_idx, "claimant")?;

    let estates = estates
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let e = e.ok_or_else(|| ValidationError::MissingEstate(raw.issues[i].clone()))?;
            if e.is_negative() {
                return Err(ValidationError::NegativeEstate {
                    issue: raw.issues[i].clone(),
                    value: format_rational(&e),
                });
            }
            Ok(e)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let claims = claims
        .into_iter()
        .enumerate()
        .map(|(j, c)| {
            let c = c.ok_or_else(|| ValidationError::MissingClaim(raw.claimants[j].clone()))?;
            if c.is_negative() {
                return Err(ValidationError::NegativeClaim {
                    claimant: raw.claimants[j].clone(),
                    value: format_rational(&c),
                });
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let alpha = alpha_sets
        .into_iter()
        .enumerate()
        .map(|(j, set)| {
            let name = &raw.claimants[j];
            let set = set.ok_or_else(|| ValidationError::MissingAlpha(name.clone()))?;
            if set.is_empty() {
                return Err(ValidationError::EmptyAlpha(name.clone()));
            }
            let mut idx = set
                .iter()
                .map(|issue| {
                    issue_idx.get(issue.as_str()).copied().ok_or_else(|| {
                        ValidationError::UnknownIssue {
                            claimant: name.clone(),
                            issue: issue.clone(),
                        }
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            idx.sort_unstable();
            idx.dedup();
            Ok(idx)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let problem = MbcProblem::assemble(raw.issues, raw.claimants, estates, claims, alpha);
    if let Some(i) = problem.members.iter().position(Vec::is_empty) {
        return Err(ValidationError::UnclaimedIssue(problem.issues[i].clone()));
    }
    Ok(problem)
}

fn index_ids(ids: &[String]) -> Result<HashMap<&str, usize>, String> {
    let mut map = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if map.insert(id.as_str(), i).is_some() {
            return Err(id.clone());
        }
    }
    Ok(map)
}

fn keyed<T: Clone>(
    entries: &[(String, T)],
    section: &'static str,
    index: &HashMap<&str, usize>,
    kind: &'static str,
) -> Result<Vec<Option<T>>, ValidationError> {
    let mut out = vec![None; index.len()];
    for (key, value) in entries {
        let &i = index
            .get(key.as_str())
            .ok_or_else(|| ValidationError::UnknownKey {
                section,
                key: key.clone(),
                kind,
            })?;
        if out[i].replace(value.clone()).is_some() {
            return Err(ValidationError::DuplicateKey {
                section,
                key: key.clone(),
            });
        }
    }
    Ok(out)
}

impl MbcProblem {
    /// Builds a problem with issues `"1".."m"` and claimants `"1".."n"`;
    /// `alpha` uses 1-based issue numbers.
    pub fn numbered(
        estates: Vec<Q>,
        claims: Vec<Q>,
        alpha: &[&[usize]],
    ) -> Result<Self, ValidationError> {
        let issues: Vec<String> = (1..=estates.len()).map(|i| i.to_string()).collect();
        let claimants: Vec<String> = (1..=claims.len()).map(|j| j.to_string()).collect();
        validate_problem(RawProblem {
            estates: issues.iter().cloned().zip(estates).collect(),
            claims: claimants.iter().cloned().zip(claims).collect(),
            alpha: claimants
                .iter()
                .cloned()
                .zip(
                    alpha
                        .iter()
                        .map(|set| set.iter().map(|i| i.to_string()).collect()),
                )
                .collect(),
            issues,
            claimants,
        })
    }

    /// Same as [`MbcProblem::numbered`] with integer data.
    pub fn numbered_int(
        estates: &[i64],
        claims: &[i64],
        alpha: &[&[usize]],
    ) -> Result<Self, ValidationError> {
        Self::numbered(
            estates.iter().map(|&e| int(e)).collect(),
            claims.iter().map(|&c| int(c)).collect(),
            alpha,
        )
    }

    fn assemble(
        issues: Vec<String>,
        claimants: Vec<String>,
        estates: Vec<Q>,
        claims: Vec<Q>,
        alpha: Vec<Vec<usize>>,
    ) -> Self {
        let mut members = vec![Vec::new(); issues.len()];
        for (j, set) in alpha.iter().enumerate() {
            for &i in set {
                members[i].push(j);
            }
        }
        let binding = members
            .iter()
            .zip(&estates)
            .map(|(who, e)| who.iter().map(|&j| &claims[j]).sum::<Q>() > *e)
            .collect();
        MbcProblem {
            issues,
            claimants,
            estates,
            claims,
            alpha,
            members,
            binding,
        }
    }

    pub fn issues(&self) -> &[String] {
        &self.issues
    }

    pub fn claimants(&self) -> &[String] {
        &self.claimants
    }

    pub fn estates(&self) -> &[Q] {
        &self.estates
    }

    pub fn claims(&self) -> &[Q] {
        &self.claims
    }

    pub fn alpha(&self, claimant: usize) -> &[usize] {
        &self.alpha[claimant]
    }

    pub fn alpha_sets(&self) -> &[Vec<usize>] {
        &self.alpha
    }

    /// Claimants demanding `issue`.
    pub fn members(&self, issue: usize) -> &[usize] {
        &self.members[issue]
    }

    /// Per issue: total claim strictly exceeds the estate.
    pub fn binding(&self) -> &[bool] {
        &self.binding
    }

    pub fn n(&self) -> usize {
        self.claimants.len()
    }

    pub fn m(&self) -> usize {
        self.issues.len()
    }

    pub fn claimant_index(&self, id: &str) -> Option<usize> {
        self.claimants.iter().position(|c| c == id)
    }

    pub fn issue_index(&self, id: &str) -> Option<usize> {
        self.issues.iter().position(|i| i == id)
    }

    /// The same problem with a different estate vector.
    pub fn with_estates(&self, estates: Vec<Q>) -> Result<Self, ValidationError> {
        assert_eq!(estates.len(), self.m(), "estate vector length");
        if let Some(i) = estates.iter().position(Signed::is_negative) {
            return Err(ValidationError::NegativeEstate {
                issue: self.issues[i].clone(),
                value: format_rational(&estates[i]),
            });
        }
        Ok(Self::assemble(
            self.issues.clone(),
            self.claimants.clone(),
            estates,
            self.claims.clone(),
            self.alpha.clone(),
        ))
    }

    /// The same problem with a different claim vector.
    pub fn with_claims(&self, claims: Vec<Q>) -> Result<Self, ValidationError> {
        assert_eq!(claims.len(), self.n(), "claim vector length");
        if let Some(j) = claims.iter().position(Signed::is_negative) {
            return Err(ValidationError::NegativeClaim {
                claimant: self.claimants[j].clone(),
                value: format_rational(&claims[j]),
            });
        }
        Ok(Self::assemble(
            self.issues.clone(),
            self.claimants.clone(),
            self.estates.clone(),
            claims,
            self.alpha.clone(),
        ))
    }

    /// Deletes claimant `j` outright (estates untouched), dropping issues nobody else demands.
    pub fn drop_claimant(&self, j: usize) -> Result<Self, ModelError> {
        if j >= self.n() {
            return Err(ModelError::UnknownClaimant(j));
        }
        if self.n() < 2 {
            return Err(ModelError::TooFewClaimants);
        }
        let keep: Vec<usize> = (0..self.n()).filter(|&k| k != j).collect();
        Ok(self.restrict(&keep, |i| self.estates[i].clone()))
    }

    /// Restricts the problem to `keep` (claimant indices), dropping issues no
    /// kept claimant demands, with the given estates for the surviving issues.
    fn restrict(&self, keep: &[usize], estates: impl Fn(usize) -> Q) -> Self {
        let kept_issues: Vec<usize> = (0..self.m())
            .filter(|&i| self.members[i].iter().any(|j| keep.contains(j)))
            .collect();
        let mut new_issue = vec![usize::MAX; self.m()];
        for (new, &old) in kept_issues.iter().enumerate() {
            new_issue[old] = new;
        }
        Self::assemble(
            kept_issues
                .iter()
                .map(|&i| self.issues[i].clone())
                .collect(),
            keep.iter().map(|&j| self.claimants[j].clone()).collect(),
            kept_issues.iter().map(|&i| estates(i)).collect(),
            keep.iter().map(|&j| self.claims[j].clone()).collect(),
            keep.iter()
                .map(|&j| self.alpha[j].iter().map(|&i| new_issue[i]).collect())
                .collect(),
        )
    }
}

/// One amount per claimant, indexed like the problem's claimant list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Allocation(Vec<Q>);

impl Allocation {
    pub fn new(values: Vec<Q>) -> Self {
        Allocation(values)
    }

    pub fn zeros(n: usize) -> Self {
        Allocation(vec![Q::zero(); n])
    }

    pub fn from_ints(values: &[i64]) -> Self {
        Allocation(values.iter().map(|&v| int(v)).collect())
    }

    pub fn values(&self) -> &[Q] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<Q> {
        self.0
    }

    /// Selects the entries of `claimants`, in that order.
    pub fn restrict(&self, claimants: &[usize]) -> Allocation {
        Allocation(claimants.iter().map(|&j| self.0[j].clone()).collect())
    }
}

impl Index<usize> for Allocation {
    type Output = Q;

    fn index(&self, j: usize) -> &Q {
        &self.0[j]
    }
}

fn check_len(p: &MbcProblem, x: &Allocation) -> Result<(), ModelError> {
    if x.len() != p.n() {
        return Err(ModelError::AllocationLength {
            expected: p.n(),
            found: x.len(),
        });
    }
    Ok(())
}

/// Remaining amount of each issue after `x` is paid out.
pub fn residuals(p: &MbcProblem, x: &Allocation) -> Result<Vec<Q>, ModelError> {
    check_len(p, x)?;
    Ok((0..p.m())
        .map(|i| {
            let paid: Q = p.members(i).iter().map(|&j| &x[j]).sum();
            &p.estates[i] - paid
        })
        .collect())
}

pub fn is_feasible(p: &MbcProblem, x: &Allocation) -> bool {
    let Ok(r) = residuals(p, x) else {
        return false;
    };
    let bounded = x
        .values()
        .iter()
        .zip(p.claims())
        .all(|(xj, cj)| !xj.is_negative() && xj <= cj);
    bounded && r.iter().all(|ri| !ri.is_negative())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParetoWitness {
    pub claimant: usize,
    /// Largest amount `claimant` can gain with everyone else unchanged.
    pub delta: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParetoVerdict {
    pub efficient: bool,
    pub witness: Option<ParetoWitness>,
}

/// Pareto efficiency of a feasible allocation.
///
/// A feasible `a >= x` with `a_j > x_j` forces every issue of `j` to have
/// positive slack at `x`, so scanning single-coordinate raises is exact.
/// The witness is the first claimant (in list order) that can be raised.
pub fn is_pareto_efficient(p: &MbcProblem, x: &Allocation) -> Result<ParetoVerdict, ModelError> {
    if !is_feasible(p, x) {
        check_len(p, x)?;
        return Err(ModelError::Infeasible);
    }
    let r = residuals(p, x)?;
    for j in 0..p.n() {
        let headroom = &p.claims[j] - &x[j];
        if !headroom.is_positive() {
            continue;
        }
        let slack = p
            .alpha(j)
            .iter()
            .map(|&i| &r[i])
            .min()
            .expect("alpha nonempty");
        if slack.is_positive() {
            return Ok(ParetoVerdict {
                efficient: false,
                witness: Some(ParetoWitness {
                    claimant: j,
                    delta: headroom.min(slack.clone()),
                }),
            });
        }
    }
    Ok(ParetoVerdict {
        efficient: true,
        witness: None,
    })
}

/// Problem left to `keep` after the others depart with their part of `x`.
///
/// `keep` may be the whole claimant set, in which case the problem is returned unchanged.
pub fn reduced_problem(
    p: &MbcProblem,
    x: &Allocation,
    keep: &[usize],
) -> Result<MbcProblem, ModelError> {
    check_len(p, x)?;
    if !is_feasible(p, x) {
        return Err(ModelError::Infeasible);
    }
    let keep = normalize_set(p, keep)?;
    if keep.is_empty() {
        return Err(ModelError::EmptyKeep);
    }
    let mut estates = p.estates.clone();
    for j in (0..p.n()).filter(|j| !keep.contains(j)) {
        for &i in p.alpha(j) {
            estates[i] -= &x[j];
        }
    }
    let reduced = p.restrict(&keep, |i| estates[i].clone());
    if let Some(i) = reduced.estates.iter().position(Signed::is_negative) {
        return Err(ModelError::NegativeReducedEstate {
            issue: reduced.issues[i].clone(),
            value: format_rational(&reduced.estates[i]),
        });
    }
    Ok(reduced)
}

fn normalize_set(p: &MbcProblem, set: &[usize]) -> Result<Vec<usize>, ModelError> {
    if let Some(&bad) = set.iter().find(|&&j| j >= p.n()) {
        return Err(ModelError::UnknownClaimant(bad));
    }
    let set: HashSet<usize> = set.iter().copied().collect();
    Ok((0..p.n()).filter(|j| set.contains(j)).collect())
}

/// Problem after `leaver` departs fully compensated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Removal {
    pub problem: MbcProblem,
    /// Surviving issues whose estate `e_i - c_leaver` went negative and was clamped to zero.
    pub clamped: Vec<String>,
}

pub fn removal_problem(p: &MbcProblem, leaver: usize) -> Result<Removal, ModelError> {
    if leaver >= p.n() {
        return Err(ModelError::UnknownClaimant(leaver));
    }
    if p.n() < 2 {
        return Err(ModelError::TooFewClaimants);
    }
    let claim = &p.claims[leaver];
    let mut clamped_idx = Vec::new();
    let estates: Vec<Q> = (0..p.m())
        .map(|i| {
            if !p.alpha(leaver).contains(&i) {
                return p.estates[i].clone();
            }
            let left = &p.estates[i] - claim;
            if left.is_negative() {
                clamped_idx.push(i);
                Q::zero()
            } else {
                left
            }
        })
        .collect();
    let keep: Vec<usize> = (0..p.n()).filter(|&j| j != leaver).collect();
    let problem = p.restrict(&keep, |i| estates[i].clone());
    let clamped = clamped_idx
        .into_iter()
        .map(|i| p.issues[i].clone())
        .filter(|id| problem.issue_index(id).is_some())
        .collect();
    Ok(Removal { problem, clamped })
}

/// `min(c_j, min over alpha(j) of e_i)` for every claimant.
pub fn truncated_claims(p: &MbcProblem) -> Vec<Q> {
    truncate(p.claims(), p.estates(), p.alpha_sets())
}

pub(crate) fn truncate(claims: &[Q], estates: &[Q], alpha: &[Vec<usize>]) -> Vec<Q> {
    claims
        .iter()
        .zip(alpha)
        .map(|(c, set)| {
            set.iter()
                .map(|&i| &estates[i])
                .fold(c, |acc, e| acc.min(e))
                .clone()
        })
        .collect()
}

pub fn are_homologous(p: &MbcProblem, j: usize, k: usize) -> bool {
    p.alpha(j) == p.alpha(k)
}

pub fn are_equal(p: &MbcProblem, j: usize, k: usize) -> bool {
    are_homologous(p, j, k) && p.claims[j] == p.claims[k]
}

//! Seeded random instances for property suites, falsification and benchmarks.

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::problem::MbcProblem;
use crate::rational::Q;

/// Generator parameters. Ranges are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    pub claimants: (usize, usize),
    pub issues: (usize, usize),
    /// Claims are drawn uniformly from this range, in units of `1/denominator`.
    pub claim_range: (u32, u32),
    /// Each binding estate is this fraction (drawn uniformly) of the issue's total claim.
    pub estate_fraction: (f64, f64),
    /// Probability that an issue is drawn binding.
    pub binding_prob: f64,
    /// Probability that a claimant demands a given issue.
    pub alpha_density: f64,
    /// Probability that a claimant copies the issue set and claim of an earlier one.
    pub duplicate_prob: f64,
    /// 1 keeps every amount integral; larger values draw rationals on that grid.
    pub denominator: u32,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            claimants: (2, 6),
            issues: (1, 4),
            claim_range: (1, 9),
            estate_fraction: (0.3, 0.9),
            binding_prob: 1.0,
            alpha_density: 0.5,
            duplicate_prob: 0.25,
            denominator: 1,
        }
    }
}

impl GenParams {
    pub fn single_issue() -> Self {
        GenParams {
            issues: (1, 1),
            ..GenParams::default()
        }
    }

    /// Rejects empty ranges and probabilities outside `[0, 1]`.
    pub fn validate(&self) -> Result<(), String> {
        let probability = |v: f64| (0.0..=1.0).contains(&v);
        if !(1 <= self.claimants.0 && self.claimants.0 <= self.claimants.1) {
            return Err("claimant range must be nonempty and start at 1 or more".into());
        }
        if !(1 <= self.issues.0 && self.issues.0 <= self.issues.1) {
            return Err("issue range must be nonempty and start at 1 or more".into());
        }
        if self.claim_range.0 > self.claim_range.1 {
            return Err("claim range must be nonempty".into());
        }
        if self.denominator == 0 {
            return Err("denominator must be positive".into());
        }
        let (lo, hi) = self.estate_fraction;
        if !(probability(lo) && probability(hi) && lo <= hi) {
            return Err("estate fraction must be a subrange of [0, 1]".into());
        }
        if ![self.binding_prob, self.alpha_density, self.duplicate_prob]
            .into_iter()
            .all(probability)
        {
            return Err("probabilities must lie in [0, 1]".into());
        }
        Ok(())
    }
}

/// Draws one instance; identical `(params, seed)` give identical instances.
///
/// Issue sets are drawn cell by cell with `alpha_density`; a claimant left
/// with no issue is given one at random, and an issue nobody demands is given
/// to a random claimant. Binding issues get `floor(f * total)` capped at
/// `total - 1` grid units; slack issues get at least their total claim.
pub fn random_mbc(params: &GenParams, seed: u64) -> MbcProblem {
    if let Err(e) = params.validate() {
        panic!("invalid generator parameters: {e}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(params.claimants.0..=params.claimants.1);
    let m = rng.gen_range(params.issues.0..=params.issues.1);

    let mut alpha: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut claims: Vec<u64> = Vec::with_capacity(n);
    let d = u64::from(params.denominator);
    for j in 0..n {
        if j > 0 && rng.gen_bool(params.duplicate_prob) {
            let k = rng.gen_range(0..j);
            alpha.push(alpha[k].clone());
            claims.push(claims[k]);
            continue;
        }
        let mut set: Vec<usize> = (0..m)
            .filter(|_| rng.gen_bool(params.alpha_density))
            .collect();
        if set.is_empty() {
            set.push(rng.gen_range(0..m));
        }
        alpha.push(set);
        let lo = u64::from(params.claim_range.0) * d;
        let hi = u64::from(params.claim_range.1) * d;
        claims.push(rng.gen_range(lo..=hi));
    }
    for i in 0..m {
        if !alpha.iter().any(|set| set.contains(&i)) {
            let j = rng.gen_range(0..n);
            alpha[j].push(i);
            alpha[j].sort_unstable();
        }
    }

    let mut estates: Vec<u64> = Vec::with_capacity(m);
    for i in 0..m {
        let total: u64 = (0..n)
            .filter(|&j| alpha[j].contains(&i))
            .map(|j| claims[j])
            .sum();
        let binding = total > 0 && rng.gen_bool(params.binding_prob);
        let e = if binding {
            let f = rng.gen_range(params.estate_fraction.0..=params.estate_fraction.1);
            ((f * total as f64).floor() as u64).min(total - 1)
        } else {
            let spare = u64::from(params.claim_range.1) * d;
            total + rng.gen_range(0..=spare)
        };
        estates.push(e);
    }

    let scale = |v: u64| Q::new(BigInt::from(v), BigInt::from(d));
    let alpha_1: Vec<Vec<usize>> = alpha
        .iter()
        .map(|set| set.iter().map(|i| i + 1).collect())
        .collect();
    let alpha_refs: Vec<&[usize]> = alpha_1.iter().map(Vec::as_slice).collect();
    MbcProblem::numbered(
        estates.into_iter().map(scale).collect(),
        claims.into_iter().map(scale).collect(),
        &alpha_refs,
    )
    .expect("generated instances are valid")
}

/// Picks a uniformly random nonempty proper subset of `0..n` (or all of it when `n == 1`).
pub fn random_keep_set(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    if n == 1 {
        return vec![0];
    }
    let size = rng.gen_range(1..n);
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    let mut keep = all[..size].to_vec();
    keep.sort_unstable();
    keep
}

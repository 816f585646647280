//! The constrained priority sweep shared by CSP and the inner step of CRA*.
//!
//! A claimant served at some point receives `min(claim, max(0, min residual of its issues))`
//! and every one of its issues is charged the amount actually received.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::rational::Q;

pub(crate) fn grant(claim: &Q, issues: &[usize], residual: &[Q]) -> Q {
    let room = issues
        .iter()
        .map(|&i| &residual[i])
        .min()
        .expect("claimant demands at least one issue");
    if !room.is_positive() {
        return Q::zero();
    }
    claim.min(room).clone()
}

fn charge(issues: &[usize], residual: &mut [Q], amount: &Q, sign: bool) {
    for &i in issues {
        if sign {
            residual[i] -= amount;
        } else {
            residual[i] += amount;
        }
    }
}

/// Serves `order` in sequence, writing each award into `out` and charging `residual`.
pub(crate) fn sweep(
    order: impl IntoIterator<Item = usize>,
    claims: &[Q],
    alpha: &[Vec<usize>],
    residual: &mut [Q],
    out: &mut [Q],
) {
    for j in order {
        let x = grant(&claims[j], &alpha[j], residual);
        if !x.is_zero() {
            charge(&alpha[j], residual, &x, true);
        }
        out[j] = x;
    }
}

pub(crate) fn factorial_big(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128)
        .try_fold(1u128, |acc, k| acc.checked_mul(k))
        .unwrap_or(u128::MAX)
}

/// Sum over all orders of `participants` of each participant's sweep award.
///
/// Walks the permutation tree depth first in lexicographic order; the award
/// made at depth `d` is shared by the `(k - d - 1)!` completions below it, so
/// each tree node is visited once instead of once per leaf. The result is
/// indexed like `claims`; non-participants stay zero.
pub(crate) fn all_orders_totals(
    participants: &[usize],
    claims: &[Q],
    alpha: &[Vec<usize>],
    residual: &[Q],
) -> Vec<Q> {
    let k = participants.len();
    let weights: Vec<Q> = (0..=k).map(|d| Q::from_integer(factorial_big(d))).collect();
    let mut totals = vec![Q::zero(); claims.len()];
    let mut residual = residual.to_vec();
    let mut used = vec![false; k];
    descend(
        participants,
        claims,
        alpha,
        &weights,
        &mut residual,
        &mut used,
        0,
        &mut totals,
    );
    totals
}

#[allow(clippy::too_many_arguments)]
fn descend(
    participants: &[usize],
    claims: &[Q],
    alpha: &[Vec<usize>],
    weights: &[Q],
    residual: &mut [Q],
    used: &mut [bool],
    depth: usize,
    totals: &mut [Q],
) {
    let k = participants.len();
    if depth == k {
        return;
    }
    let completions = &weights[k - depth - 1];
    for slot in 0..k {
        if used[slot] {
            continue;
        }
        let j = participants[slot];
        let x = grant(&claims[j], &alpha[j], residual);
        used[slot] = true;
        if x.is_zero() {
            descend(
                participants,
                claims,
                alpha,
                weights,
                residual,
                used,
                depth + 1,
                totals,
            );
        } else {
            totals[j] += &x * completions;
            charge(&alpha[j], residual, &x, true);
            descend(
                participants,
                claims,
                alpha,
                weights,
                residual,
                used,
                depth + 1,
                totals,
            );
            charge(&alpha[j], residual, &x, false);
        }
        used[slot] = false;
    }
}

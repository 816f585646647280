//! The worked instances shipped with the crate, also available as JSON files
//! under the workspace `fixtures/` directory.

use crate::problem::MbcProblem;

/// Three issues, eight claimants; E = (9, 12, 9).
pub fn eight_claimants() -> MbcProblem {
    eight_claimants_with(&[9, 12, 9], &[3, 5, 4, 3, 5, 4, 3, 5])
}

/// Same structure as [`eight_claimants`] with E = (9, 12, 7) and c7 = 4, where
/// raising the second estate to 13 lowers claimant 8's priority award.
pub fn rmon_counterexample() -> MbcProblem {
    eight_claimants_with(&[9, 12, 7], &[3, 5, 4, 3, 5, 4, 4, 5])
}

fn eight_claimants_with(estates: &[i64], claims: &[i64]) -> MbcProblem {
    MbcProblem::numbered_int(
        estates,
        claims,
        &[&[1], &[1], &[1, 2], &[1, 2], &[2], &[2, 3], &[2, 3], &[3]],
    )
    .expect("fixture is valid")
}

/// E = (4, 8), c = (2, 5, 7); the average of priority awards leaves issue 1 slack.
pub fn no_peff() -> MbcProblem {
    MbcProblem::numbered_int(&[4, 8], &[2, 5, 7], &[&[1], &[1, 2], &[2]]).expect("fixture is valid")
}

/// E = (4, 5, 7), c = (3, 4, 5), alpha = {1,2}, {2,3}, {3}.
pub fn three_by_three() -> MbcProblem {
    MbcProblem::numbered_int(&[4, 5, 7], &[3, 4, 5], &[&[1, 2], &[2, 3], &[3]])
        .expect("fixture is valid")
}

/// E = (9, 10, 8), c = (3, 4, 3, 6, 5); the two-level walkthrough instance.
pub fn two_level() -> MbcProblem {
    MbcProblem::numbered_int(
        &[9, 10, 8],
        &[3, 4, 3, 6, 5],
        &[&[1], &[1, 2], &[1, 2], &[2, 3], &[3]],
    )
    .expect("fixture is valid")
}

//! Claims rules for multi-issue bankruptcy problems with crossed claims.
//!
//! Every claimant holds one claim that is charged against each issue it
//! demands. The crate computes the constrained sequential priority rule and
//! two averages of it, exactly over the rationals or by seeded sampling.
//! Axioms are checked per instance, and [`axioms::falsify`] searches random
//! instances for violations.

pub mod axioms;
pub mod crastar;
pub mod fixtures;
pub mod generate;
pub mod io;
pub mod problem;
pub mod rational;
pub mod rules;
mod sweep;

pub use axioms::{Axiom, AxiomReport, OrderPolicy, RuleUnderTest, Verdict, Witness};
pub use crastar::{crastar_exact, crastar_sample, IssueOrder};
pub use generate::{random_mbc, GenParams};
pub use io::{parse_problem, write_problem, ProblemError};
pub use problem::{Allocation, MbcProblem};
pub use rational::Q;
pub use rules::{cra_exact, cra_sample, csp, Budget, ClaimantOrder, Permutation, RuleValue};
pub use sweep::factorial;

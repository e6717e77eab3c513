//! Infinite-horizon problems `int_a^inf L(t, x^sigma, x^Delta) Delta t -> max`:
//! Euler-Lagrange residuals, transversality, weak maximality, the truncated
//! direct solver and the candidate verifier.

mod lagrangian;
mod lemma;
mod problem;
mod residual;
mod solver;
mod verify;
mod weak;

pub use lagrangian::{Lagrangian, LagrangianFn, PartialFn, FD_STEP};
pub use lemma::{fundamental_lemma_probe, Eta, LemmaConfig, Witness};
pub use problem::{Path, Problem, Trajectory};
pub use residual::{
    el_residual, first_variation, first_variation_by_parts, lagrangian_along, partials_along,
    transversality_series, transversality_term,
};
pub use solver::{
    discrete_gradient, discrete_objective, solve_truncated, Solution, SolverOptions, Terminal,
};
pub use verify::{
    verify_candidate, verify_candidate_with, Perturbation, ProbeResult, VerificationReport,
    Verdict, VerifyConfig,
};
pub use weak::{
    gateaux_report, liminf_over_tails, payoff_difference, variation_quotient, weak_max_compare,
    weakly_consistent, GateauxReport, GateauxRow,
};

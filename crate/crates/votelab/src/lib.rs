//! Numerical laboratory for two costly-voting games played by a Poisson
//! population facing a fixed bloc of `f` adversarial voters.
//!
//! In the *delegation* game each well-behaving agent either votes (cost `c`)
//! or delegates their ballot to a uniformly random voter; in the
//! *conventional* game each agent either votes or abstains. Both games have
//! mixed equilibria where the expected gain from voting equals `c`.
//!
//! The crate computes the indifference curves exactly (with certified series
//! truncation), finds all equilibria, evaluates winning probability and
//! per-capita welfare, provides closed-form large-population thresholds via
//! the Lambert W function, and cross-checks everything with a deterministic
//! Monte Carlo simulator.

pub mod asymptotics;
pub mod conventional;
pub mod delegation;
pub mod error;
pub mod montecarlo;
pub mod prob;
pub mod solver;

pub use asymptotics::{
    d_star_case1, d_star_case2, f_star, lambert_w0, lambert_wm1, n_thresholds,
    poisson_upper_tail_bound, regime_classify, Regime, SlackParams, ThresholdReport,
};
pub use conventional::{
    conventional_point, cost_solvability_interval, gain_max_value, interior_max, pivotal_gain,
    welfare_conventional, win_prob_conventional, ConventionalPoint,
};
pub use delegation::{
    g_f_term, welfare_delegation, win_prob_delegation, xi, DelegationPoint, GameParams,
};
pub use error::{Error, Result};
pub use montecarlo::{
    estimate_voting_gain, estimate_voting_gain_independent, estimate_welfare, estimate_win_prob,
    estimate_win_prob_conventional, simulate_delegation_trial, Estimate, SimConfig, TrialOutcome,
};
pub use prob::{
    binomial_pmf, poisson_pmf, poisson_trunc_point, Prob, TruncationPolicy,
};
pub use solver::{
    find_roots, sample_curve, solve_conventional, solve_delegation, sweep_f, CornerNote,
    CurveSample, EquilibriumReport, EquilibriumRoot, Game, GameOutcome, SolverConfig, SweepRow,
};

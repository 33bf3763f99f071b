//! Simulation oracle: samples both games directly from the generative model
//! (Poisson population split, uniform-at-random delegation, coin-toss ties)
//! and estimates the same quantities the analytic modules compute.
//!
//! Each trial draws from its own counter-based substream of a seeded
//! ChaCha8 stream, so estimates are bit-reproducible for a given
//! `(seed, trials)` no matter how many threads run the trials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::delegation::GameParams;
use crate::error::{Error, Result};
use crate::solver::Game;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Result<SimConfig> {
        if trials == 0 {
            return Err(Error::InvalidParams("trials must be >= 1".into()));
        }
        Ok(SimConfig { trials, seed })
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialOutcome {
    Win,
    Lose,
    TieWin,
    TieLose,
}

impl TrialOutcome {
    pub fn won(self) -> bool {
        matches!(self, TrialOutcome::Win | TrialOutcome::TieWin)
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn sample_poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive finite rate").sample(rng) as u64
}

fn sample_binomial(rng: &mut ChaCha8Rng, m: u64, p: f64) -> u64 {
    if m == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return m;
    }
    Binomial::new(m, p).expect("p in (0, 1)").sample(rng)
}

/// Binomial draw by inversion of a shared uniform; monotone in `u`, which is
/// what makes common-random-number coupling across scenarios effective.
fn binomial_inv(m: u64, p: f64, u: f64) -> u64 {
    if m == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return m;
    }
    let ratio = p / (1.0 - p);
    let mut pmf = (1.0 - p).powi(m as i32);
    let mut cum = pmf;
    let mut k = 0u64;
    while k < m && u > cum {
        pmf *= ((m - k) as f64) / ((k + 1) as f64) * ratio;
        k += 1;
        cum += pmf;
    }
    k
}

fn outcome(good: u64, bad: u64, coin: f64) -> TrialOutcome {
    match good.cmp(&bad) {
        std::cmp::Ordering::Greater => TrialOutcome::Win,
        std::cmp::Ordering::Less => TrialOutcome::Lose,
        std::cmp::Ordering::Equal => {
            if coin < 0.5 {
                TrialOutcome::TieWin
            } else {
                TrialOutcome::TieLose
            }
        }
    }
}

const CHUNK: u64 = 8192;

/// Run `sim.trials` independent trials and reduce them into an estimate.
/// Chunks are evaluated in parallel but combined in index order, so the
/// result does not depend on the degree of parallelism.
fn monte_carlo<F>(sim: &SimConfig, per_trial: F) -> Estimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let chunks = sim.trials.div_ceil(CHUNK);
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * CHUNK;
            let hi = ((ci + 1) * CHUNK).min(sim.trials);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for t in lo..hi {
                let mut rng = trial_rng(sim.seed, t);
                let v = per_trial(&mut rng);
                sum += v;
                sumsq += v * v;
            }
            (sum, sumsq)
        })
        .collect();
    let (sum, sumsq) = partials
        .iter()
        .fold((0.0, 0.0), |(a, b), &(s, s2)| (a + s, b + s2));
    let t = sim.trials as f64;
    let mean = sum / t;
    let var = if sim.trials > 1 {
        ((sumsq - t * mean * mean) / (t - 1.0)).max(0.0)
    } else {
        0.0
    };
    Estimate {
        mean,
        stderr: (var / t).sqrt(),
        trials: sim.trials,
    }
}

/// One draw of the delegation pipeline: population split, pooled delegation,
/// majority comparison with a fair coin on ties.
pub fn simulate_delegation_trial(
    rng: &mut ChaCha8Rng,
    params: &GameParams,
    gamma: f64,
) -> TrialOutcome {
    let v = sample_poisson(rng, params.n * (1.0 - gamma));
    let d = sample_poisson(rng, params.n * gamma);
    let h = sample_binomial(rng, d, v as f64 / (v + params.f) as f64);
    let coin: f64 = rng.random();
    outcome(v + h, params.f + d - h, coin)
}

/// Simulated winning probability of the delegation game.
pub fn estimate_win_prob(params: &GameParams, gamma: f64, sim: &SimConfig) -> Estimate {
    monte_carlo(sim, |rng| {
        if simulate_delegation_trial(rng, params, gamma).won() {
            1.0
        } else {
            0.0
        }
    })
}

fn voting_gain_trial(rng: &mut ChaCha8Rng, params: &GameParams, gamma: f64, crn: bool) -> f64 {
    let v = sample_poisson(rng, params.n * (1.0 - gamma));
    let d = sample_poisson(rng, params.n * gamma);
    let f = params.f;

    let u_vote: f64 = rng.random();
    let u_delegate: f64 = if crn { u_vote } else { rng.random() };
    let coin_vote: f64 = rng.random();
    let coin_delegate: f64 = if crn { coin_vote } else { rng.random() };

    // The extra agent votes: the group of voters grows to V+1.
    let h1 = binomial_inv(d, (v + 1) as f64 / (v + 1 + f) as f64, u_vote);
    let gain_vote = match outcome(v + 1 + h1, f + d - h1, coin_vote) {
        o if o.won() => 1.0,
        _ => 0.0,
    };
    // The extra agent delegates: the delegator pool grows to D+1.
    let h2 = binomial_inv(d + 1, v as f64 / (v + f) as f64, u_delegate);
    let gain_delegate = match outcome(v + h2, f + d + 1 - h2, coin_delegate) {
        o if o.won() => 1.0,
        _ => 0.0,
    };
    gain_vote - gain_delegate
}

/// Simulated expected gain from voting over delegating (the indifference
/// curve), using common random numbers across the two scenarios.
pub fn estimate_voting_gain(params: &GameParams, gamma: f64, sim: &SimConfig) -> Estimate {
    monte_carlo(sim, |rng| voting_gain_trial(rng, params, gamma, true))
}

/// Same estimator with independent draws per scenario; kept for variance
/// comparison against the coupled version.
pub fn estimate_voting_gain_independent(
    params: &GameParams,
    gamma: f64,
    sim: &SimConfig,
) -> Estimate {
    monte_carlo(sim, |rng| voting_gain_trial(rng, params, gamma, false))
}

/// Simulated winning probability of the conventional game.
pub fn estimate_win_prob_conventional(params: &GameParams, alpha: f64, sim: &SimConfig) -> Estimate {
    monte_carlo(sim, |rng| {
        let k = sample_poisson(rng, params.n * alpha);
        let coin: f64 = rng.random();
        if outcome(k, params.f, coin).won() {
            1.0
        } else {
            0.0
        }
    })
}

/// Simulated per-capita welfare of either game at the given strategy
/// probability (`gamma` for delegation, `alpha` for conventional).
pub fn estimate_welfare(
    params: &GameParams,
    strategy: f64,
    game: Game,
    sim: &SimConfig,
) -> Estimate {
    match game {
        Game::Delegation => monte_carlo(sim, |rng| {
            let v = sample_poisson(rng, params.n * (1.0 - strategy));
            let d = sample_poisson(rng, params.n * strategy);
            let pop = d + v;
            if pop == 0 {
                return 0.0;
            }
            let h = sample_binomial(rng, d, v as f64 / (v + params.f) as f64);
            let coin: f64 = rng.random();
            let won = outcome(v + h, params.f + d - h, coin).won();
            let benefit = if won { pop as f64 } else { 0.0 };
            (benefit - (v as f64) * params.c) / pop as f64
        }),
        Game::Conventional => monte_carlo(sim, |rng| {
            let n_total = sample_poisson(rng, params.n);
            if n_total == 0 {
                return 0.0;
            }
            let k = sample_binomial(rng, n_total, strategy);
            let coin: f64 = rng.random();
            let won = outcome(k, params.f, coin).won();
            let benefit = if won { n_total as f64 } else { 0.0 };
            (benefit - (k as f64) * params.c) / n_total as f64
        }),
    }
}

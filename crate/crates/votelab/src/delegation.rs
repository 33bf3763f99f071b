//! Analytic evaluation of the delegation game.
//!
//! The central object is the expected utility gain from voting instead of
//! delegating at delegation rate `gamma`. Setting that gain equal to the
//! voting cost `c` is the indifference condition whose roots are the mixed
//! equilibria. The inner bracket of the gain is evaluated through binomial
//! tail probabilities rather than raw sums over the delegated votes `h`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{
    binomial_upper_prob, pairwise_sum, poisson_pmf, poisson_trunc_point, Prob, TruncationPolicy,
};

/// Game parameters: expected well-behaving population `n` (Poisson mean),
/// misbehaving voter count `f`, and voting cost `c` in `(0, 1]`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GameParams {
    pub n: f64,
    pub f: u64,
    pub c: f64,
}

impl GameParams {
    pub fn new(n: f64, f: u64, c: f64) -> Result<GameParams> {
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParams(format!("n must be positive and finite, got {n}")));
        }
        if f == 0 {
            return Err(Error::InvalidParams(
                "f must be >= 1: the model assumes at least one misbehaving voter".into(),
            ));
        }
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidParams(format!("c must be in (0, 1], got {c}")));
        }
        Ok(GameParams { n, f, c })
    }
}

/// One evaluated point of the indifference curve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DelegationPoint {
    pub gamma: f64,
    pub xi: f64,
    pub trunc_error_bound: f64,
}

/// The inner bracket of the indifference condition at fixed `(D, V)`:
/// the gain difference between an extra voter and an extra delegator,
/// written as `P[X1 > a1] + 1/2 P[X1 = a1] - P[X2 > a2] - 1/2 P[X2 = a2]`
/// with `X1 ~ Bin(D, (V+1)/(V+1+f))`, `X2 ~ Bin(D+1, V/(V+f))` and
/// thresholds `a1 = (f+D-V-1)/2`, `a2 = (f+D+1-V)/2`.
pub fn g_f_term(f: u64, d: u64, v: u64) -> f64 {
    // Both scenarios win with certainty (bracket cancels) ...
    if v >= f + d + 2 {
        return 0.0;
    }
    // ... or both lose with certainty.
    if v + d + 2 <= f {
        return 0.0;
    }
    let fd = f as f64;
    let dd = d as f64;
    let vd = v as f64;

    let a1 = (fd + dd - vd - 1.0) / 2.0;
    let p1 = (vd + 1.0) / (vd + 1.0 + fd);
    let q1 = fd / (vd + 1.0 + fd);
    let vote_side = binomial_upper_prob(d, p1, q1, a1);

    let a2 = (fd + dd + 1.0 - vd) / 2.0;
    let p2 = vd / (vd + fd);
    let q2 = fd / (vd + fd);
    let delegate_side = binomial_upper_prob(d + 1, p2, q2, a2);

    vote_side - delegate_side
}

fn certified_trunc(lambda: f64, eps: f64, trunc: &TruncationPolicy) -> Result<usize> {
    let k = poisson_trunc_point(lambda, eps)?;
    if k > trunc.max_terms {
        return Err(Error::TruncationCapExceeded {
            lambda,
            eps,
            needed: k,
            max_terms: trunc.max_terms,
        });
    }
    Ok(k)
}

fn poisson_weights(lambda: f64, up_to: usize) -> Result<Vec<f64>> {
    (0..=up_to as u64)
        .map(|k| poisson_pmf(lambda, k).map(Prob::value))
        .collect()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain(format!("gamma must be in [0, 1], got {gamma}")));
    }
    Ok(())
}

/// Expected utility gain from voting over delegating at delegation rate
/// `gamma`, with both Poisson sums truncated at certified points. The total
/// neglected contribution is below `trunc.tail_eps` since the inner bracket
/// is bounded by 1 in magnitude.
pub fn xi(params: &GameParams, gamma: f64, trunc: &TruncationPolicy) -> Result<DelegationPoint> {
    check_gamma(gamma)?;
    let lambda_d = params.n * gamma;
    let lambda_v = params.n * (1.0 - gamma);
    let half = trunc.tail_eps / 2.0;
    let kd = certified_trunc(lambda_d, half, trunc)?;
    let kv = certified_trunc(lambda_v, half, trunc)?;
    let pois_d = poisson_weights(lambda_d, kd)?;
    let pois_v = poisson_weights(lambda_v, kv)?;

    let f = params.f;
    let mut stripes = Vec::with_capacity(kd + 1);
    for d in 0..=kd as u64 {
        // The bracket vanishes outside f-1-D <= V <= f+D+1.
        let v_lo = (f + d + 1).saturating_sub(2 * d + 2);
        let v_hi = (f + d + 1).min(kv as u64);
        let mut stripe = 0.0;
        for v in v_lo..=v_hi {
            stripe += pois_v[v as usize] * g_f_term(f, d, v);
        }
        stripes.push(pois_d[d as usize] * stripe);
    }
    Ok(DelegationPoint {
        gamma,
        xi: pairwise_sum(&stripes),
        trunc_error_bound: trunc.tail_eps,
    })
}

/// Probability of winning at fixed `(D, V)`: the delegated votes `h` follow
/// `Bin(D, V/(V+f))` and the outcome compares `V+h` against `f+D-h`, so the
/// inner sum collapses to a binomial tail at threshold `(f+D-V)/2`.
fn win_prob_at(f: u64, d: u64, v: u64) -> f64 {
    let fd = f as f64;
    let dd = d as f64;
    let vd = v as f64;
    let a = (fd + dd - vd) / 2.0;
    let p = vd / (vd + fd);
    let q = fd / (vd + fd);
    binomial_upper_prob(d, p, q, a)
}

/// Winning probability of the well-behaving agents at delegation rate `gamma`.
pub fn win_prob_delegation(
    params: &GameParams,
    gamma: f64,
    trunc: &TruncationPolicy,
) -> Result<Prob> {
    check_gamma(gamma)?;
    let lambda_d = params.n * gamma;
    let lambda_v = params.n * (1.0 - gamma);
    let half = trunc.tail_eps / 2.0;
    let kd = certified_trunc(lambda_d, half, trunc)?;
    let kv = certified_trunc(lambda_v, half, trunc)?;
    let pois_d = poisson_weights(lambda_d, kd)?;
    let pois_v = poisson_weights(lambda_v, kv)?;

    let mut stripes = Vec::with_capacity(kd + 1);
    for d in 0..=kd as u64 {
        let mut stripe = 0.0;
        for v in 0..=kv as u64 {
            if v + d < params.f {
                // Even all-delegations-to-well-behaving cannot reach a tie.
                continue;
            }
            stripe += pois_v[v as usize] * win_prob_at(params.f, d, v);
        }
        stripes.push(pois_d[d as usize] * stripe);
    }
    Ok(Prob::clamped(pairwise_sum(&stripes)))
}

/// Per-capita welfare at delegation rate `gamma`: winning benefit minus the
/// per-capita cost spent by the `V` voters, `r(D+V)((D+V)g - Vc)` summed over
/// the population split. Satisfies `p - c <= W <= p`.
pub fn welfare_delegation(
    params: &GameParams,
    gamma: f64,
    trunc: &TruncationPolicy,
) -> Result<f64> {
    check_gamma(gamma)?;
    let lambda_d = params.n * gamma;
    let lambda_v = params.n * (1.0 - gamma);
    let half = trunc.tail_eps / 2.0;
    let kd = certified_trunc(lambda_d, half, trunc)?;
    let kv = certified_trunc(lambda_v, half, trunc)?;
    let pois_d = poisson_weights(lambda_d, kd)?;
    let pois_v = poisson_weights(lambda_v, kv)?;

    let mut stripes = Vec::with_capacity(kd + 1);
    for d in 0..=kd as u64 {
        let mut stripe = 0.0;
        for v in 0..=kv as u64 {
            if d + v == 0 {
                continue; // r(0) = 0
            }
            let cost = (v as f64) * params.c / ((d + v) as f64);
            let win = if v + d < params.f {
                0.0
            } else {
                win_prob_at(params.f, d, v)
            };
            stripe += pois_v[v as usize] * (win - cost);
        }
        stripes.push(pois_d[d as usize] * stripe);
    }
    Ok(pairwise_sum(&stripes))
}

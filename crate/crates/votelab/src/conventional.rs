//! Conventional voting with abstention.
//!
//! The pivotal gain from voting has the closed form
//! `1/2 PoisPmf(n*alpha, f) + 1/2 PoisPmf(n*alpha, f-1)`: an extra vote only
//! matters when the well-behaving side holds exactly `f` votes (breaks the
//! tie) or exactly `f-1` (creates one), each worth 1/2. For `f >= 2` the
//! gain is zero at `alpha = 0`, rises to a unique interior maximum at
//! `alpha* = sqrt(f(f-1))/n` and falls afterwards; for `f = 1` it decreases
//! monotonically from 1/2.

use serde::Serialize;

use crate::delegation::GameParams;
use crate::error::{Error, Result};
use crate::prob::{
    binomial_pmf, gain, ln_factorial, pairwise_sum, poisson_pmf, poisson_trunc_point, Prob,
    TruncationPolicy,
};

/// One evaluated point of the conventional indifference curve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConventionalPoint {
    pub alpha: f64,
    pub gain_value: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must be in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// Expected utility gain from voting over abstaining at turnout `alpha`.
/// Exact closed form, no truncation.
pub fn pivotal_gain(params: &GameParams, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let m = params.n * alpha;
    let tie = poisson_pmf(m, params.f)?.value();
    let near_tie = poisson_pmf(m, params.f - 1)?.value();
    Ok(0.5 * (tie + near_tie))
}

/// Closed-form maximum of the pivotal gain for `f >= 2`:
/// `1/2 e^{-s} (s^f/f! + s^{f-1}/(f-1)!)` at `s = sqrt(f(f-1))`.
pub fn gain_max_value(f: u64) -> f64 {
    let s = ((f * (f - 1)) as f64).sqrt();
    let ln_a = (f as f64) * s.ln() - ln_factorial(f);
    let ln_b = ((f - 1) as f64) * s.ln() - ln_factorial(f - 1);
    0.5 * (-s).exp() * (ln_a.exp() + ln_b.exp())
}

/// The unique interior stationary point of the pivotal gain and its value.
///
/// For `f = 1` the gain is monotone decreasing and has no interior maximum;
/// if `alpha* = sqrt(f(f-1))/n > 1` the maximum lies outside `[0, 1]` and a
/// boundary report is returned (`alpha_star` clamped to 1 with the gain
/// evaluated there).
pub fn interior_max(params: &GameParams) -> Result<(f64, f64)> {
    if params.f < 2 {
        return Err(Error::Structure(
            "pivotal gain is monotone decreasing for f = 1; no interior maximum".into(),
        ));
    }
    let alpha_star = ((params.f * (params.f - 1)) as f64).sqrt() / params.n;
    if alpha_star > 1.0 {
        return Ok((1.0, pivotal_gain(params, 1.0)?));
    }
    Ok((alpha_star, gain_max_value(params.f)))
}

/// Cost interval on which the indifference equation is solvable:
/// `(0, max gain]` for `f >= 2` and `[(n+1)/(2 e^n), 1/2]` for `f = 1`.
pub fn cost_solvability_interval(n: f64, f: u64) -> Result<(f64, f64)> {
    if !(n > 0.0) || f == 0 {
        return Err(Error::InvalidParams(format!(
            "need n > 0 and f >= 1, got n={n}, f={f}"
        )));
    }
    if f == 1 {
        // Gain at alpha=1 is 1/2 (pois(n,1) + pois(n,0)) = (n+1)/(2 e^n).
        let lo = (n + 1.0) / (2.0 * n.exp());
        Ok((lo, 0.5))
    } else {
        let s = ((f * (f - 1)) as f64).sqrt();
        let hi = if s <= n {
            gain_max_value(f)
        } else {
            // Interior maximum beyond alpha = 1; the reachable maximum is at
            // the boundary.
            let params = GameParams { n, f, c: 1.0 };
            pivotal_gain(&params, 1.0)?
        };
        Ok((0.0, hi))
    }
}

/// Winning probability `q` at turnout `alpha`: the voting well-behaving
/// population is `Pois(n*alpha)` and wins against the fixed `f` votes.
pub fn win_prob_conventional(
    params: &GameParams,
    alpha: f64,
    trunc: &TruncationPolicy,
) -> Result<Prob> {
    check_alpha(alpha)?;
    let lambda = params.n * alpha;
    let k_tail = poisson_trunc_point(lambda, trunc.tail_eps)?;
    // Never truncate below f + 1: the decisive region around k = f must be
    // fully summed.
    let k_max = k_tail.max(params.f as usize + 1);
    if k_max > trunc.max_terms {
        return Err(Error::TruncationCapExceeded {
            lambda,
            eps: trunc.tail_eps,
            needed: k_max,
            max_terms: trunc.max_terms,
        });
    }
    let terms: Vec<f64> = (0..=k_max as u64)
        .map(|k| Ok(poisson_pmf(lambda, k)?.value() * gain(k, params.f)))
        .collect::<Result<_>>()?;
    Ok(Prob::clamped(pairwise_sum(&terms)))
}

/// Per-capita welfare at turnout `alpha`: sample the total population
/// `N ~ Pois(n)`, then `k ~ Bin(N, alpha)` voters, and average
/// `r(N)(N g(k, f) - k c)`. The inner binomial sum runs exactly to `N`.
pub fn welfare_conventional(
    params: &GameParams,
    alpha: f64,
    trunc: &TruncationPolicy,
) -> Result<f64> {
    check_alpha(alpha)?;
    let k_n = poisson_trunc_point(params.n, trunc.tail_eps)?;
    if k_n > trunc.max_terms {
        return Err(Error::TruncationCapExceeded {
            lambda: params.n,
            eps: trunc.tail_eps,
            needed: k_n,
            max_terms: trunc.max_terms,
        });
    }
    let pr_alpha = Prob::new(alpha)?;
    let mut outer = Vec::with_capacity(k_n + 1);
    for n_total in 1..=k_n as u64 {
        let mut inner = 0.0;
        for k in 0..=n_total {
            let w = binomial_pmf(n_total, pr_alpha, k)?.value();
            inner += w * ((n_total as f64) * gain(k, params.f) - (k as f64) * params.c);
        }
        outer.push(poisson_pmf(params.n, n_total)?.value() * inner / (n_total as f64));
    }
    Ok(pairwise_sum(&outer))
}

/// Curve point helper used by the solver and the CLI curve command.
pub fn conventional_point(params: &GameParams, alpha: f64) -> Result<ConventionalPoint> {
    Ok(ConventionalPoint {
        alpha,
        gain_value: pivotal_gain(params, alpha)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: f64, f: u64) -> GameParams {
        GameParams::new(n, f, 0.14).unwrap()
    }

    #[test]
    fn pivotal_gain_at_zero_turnout() {
        assert_eq!(pivotal_gain(&params(30.0, 1), 0.0).unwrap(), 0.5);
        assert_eq!(pivotal_gain(&params(30.0, 2), 0.0).unwrap(), 0.0);
        assert_eq!(pivotal_gain(&params(30.0, 7), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn interior_max_matches_direct_evaluation() {
        let p = params(30.0, 2);
        let (alpha_star, value) = interior_max(&p).unwrap();
        assert!((alpha_star - 2.0_f64.sqrt() / 30.0).abs() < 1e-15);
        let direct = pivotal_gain(&p, alpha_star).unwrap();
        assert!((value - direct).abs() < 1e-10, "closed form {value} vs direct {direct}");
        // Frozen from 40-digit arithmetic: the closed-form maximum at f = 2.
        assert!((value - 0.2934678587554690).abs() < 1e-12);
    }

    #[test]
    fn interior_max_boundary_when_alpha_star_exceeds_one() {
        let p = params(1.0, 9);
        let (alpha_star, value) = interior_max(&p).unwrap();
        assert_eq!(alpha_star, 1.0);
        assert!((value - pivotal_gain(&p, 1.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn interior_max_rejects_f1() {
        assert!(matches!(interior_max(&params(30.0, 1)), Err(Error::Structure(_))));
    }

    #[test]
    fn solvability_interval_f1() {
        let (lo, hi) = cost_solvability_interval(30.0, 1).unwrap();
        let expected_lo = 31.0 / (2.0 * 30.0_f64.exp());
        assert!(((lo - expected_lo) / expected_lo).abs() < 1e-12);
        assert_eq!(hi, 0.5);
    }

    #[test]
    fn solvability_interval_shrinks_in_f() {
        let mut prev = f64::INFINITY;
        for f in 2u64..=40 {
            let (lo, hi) = cost_solvability_interval(30.0, f).unwrap();
            assert_eq!(lo, 0.0);
            assert!(hi < prev, "endpoint not decreasing at f={f}: {hi} >= {prev}");
            prev = hi;
        }
        assert!(prev < 0.11); // converges towards 0
    }

    #[test]
    fn win_prob_zero_at_zero_turnout() {
        for &f in &[1u64, 2, 9] {
            let q = win_prob_conventional(&params(30.0, f), 0.0, &TruncationPolicy::default())
                .unwrap();
            assert_eq!(q.value(), 0.0);
        }
    }

    #[test]
    fn welfare_zero_at_zero_turnout() {
        let w = welfare_conventional(&params(30.0, 2), 0.0, &TruncationPolicy::default()).unwrap();
        assert_eq!(w, 0.0);
    }

    #[test]
    fn welfare_sandwich() {
        let trunc = TruncationPolicy::default();
        for &(n, f, alpha) in &[(5.0, 1, 0.3), (30.0, 2, 0.2), (30.0, 8, 0.9), (12.0, 3, 0.5)] {
            let p = params(n, f);
            let q = win_prob_conventional(&p, alpha, &trunc).unwrap().value();
            let w = welfare_conventional(&p, alpha, &trunc).unwrap();
            assert!(
                q - p.c - 1e-10 <= w && w <= q + 1e-10,
                "n={n} f={f} alpha={alpha}: q={q}, W={w}"
            );
        }
    }

    #[test]
    fn poisson_binomial_mixture_identity() {
        // Marginalizing Bin(N, alpha) over N ~ Pois(n) gives Pois(n*alpha).
        let n = 12.0;
        let alpha = 0.35;
        let trunc = TruncationPolicy::default();
        let k_n = poisson_trunc_point(n, trunc.tail_eps).unwrap();
        let pr = Prob::new(alpha).unwrap();
        for k in 0..=poisson_trunc_point(n * alpha, trunc.tail_eps).unwrap() as u64 {
            let mut mixed = 0.0;
            for n_total in k..=k_n as u64 {
                mixed += poisson_pmf(n, n_total).unwrap().value()
                    * binomial_pmf(n_total, pr, k).unwrap().value();
            }
            let direct = poisson_pmf(n * alpha, k).unwrap().value();
            assert!(
                (mixed - direct).abs() < 1e-10,
                "k={k}: mixture {mixed} vs poisson {direct}"
            );
        }
    }

    #[test]
    fn gain_shape_f_geq_2_unimodal() {
        let p = params(30.0, 4);
        let (alpha_star, _) = interior_max(&p).unwrap();
        let grid: Vec<f64> = (0..=1000)
            .map(|i| pivotal_gain(&p, i as f64 / 1000.0).unwrap())
            .collect();
        // Sign pattern of finite differences: rising then falling around alpha*.
        let split = (alpha_star * 1000.0).floor() as usize;
        for i in 0..split {
            assert!(grid[i + 1] >= grid[i] - 1e-15, "not rising at {i}");
        }
        for i in (split + 1)..1000 {
            assert!(grid[i + 1] <= grid[i] + 1e-15, "not falling at {i}");
        }
    }

    #[test]
    fn gain_shape_f1_decreasing() {
        let p = params(30.0, 1);
        let mut prev = pivotal_gain(&p, 0.0).unwrap();
        assert_eq!(prev, 0.5);
        for i in 1..=1000 {
            let v = pivotal_gain(&p, i as f64 / 1000.0).unwrap();
            assert!(v <= prev + 1e-15, "not non-increasing at {i}");
            prev = v;
        }
        let expected_end = 31.0 / (2.0 * 30.0_f64.exp());
        assert!(((prev - expected_end) / expected_end).abs() < 1e-10);
    }
}

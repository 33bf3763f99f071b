//! Numerically stable probability primitives.
//!
//! Everything downstream (indifference curves, winning probabilities,
//! welfare sums) is built from Poisson and binomial pmfs evaluated in log
//! space, plus the certified truncation points that turn the model's
//! infinite sums into finite ones with a known neglected mass.

use serde::Serialize;

use crate::error::{Error, Result};

/// A probability value, guaranteed to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Prob(f64);

impl Prob {
    pub fn new(value: f64) -> Result<Prob> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Domain(format!("probability {value} outside [0, 1]")));
        }
        Ok(Prob(value))
    }

    /// Clamp rounding excursions of at most a few ulps back into `[0, 1]`.
    pub(crate) fn clamped(value: f64) -> Prob {
        Prob(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Budget for truncating the model's infinite sums: total neglected
/// probability mass stays below `tail_eps`, and no summation index may
/// exceed `max_terms`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TruncationPolicy {
    pub tail_eps: f64,
    pub max_terms: usize,
}

impl TruncationPolicy {
    pub fn new(tail_eps: f64, max_terms: usize) -> Result<TruncationPolicy> {
        if !(tail_eps > 0.0 && tail_eps <= 1e-4) {
            return Err(Error::InvalidParams(format!(
                "tail_eps must be in (0, 1e-4], got {tail_eps}"
            )));
        }
        if max_terms < 16 {
            return Err(Error::InvalidParams(format!(
                "max_terms must be >= 16, got {max_terms}"
            )));
        }
        Ok(TruncationPolicy { tail_eps, max_terms })
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            tail_eps: 1e-10,
            max_terms: 200_000,
        }
    }
}

/// `ln(k!)`, table-backed for small `k`, Stirling series above.
pub(crate) fn ln_factorial(k: u64) -> f64 {
    const TABLE_LEN: usize = 256;
    use std::sync::OnceLock;
    static TABLE: OnceLock<[f64; TABLE_LEN]> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = [0.0_f64; TABLE_LEN];
        let mut acc = 0.0_f64;
        for (i, slot) in t.iter_mut().enumerate() {
            if i > 0 {
                acc += (i as f64).ln();
            }
            *slot = acc;
        }
        t
    });
    if (k as usize) < TABLE_LEN {
        return table[k as usize];
    }
    // Stirling series; error < 1e-16 relative for k >= 256.
    let x = k as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x + 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

pub(crate) fn poisson_ln_pmf(lambda: f64, k: u64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    (k as f64) * lambda.ln() - lambda - ln_factorial(k)
}

/// Poisson pmf `lambda^k e^{-lambda} / k!`, exact point mass at `lambda = 0`.
pub fn poisson_pmf(lambda: f64, k: u64) -> Result<Prob> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("poisson rate must be finite and >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(Prob(if k == 0 { 1.0 } else { 0.0 }));
    }
    Ok(Prob::clamped(poisson_ln_pmf(lambda, k).exp()))
}

/// Smallest `K` such that the Poisson upper tail beyond `K` has mass `< eps`.
///
/// Accumulates the cumulative mass by scanning away from the mode, so no
/// intermediate pmf value under- or overflows even for large rates.
pub fn poisson_trunc_point(lambda: f64, eps: f64) -> Result<usize> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("poisson rate must be finite and >= 0, got {lambda}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must be in (0, 1), got {eps}")));
    }
    if lambda == 0.0 {
        return Ok(0);
    }
    let mode = lambda.floor() as u64;
    let pmf_mode = poisson_ln_pmf(lambda, mode).exp();

    // Mass strictly below the mode, scanned downward: pmf(k-1) = pmf(k) * k / lambda.
    let mut below = 0.0;
    let mut term = pmf_mode;
    let mut k = mode;
    while k > 0 && term > 0.0 {
        term *= (k as f64) / lambda;
        below += term;
        k -= 1;
    }

    // Scan upward from the mode until the cumulative mass certifies the tail.
    let mut cum = below;
    let mut term = pmf_mode;
    let mut k = mode;
    loop {
        cum += term;
        if cum >= 1.0 - eps {
            return Ok(k as usize);
        }
        k += 1;
        term *= lambda / (k as f64);
        if term == 0.0 {
            // Remaining mass underflowed; the cumulative sum can no longer
            // move, so the tail beyond k is already below eps in f64.
            return Ok(k as usize);
        }
    }
}

pub(crate) fn binomial_ln_pmf(m: u64, k: u64, p: f64, q: f64) -> f64 {
    let ln_choose = ln_factorial(m) - ln_factorial(k) - ln_factorial(m - k);
    ln_choose + (k as f64) * p.ln() + ((m - k) as f64) * q.ln()
}

/// Binomial pmf `C(m, k) pr^k (1-pr)^{m-k}` with exact degenerate cases.
pub fn binomial_pmf(m: u64, pr: Prob, k: u64) -> Result<Prob> {
    if k > m {
        return Err(Error::Domain(format!("binomial pmf needs k <= m, got k={k}, m={m}")));
    }
    let p = pr.value();
    if p == 0.0 {
        return Ok(Prob(if k == 0 { 1.0 } else { 0.0 }));
    }
    if p == 1.0 {
        return Ok(Prob(if k == m { 1.0 } else { 0.0 }));
    }
    Ok(Prob::clamped(binomial_ln_pmf(m, k, p, 1.0 - p).exp()))
}

/// `P[X > a] + 1/2 P[X = a]` for `X ~ Bin(m, p)` and a real threshold `a`,
/// with the tie term contributing only when `a` is an integer in range.
///
/// `q` is the complement success probability, passed explicitly so callers
/// with an exact rational complement (e.g. `f / (V + f)`) lose no precision.
pub(crate) fn binomial_upper_prob(m: u64, p: f64, q: f64, a: f64) -> f64 {
    if a < 0.0 {
        return 1.0;
    }
    let is_int = a.fract() == 0.0 && a <= m as f64;
    let a_int = if is_int { Some(a as u64) } else { None };
    if a >= m as f64 {
        return match a_int {
            Some(k) if k == m => 0.5 * bin_pmf_direct(m, p, q, m),
            _ => 0.0,
        };
    }
    if p <= 0.0 {
        // X = 0 with certainty; a >= 0 here, so only a possible tie at 0.
        return if a == 0.0 { 0.5 } else { 0.0 };
    }
    if p >= 1.0 {
        // X = m with certainty and a < m here.
        return 1.0;
    }

    let k0 = a.floor() as u64 + 1; // smallest integer strictly above a
    let tie = match a_int {
        Some(k) => 0.5 * bin_pmf_direct(m, p, q, k),
        None => 0.0,
    };

    if (k0 as f64) > m as f64 * p {
        // Upper range starts at or above the mean: sum it directly, the
        // first term is the largest so the recurrence cannot underflow
        // anything that matters.
        let ratio = p / q;
        let mut term = binomial_ln_pmf(m, k0, p, q).exp();
        let mut sum = 0.0;
        for k in k0..=m {
            sum += term;
            if k < m {
                term *= ((m - k) as f64) / ((k + 1) as f64) * ratio;
            }
        }
        (sum + tie).clamp(0.0, 1.0)
    } else {
        // Upper range covers the bulk; sum the small lower range instead,
        // scanning downward from its top so terms only shrink.
        let top = k0 - 1;
        let ratio = q / p;
        let mut term = binomial_ln_pmf(m, top, p, q).exp();
        let mut lower = 0.0;
        let mut k = top;
        loop {
            lower += term;
            if k == 0 {
                break;
            }
            term *= (k as f64) / ((m - k + 1) as f64) * ratio;
            k -= 1;
        }
        // lower = P[X <= floor(a)]. For integral a that includes the full tie
        // mass, so half of it is added back: 1 - P[X <= a] + 1/2 P[X = a].
        (1.0 - lower + tie).clamp(0.0, 1.0)
    }
}

fn bin_pmf_direct(m: u64, p: f64, q: f64, k: u64) -> f64 {
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == m { 1.0 } else { 0.0 };
    }
    binomial_ln_pmf(m, k, p, q).exp()
}

/// Outcome gain by vote comparison: 1 if `x > y`, 1/2 on a tie, 0 otherwise.
pub fn gain(x: u64, y: u64) -> f64 {
    match x.cmp(&y) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Less => 0.0,
    }
}

/// Safe reciprocal: `1/x` for positive `x`, 0 at `x = 0`.
pub fn reciprocal_or_zero(x: u64) -> f64 {
    if x == 0 {
        0.0
    } else {
        1.0 / (x as f64)
    }
}

/// Pairwise summation; keeps accumulated error O(log n) and the result
/// independent of how callers later chunk the input.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn poisson_pmf_point_mass_at_zero_rate() {
        assert_eq!(poisson_pmf(0.0, 0).unwrap().value(), 1.0);
        assert_eq!(poisson_pmf(0.0, 3).unwrap().value(), 0.0);
    }

    #[test]
    fn poisson_pmf_definition_values() {
        let v = poisson_pmf(1.0, 0).unwrap().value();
        assert!((v - (-1.0_f64).exp()).abs() < 1e-15);
        // Oracle: direct product evaluation, frozen from 40-digit arithmetic.
        let v = poisson_pmf(30.0, 30).unwrap().value();
        let expected = 0.07263452647159149519329555243074381823145_f64;
        assert!(
            ((v - expected) / expected).abs() < 1e-12,
            "pois(30,30) = {v}, expected {expected}"
        );
        // Independent route: multiplicative product of (lambda / i).
        let mut direct = (-30.0_f64).exp();
        for i in 1..=30 {
            direct *= 30.0 / i as f64;
        }
        assert!(((v - direct) / direct).abs() < 1e-13);
    }

    #[test]
    fn poisson_pmf_rejects_negative_rate() {
        assert!(matches!(poisson_pmf(-1.0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn poisson_pmf_finite_at_extreme_arguments() {
        for &(lambda, k) in &[(1e6, 10_000_000u64), (1e6, 0), (1e6, 1_000_000), (50.0, 10_000)] {
            let v = poisson_pmf(lambda, k).unwrap().value();
            assert!(v.is_finite(), "pois({lambda},{k}) = {v}");
        }
    }

    #[test]
    fn trunc_point_examples() {
        assert_eq!(poisson_trunc_point(0.0, 1e-10).unwrap(), 0);
        // P(X<=0) = e^-1 < 0.5, P(X<=1) ~ 0.736 >= 0.5
        assert_eq!(poisson_trunc_point(1.0, 0.5).unwrap(), 1);
        let k = poisson_trunc_point(30.0, 1e-10).unwrap();
        let mut cum = 0.0;
        for i in 0..=k as u64 {
            cum += poisson_pmf(30.0, i).unwrap().value();
        }
        assert!(cum >= 1.0 - 1e-10, "cumulative through {k} is {cum}");
    }

    #[test]
    fn binomial_pmf_examples() {
        assert_eq!(
            binomial_pmf(2, Prob::new(0.5).unwrap(), 1).unwrap().value(),
            0.5
        );
        assert_eq!(binomial_pmf(5, Prob::new(0.0).unwrap(), 0).unwrap().value(), 1.0);
        // Direct factorial evaluation: C(10,4) 0.3^4 0.7^6
        let direct = 210.0 * 0.3_f64.powi(4) * 0.7_f64.powi(6);
        let v = binomial_pmf(10, Prob::new(0.3).unwrap(), 4).unwrap().value();
        assert!((v - direct).abs() < 1e-14);
    }

    #[test]
    fn binomial_pmf_rejects_k_above_m() {
        assert!(matches!(
            binomial_pmf(3, Prob::new(0.5).unwrap(), 4),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn gain_and_reciprocal_values() {
        assert_eq!(gain(3, 2), 1.0);
        assert_eq!(gain(2, 2), 0.5);
        assert_eq!(gain(0, 1), 0.0);
        assert_eq!(reciprocal_or_zero(0), 0.0);
        assert_eq!(reciprocal_or_zero(1), 1.0);
        assert_eq!(reciprocal_or_zero(4), 0.25);
    }

    #[test]
    fn binomial_upper_prob_matches_brute_force() {
        for &m in &[0u64, 1, 2, 5, 17, 40] {
            for &p in &[0.0, 1e-3, 0.3, 0.5, 0.9, 1.0] {
                let q = 1.0 - p;
                for a2 in -3..=(2 * m as i64 + 3) {
                    let a = a2 as f64 / 2.0;
                    let mut brute = 0.0;
                    for k in 0..=m {
                        let pmf = binomial_pmf(m, Prob::new(p).unwrap(), k).unwrap().value();
                        if (k as f64) > a {
                            brute += pmf;
                        } else if (k as f64) == a {
                            brute += 0.5 * pmf;
                        }
                    }
                    let got = binomial_upper_prob(m, p, q, a);
                    assert!(
                        (got - brute).abs() < 1e-12,
                        "m={m} p={p} a={a}: got {got}, brute {brute}"
                    );
                }
            }
        }
    }

    #[test]
    fn binomial_upper_prob_no_underflow_in_bulk() {
        // Lower-range route: threshold far below the mean of Bin(1000, 0.5).
        let v = binomial_upper_prob(1000, 0.5, 0.5, 5.0);
        assert!(v > 1.0 - 1e-12);
    }

    proptest! {
        #[test]
        fn binomial_pmf_sums_to_one(m in 0u64..200, p in 0.0f64..=1.0) {
            let pr = Prob::new(p).unwrap();
            let total: f64 = (0..=m)
                .map(|k| binomial_pmf(m, pr, k).unwrap().value())
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn trunc_point_certifies_tail(lambda in 0.0f64..500.0, eps_exp in 1.0f64..12.0) {
            let eps = 10f64.powf(-eps_exp);
            let k = poisson_trunc_point(lambda, eps).unwrap();
            let mut cum = 0.0;
            for i in 0..=k as u64 {
                cum += poisson_pmf(lambda, i).unwrap().value();
            }
            // The 1e-12 slack absorbs rounding from naively summing up to
            // ~1000 pmf terms; the certificate itself is about `eps`.
            prop_assert!(cum >= 1.0 - eps - 1e-12);
        }

        #[test]
        fn gain_antisymmetry(x in 0u64..100, y in 0u64..100) {
            prop_assert_eq!(gain(x, y) + gain(y, x), 1.0);
        }
    }
}

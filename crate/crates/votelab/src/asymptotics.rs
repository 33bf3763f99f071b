//! Quantitative objects behind the large-population failure result: both
//! real branches of the Lambert W function, the Hoeffding-derived lower
//! bounds on the delegator count, the Poisson tail bound, the adversary-size
//! threshold, and the population thresholds bracketing the failure regime.

use serde::Serialize;

use crate::conventional::cost_solvability_interval;
use crate::delegation::GameParams;
use crate::error::{Error, Result};
use crate::prob::TruncationPolicy;
use crate::solver::{solve_delegation, SolverConfig};

const NEG_INV_E: f64 = -0.36787944117144233; // -1/e

/// Slack functions of the proof cases, left free by the analysis and
/// therefore exposed as parameters, plus the probability level the
/// population thresholds are certified at.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlackParams {
    pub delta: f64,
    pub delta_tilde: f64,
    pub sigma: f64,
    pub confidence: f64,
}

impl SlackParams {
    pub fn new(delta: f64, delta_tilde: f64, sigma: f64, confidence: f64) -> Result<SlackParams> {
        if delta <= 0.0 || delta_tilde <= 0.0 || sigma <= 0.0 {
            return Err(Error::InvalidParams("slack values must be positive".into()));
        }
        if !(0.0..1.0).contains(&confidence) {
            return Err(Error::InvalidParams(format!(
                "confidence must be in [0, 1), got {confidence}"
            )));
        }
        Ok(SlackParams {
            delta,
            delta_tilde,
            sigma,
            confidence,
        })
    }
}

/// Threshold quantities of the failure regime.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThresholdReport {
    pub f_star: u64,
    pub d_star: f64,
    pub n_lo: f64,
    pub n_hi: f64,
}

fn halley(x: f64, mut w: f64) -> f64 {
    for _ in 0..100 {
        let ew = w.exp();
        let r = w * ew - x;
        if r == 0.0 {
            break;
        }
        let d1 = ew * (1.0 + w);
        let step = r / (d1 - r * (2.0 + w) / (2.0 * (1.0 + w)));
        let next = w - step;
        if (next - w).abs() <= 1e-16 * (1.0 + next.abs()) {
            return next;
        }
        w = next;
    }
    w
}

/// Principal branch `W_0` on `[-1/e, inf)`, with `W_0(-1/e) = -1`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if !x.is_finite() || x < NEG_INV_E {
        return Err(Error::Domain(format!("W0 needs x >= -1/e, got {x}")));
    }
    if x == NEG_INV_E {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let seed = if x < -0.25 {
        // Series around the branch point.
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 * p * p * p / 72.0
    } else if x < std::f64::consts::E {
        x / (1.0 + x)
    } else {
        let l = x.ln();
        l - l.ln().max(0.0)
    };
    Ok(halley(x, seed))
}

/// Secondary branch `W_{-1}` on `[-1/e, 0)`, with values in `(-inf, -1]`.
pub fn lambert_wm1(x: f64) -> Result<f64> {
    if !(x >= NEG_INV_E && x < 0.0) {
        return Err(Error::Domain(format!("W-1 needs x in [-1/e, 0), got {x}")));
    }
    if x == NEG_INV_E {
        return Ok(-1.0);
    }
    let seed = if x > -0.25 / std::f64::consts::E {
        // Asymptotic seed near 0^-: w ~ ln(-x) - ln(-ln(-x)).
        let l1 = (-x).ln();
        l1 - (-l1).ln()
    } else {
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).sqrt();
        -1.0 - p - p * p / 3.0 - 11.0 * p * p * p / 72.0
    };
    Ok(halley(x, seed))
}

/// Upper bound `e^{-lambda} (e lambda)^x / x^x` on the Poisson tail beyond
/// `x`, valid for `x > lambda`, computed in log space.
pub fn poisson_upper_tail_bound(lambda: f64, x: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if !(x > lambda) {
        return Err(Error::Domain(format!(
            "tail bound only valid for x > lambda, got x={x}, lambda={lambda}"
        )));
    }
    let ln_bound = -lambda + x * (1.0 + lambda.ln() - x.ln());
    Ok(ln_bound.exp())
}

/// Lower bound on the delegator count in the low-turnout case:
/// `(f^2/delta^2) (8/9) log(3/c)`.
pub fn d_star_case1(f: u64, delta: f64, c: f64) -> Result<f64> {
    check_slack_cost(delta, c)?;
    let ratio = f as f64 / delta;
    Ok(ratio * ratio * (8.0 / 9.0) * (3.0 / c).ln())
}

/// Lower bound on the delegator count in the high-turnout cases:
/// `8 (f^2/slack^2) log(3/c)`; serves both proof sub-cases.
pub fn d_star_case2(f: u64, slack: f64, c: f64) -> Result<f64> {
    check_slack_cost(slack, c)?;
    let ratio = f as f64 / slack;
    Ok(8.0 * ratio * ratio * (3.0 / c).ln())
}

fn check_slack_cost(slack: f64, c: f64) -> Result<()> {
    if !(slack > 0.0) {
        return Err(Error::Domain(format!("slack must be positive, got {slack}")));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Domain(format!("c must be in (0, 1], got {c}")));
    }
    Ok(())
}

/// Adversary-size threshold above which delegation fails:
/// `ceil((18 / (e^2 pi)) delta^2 / c^2)`.
pub fn f_star(c: f64, delta: f64) -> Result<u64> {
    if !(delta >= 1.0) {
        return Err(Error::Domain(format!("delta must be at least 1, got {delta}")));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Domain(format!("c must be in (0, 1], got {c}")));
    }
    let v = 18.0 / (std::f64::consts::E.powi(2) * std::f64::consts::PI) * delta * delta / (c * c);
    Ok(v.ceil() as u64)
}

/// Population thresholds `n_1 < D*/gamma < n_2` such that the delegator
/// count exceeds `D*` with probability at least `confidence` outside the
/// bracketed range: `n_{1,2} = -(D*/gamma) W_{0,-1}(-(1-q)^{1/D*}/e)`.
pub fn n_thresholds(d_star: f64, gamma: f64, confidence: f64) -> Result<(f64, f64)> {
    if !(d_star > 0.0) {
        return Err(Error::Domain(format!("d_star must be positive, got {d_star}")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Domain(format!("gamma must be in (0, 1], got {gamma}")));
    }
    if !(0.0..1.0).contains(&confidence) {
        return Err(Error::Domain(format!(
            "confidence must be in [0, 1), got {confidence}"
        )));
    }
    // (1-q)^(1/D*) as exp(log1p(-q)/D*): survives D* ~ 1e5 and q near 1.
    let root = ((-confidence).ln_1p() / d_star).exp();
    let arg = -root / std::f64::consts::E;
    if !(NEG_INV_E..0.0).contains(&arg) {
        return Err(Error::Domain(format!(
            "Lambert argument {arg} outside [-1/e, 0)"
        )));
    }
    let scale = d_star / gamma;
    let n_lo = -scale * lambert_w0(arg)?;
    let n_hi = -scale * lambert_wm1(arg)?;
    Ok((n_lo, n_hi))
}

/// Failure-regime label for an `(f, c)` point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    HighFBothFail,
    ModerateFConventionalOnly,
    LowFNumeric,
}

/// Classify an `(f, c)` point against the delegation failure threshold and
/// the conventional solvability interval. Below `f*` the delegation game is
/// solved numerically, since the moderate-regime constants are only known
/// to exist, not to have closed forms.
pub fn regime_classify(params: &GameParams, delta: f64) -> Result<Regime> {
    let f_threshold = f_star(params.c, delta)?;
    let delegation_has_roots = if params.f >= f_threshold {
        false
    } else {
        let report = solve_delegation(params, &SolverConfig::default(), &TruncationPolicy::default())?;
        !report.roots.is_empty()
    };
    if delegation_has_roots {
        return Ok(Regime::LowFNumeric);
    }
    let (c_lo, c_hi) = cost_solvability_interval(params.n, params.f)?;
    let conventional_solvable = params.c >= c_lo && params.c <= c_hi;
    if conventional_solvable {
        Ok(Regime::ModerateFConventionalOnly)
    } else {
        Ok(Regime::HighFBothFail)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::poisson_pmf;
    use rand::Rng;

    #[test]
    fn lambert_anchor_values() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(NEG_INV_E).unwrap() + 1.0).abs() < 1e-12);
        assert!((lambert_wm1(NEG_INV_E).unwrap() + 1.0).abs() < 1e-12);
        let w = lambert_w0(1.0).unwrap();
        assert!((w - 0.5671432904097838).abs() < 1e-13);
        let w = lambert_wm1(-0.1).unwrap();
        assert!((w + 3.5771520639572972).abs() < 1e-12);
    }

    #[test]
    fn lambert_branch_identity_random() {
        let mut rng = rand::rng();
        for _ in 0..10_000 {
            let x = NEG_INV_E + rng.random::<f64>() * (100.0 - NEG_INV_E);
            let w = lambert_w0(x).unwrap();
            assert!(
                (w * w.exp() - x).abs() <= 1e-13 * x.abs().max(1.0),
                "W0 identity fails at {x}: w={w}"
            );
            assert!(w >= -1.0);
        }
        for _ in 0..10_000 {
            let u = rng.random::<f64>();
            let x = NEG_INV_E * (1.0 - u * u); // dense near the branch point
            if x >= 0.0 {
                continue;
            }
            let w = lambert_wm1(x).unwrap();
            assert!(
                (w * w.exp() - x).abs() <= 1e-13 * x.abs().max(1.0),
                "W-1 identity fails at {x}: w={w}"
            );
            assert!(w <= -1.0 + 1e-12);
        }
    }

    #[test]
    fn lambert_wm1_extreme_argument() {
        let w = lambert_wm1(-1e-6).unwrap();
        assert!(w < -10.0);
        assert!((w * w.exp() + 1e-6).abs() < 1e-18);
    }

    #[test]
    fn lambert_domain_errors() {
        assert!(lambert_w0(-0.4).is_err());
        assert!(lambert_wm1(-0.4).is_err());
        assert!(lambert_wm1(0.0).is_err());
        assert!(lambert_wm1(0.1).is_err());
    }

    #[test]
    fn tail_bound_dominates_exact_tail() {
        for lambda_i in 1..=50u64 {
            let lambda = lambda_i as f64;
            let mut x = lambda.floor() + 1.0;
            while x <= 200.0 {
                let bound = poisson_upper_tail_bound(lambda, x).unwrap();
                // Exact tail P[X >= x] by summation.
                let mut tail = 0.0;
                let mut k = x.ceil() as u64;
                loop {
                    let t = poisson_pmf(lambda, k).unwrap().value();
                    tail += t;
                    if t < 1e-18 * tail.max(1e-300) && k > (lambda as u64) {
                        break;
                    }
                    k += 1;
                    if k > 2000 {
                        break;
                    }
                }
                assert!(
                    bound >= tail - 1e-15,
                    "bound {bound} below exact tail {tail} at lambda={lambda}, x={x}"
                );
                x += 7.0;
            }
        }
    }

    #[test]
    fn tail_bound_log_space_value() {
        // Arbitrary-precision reference for lambda=5, x=20.
        let v = poisson_upper_tail_bound(5.0, 20.0).unwrap();
        let direct = (-5.0_f64).exp() * (std::f64::consts::E * 5.0).powi(20) / 20.0_f64.powi(20);
        assert!(((v - direct) / direct).abs() < 1e-12);
        assert!(poisson_upper_tail_bound(5.0, 4.0).is_err());
    }

    #[test]
    fn d_star_formulas() {
        let v = d_star_case1(100, 1.0, 0.14).unwrap();
        assert!(((v - 27242.001289252822) / v).abs() < 1e-12);
        // f^2 scaling.
        let v2 = d_star_case1(200, 1.0, 0.14).unwrap();
        assert!(((v2 - 4.0 * v) / v2).abs() < 1e-12);
        // log term 3, ratio 1.
        let v3 = d_star_case1(7, 7.0, 3.0 * (-3.0_f64).exp()).unwrap();
        assert!((v3 - 8.0 / 3.0).abs() < 1e-12);
        // Case 2 is exactly 9x case 1.
        let c3 = 3.0 * (-3.0_f64).exp();
        for &(f, s, c) in &[(100u64, 1.0, 0.14), (10, 10.0, c3), (37, 2.5, 0.6)] {
            let a = d_star_case1(f, s, c).unwrap();
            let b = d_star_case2(f, s, c).unwrap();
            assert!((b - 9.0 * a).abs() <= 1e-9 * b.abs());
        }
        // f = 10, slack 10, log term 3: 8 * 1 * 3.
        assert!((d_star_case2(10, 10.0, c3).unwrap() - 24.0).abs() < 1e-12);
    }

    #[test]
    fn f_star_values() {
        assert_eq!(f_star(0.14, 1.0).unwrap(), 40);
        assert_eq!(f_star(1.0, 1.0).unwrap(), 1);
        // Roughly quadruples when c halves.
        let a = f_star(0.2, 1.0).unwrap();
        let b = f_star(0.1, 1.0).unwrap();
        assert!(b >= 4 * a - 4 && b <= 4 * a + 4);
        assert!(f_star(0.14, 0.5).is_err());
    }

    #[test]
    fn n_thresholds_bracket() {
        let mut rng = rand::rng();
        for _ in 0..100 {
            let d_star = 10.0 + rng.random::<f64>() * 1e5;
            let gamma = 0.05 + rng.random::<f64>() * 0.95;
            let confidence = 0.01 + rng.random::<f64>() * 0.98;
            let (lo, hi) = n_thresholds(d_star, gamma, confidence).unwrap();
            let center = d_star / gamma;
            assert!(lo < center && center < hi, "{lo} < {center} < {hi} violated");
        }
        // Degenerate confidence = 0: both thresholds collapse onto D*/gamma.
        let (lo, hi) = n_thresholds(100.0, 0.5, 0.0).unwrap();
        assert!((lo - 200.0).abs() < 1e-9 && (hi - 200.0).abs() < 1e-9);
        assert!(n_thresholds(100.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn n_thresholds_widen_with_confidence() {
        let (lo1, hi1) = n_thresholds(100.0, 0.5, 0.9).unwrap();
        let (lo2, hi2) = n_thresholds(100.0, 0.5, 0.999).unwrap();
        assert!(lo2 < lo1 && hi2 > hi1);
    }

    #[test]
    fn regime_labels() {
        let low = GameParams::new(30.0, 2, 0.14).unwrap();
        assert_eq!(regime_classify(&low, 1.0).unwrap(), Regime::LowFNumeric);
        let moderate = GameParams::new(30.0, 7, 0.14).unwrap();
        assert_eq!(
            regime_classify(&moderate, 1.0).unwrap(),
            Regime::ModerateFConventionalOnly
        );
        let high = GameParams::new(30.0, 25, 0.14).unwrap();
        assert_eq!(regime_classify(&high, 1.0).unwrap(), Regime::HighFBothFail);
    }
}

//! Equilibrium search for both games.
//!
//! The indifference curves are smooth but nothing is assumed about their
//! shape in the delegation game: the solver scans a uniform grid, brackets
//! every sign change against the cost line and bisects each bracket. The
//! conventional game exploits the known unimodal (f >= 2) or monotone
//! (f = 1) structure instead.

use rayon::prelude::*;
use serde::Serialize;

use crate::conventional::{interior_max, pivotal_gain, welfare_conventional, win_prob_conventional};
use crate::delegation::{welfare_delegation, win_prob_delegation, xi, GameParams};
use crate::error::{Error, Result};
use crate::prob::{Prob, TruncationPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Game {
    Delegation,
    Conventional,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolverConfig {
    /// Initial uniform scan resolution on [0, 1].
    pub grid_points: usize,
    /// Bisection tolerance on the strategy variable.
    pub root_tol: f64,
    /// Roots closer than this are merged into one.
    pub merge_tol: f64,
}

impl SolverConfig {
    pub fn new(grid_points: usize, root_tol: f64, merge_tol: f64) -> Result<SolverConfig> {
        if grid_points < 51 {
            return Err(Error::InvalidParams(format!(
                "grid_points must be >= 51, got {grid_points}"
            )));
        }
        if !(root_tol > 0.0 && root_tol <= 1e-6) {
            return Err(Error::InvalidParams(format!(
                "root_tol must be in (0, 1e-6], got {root_tol}"
            )));
        }
        if merge_tol < root_tol {
            return Err(Error::InvalidParams(format!(
                "merge_tol ({merge_tol}) must be >= root_tol ({root_tol})"
            )));
        }
        Ok(SolverConfig {
            grid_points,
            root_tol,
            merge_tol,
        })
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid_points: 401,
            root_tol: 1e-10,
            merge_tol: 1e-6,
        }
    }
}

/// Behavior at the corners when no interior root exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CornerNote {
    /// The gain from voting stays below the cost everywhere: every
    /// well-behaving agent delegates (delegation-game failure regime).
    AllDelegateDominant,
    /// Same situation in the conventional game: everyone abstains.
    AllAbstainDominant,
    None,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EquilibriumRoot {
    pub strategy_prob: f64,
    pub win_prob: Prob,
    pub welfare: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub game: Game,
    pub params: GameParams,
    pub roots: Vec<EquilibriumRoot>,
    pub corner_note: CornerNote,
}

/// Curve samples suitable for external plotting.
#[derive(Debug, Clone, Serialize)]
pub struct CurveSample {
    pub strategy_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub cost_line: f64,
}

fn eval<F: Fn(f64) -> Result<f64>>(curve: &F, x: f64) -> Result<f64> {
    curve(x).map_err(|e| Error::CurveEval {
        at: x,
        source: Box::new(e),
    })
}

fn bisect<F: Fn(f64) -> Result<f64>>(
    curve: &F,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    mut g_lo: f64,
    tol: f64,
) -> Result<f64> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let g_mid = eval(curve, mid)? - target;
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn merge_and_filter(mut roots: Vec<f64>, merge_tol: f64) -> Vec<f64> {
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::new();
    for r in roots {
        if !(r > 0.0 && r < 1.0) {
            continue;
        }
        match out.last() {
            Some(&last) if r - last < merge_tol => {}
            _ => out.push(r),
        }
    }
    out
}

struct Scan {
    roots: Vec<f64>,
    all_below_target: bool,
}

fn scan_roots<F: Fn(f64) -> Result<f64>>(
    curve: &F,
    target: f64,
    cfg: &SolverConfig,
) -> Result<Scan> {
    let m = cfg.grid_points - 1;
    let xs: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
    let mut gs = Vec::with_capacity(xs.len());
    for &x in &xs {
        gs.push(eval(curve, x)? - target);
    }
    let mut roots = Vec::new();
    for i in 0..m {
        if gs[i] == 0.0 {
            roots.push(xs[i]);
        } else if gs[i].signum() != gs[i + 1].signum() && gs[i + 1] != 0.0 {
            roots.push(bisect(curve, target, xs[i], xs[i + 1], gs[i], cfg.root_tol)?);
        }
    }
    if gs[m] == 0.0 {
        roots.push(xs[m]);
    }
    let all_below_target = gs.iter().all(|&g| g < 0.0);
    Ok(Scan {
        roots: merge_and_filter(roots, cfg.merge_tol),
        all_below_target,
    })
}

/// All interior roots of `curve(x) = target` on [0, 1], found by grid scan,
/// bracketed bisection, and merging of near-duplicates.
pub fn find_roots<F: Fn(f64) -> Result<f64>>(
    curve: F,
    target: f64,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    Ok(scan_roots(&curve, target, cfg)?.roots)
}

/// Solve the delegation game: roots of the voting-gain curve against the
/// cost, each annotated with winning probability and welfare.
pub fn solve_delegation(
    params: &GameParams,
    cfg: &SolverConfig,
    trunc: &TruncationPolicy,
) -> Result<EquilibriumReport> {
    let curve = |gamma: f64| xi(params, gamma, trunc).map(|p| p.xi);
    let scan = scan_roots(&curve, params.c, cfg)?;
    let mut roots = Vec::with_capacity(scan.roots.len());
    for &gamma in &scan.roots {
        roots.push(EquilibriumRoot {
            strategy_prob: gamma,
            win_prob: win_prob_delegation(params, gamma, trunc)?,
            welfare: welfare_delegation(params, gamma, trunc)?,
        });
    }
    let corner_note = if roots.is_empty() && scan.all_below_target {
        CornerNote::AllDelegateDominant
    } else {
        CornerNote::None
    };
    Ok(EquilibriumReport {
        game: Game::Delegation,
        params: *params,
        roots,
        corner_note,
    })
}

/// Solve the conventional game using the known curve structure: for `f >= 2`
/// the unimodal shape yields 0, 1 or 2 roots decided against the interior
/// maximum; for `f = 1` the curve is monotone decreasing.
pub fn solve_conventional(
    params: &GameParams,
    cfg: &SolverConfig,
    trunc: &TruncationPolicy,
) -> Result<EquilibriumReport> {
    let curve = |alpha: f64| pivotal_gain(params, alpha);
    let c = params.c;
    let mut raw_roots: Vec<f64> = Vec::new();
    let max_gain: f64;

    if params.f == 1 {
        let g0 = eval(&curve, 0.0)? - c; // 1/2 - c
        let g1 = eval(&curve, 1.0)? - c;
        max_gain = 0.5;
        if g0 > 0.0 && g1 < 0.0 {
            raw_roots.push(bisect(&curve, c, 0.0, 1.0, g0, cfg.root_tol)?);
        } else if g0 == 0.0 {
            raw_roots.push(0.0); // corner; filtered below
        }
    } else {
        let (alpha_star, value) = interior_max(params)?;
        max_gain = value;
        if alpha_star < 1.0 {
            let g_star = value - c;
            if g_star >= 0.0 {
                // Rising flank [0, alpha*]: gain(0) = 0 < c.
                raw_roots.push(bisect(&curve, c, 0.0, alpha_star, -c, cfg.root_tol)?);
                // Falling flank [alpha*, 1], crossing only if gain(1) < c.
                let g1 = eval(&curve, 1.0)? - c;
                if g1 < 0.0 {
                    raw_roots.push(bisect(&curve, c, alpha_star, 1.0, g_star, cfg.root_tol)?);
                }
            }
        } else {
            // Maximum beyond alpha = 1: the curve rises on all of [0, 1].
            let g1 = value - c;
            if g1 > 0.0 {
                raw_roots.push(bisect(&curve, c, 0.0, 1.0, -c, cfg.root_tol)?);
            }
        }
    }

    let interior = merge_and_filter(raw_roots, cfg.merge_tol);
    let mut roots = Vec::with_capacity(interior.len());
    for &alpha in &interior {
        roots.push(EquilibriumRoot {
            strategy_prob: alpha,
            win_prob: win_prob_conventional(params, alpha, trunc)?,
            welfare: welfare_conventional(params, alpha, trunc)?,
        });
    }
    let corner_note = if roots.is_empty() && max_gain < c {
        CornerNote::AllAbstainDominant
    } else {
        CornerNote::None
    };
    Ok(EquilibriumReport {
        game: Game::Conventional,
        params: *params,
        roots,
        corner_note,
    })
}

/// Per-game outcome of one sweep row; failures are recorded, not fatal.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GameOutcome {
    Report(EquilibriumReport),
    Error(String),
}

impl GameOutcome {
    pub fn report(&self) -> Option<&EquilibriumReport> {
        match self {
            GameOutcome::Report(r) => Some(r),
            GameOutcome::Error(_) => None,
        }
    }

    fn from_result(res: Result<EquilibriumReport>) -> Self {
        match res {
            Ok(r) => GameOutcome::Report(r),
            Err(e) => GameOutcome::Error(e.to_string()),
        }
    }
}

/// One row of an f-sweep: both games solved at the same `(n, f, c)`.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub f: u64,
    pub delegation: GameOutcome,
    pub conventional: GameOutcome,
}

/// Solve both games for every `f` in `f_min..=f_max`. Rows are computed
/// concurrently; per-row failures are recorded and the sweep continues.
pub fn sweep_f(
    n: f64,
    c: f64,
    f_min: u64,
    f_max: u64,
    cfg: &SolverConfig,
    trunc: &TruncationPolicy,
) -> Result<Vec<SweepRow>> {
    if f_min > f_max || f_min == 0 {
        return Err(Error::InvalidParams(format!(
            "need 1 <= f_min <= f_max, got {f_min}..{f_max}"
        )));
    }
    GameParams::new(n, f_min, c)?;
    Ok((f_min..=f_max)
        .into_par_iter()
        .map(|f| {
            let params = GameParams { n, f, c };
            SweepRow {
                f,
                delegation: GameOutcome::from_result(solve_delegation(&params, cfg, trunc)),
                conventional: GameOutcome::from_result(solve_conventional(&params, cfg, trunc)),
            }
        })
        .collect())
}

/// Sample the indifference curve of either game on a uniform grid.
pub fn sample_curve(
    game: Game,
    params: &GameParams,
    grid_points: usize,
    trunc: &TruncationPolicy,
) -> Result<CurveSample> {
    if grid_points < 2 {
        return Err(Error::InvalidParams(format!(
            "grid_points must be >= 2, got {grid_points}"
        )));
    }
    let m = grid_points - 1;
    let strategy_grid: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
    let mut values = Vec::with_capacity(grid_points);
    for &x in &strategy_grid {
        let v = match game {
            Game::Delegation => xi(params, x, trunc)?.xi,
            Game::Conventional => pivotal_gain(params, x)?,
        };
        values.push(v);
    }
    Ok(CurveSample {
        strategy_grid,
        values,
        cost_line: params.c,
    })
}

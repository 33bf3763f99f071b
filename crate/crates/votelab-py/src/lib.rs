//! Python bindings: the analytic curves, equilibrium solver, asymptotic
//! thresholds, and Monte Carlo estimators, exposed as plain functions plus
//! a couple of result classes.
//!
//! Parameter validation errors surface as `ValueError`; numeric failures
//! (for example an uncertifiable series truncation) as `RuntimeError`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use votelab::solver::Game;
use votelab::{
    asymptotics, conventional, delegation, montecarlo, solver, GameParams, SimConfig,
    SolverConfig, TruncationPolicy,
};

fn value_err(e: votelab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn numeric_err(e: votelab::Error) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn make_params(n: f64, f: u64, c: f64) -> PyResult<GameParams> {
    GameParams::new(n, f, c).map_err(value_err)
}

fn make_trunc(eps: f64) -> PyResult<TruncationPolicy> {
    TruncationPolicy::new(eps, 200_000).map_err(value_err)
}

fn parse_game(game: &str) -> PyResult<Game> {
    match game {
        "delegation" => Ok(Game::Delegation),
        "conventional" => Ok(Game::Conventional),
        other => Err(PyValueError::new_err(format!(
            "game must be 'delegation' or 'conventional', got '{other}'"
        ))),
    }
}

/// One mixed equilibrium: strategy probability, winning probability, welfare.
#[pyclass(frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct Root {
    strategy_prob: f64,
    win_prob: f64,
    welfare: f64,
}

#[pymethods]
impl Root {
    fn __repr__(&self) -> String {
        format!(
            "Root(strategy_prob={}, win_prob={}, welfare={})",
            self.strategy_prob, self.win_prob, self.welfare
        )
    }
}

/// Full solver output for one game at one `(n, f, c)`.
#[pyclass(frozen, get_all)]
struct Report {
    game: String,
    roots: Vec<Root>,
    corner_note: String,
}

#[pymethods]
impl Report {
    fn __repr__(&self) -> String {
        format!(
            "Report(game='{}', roots={}, corner_note='{}')",
            self.game,
            self.roots.len(),
            self.corner_note
        )
    }
}

/// A Monte Carlo mean with its standard error.
#[pyclass(frozen, get_all)]
struct Estimate {
    mean: f64,
    stderr: f64,
    trials: u64,
}

#[pymethods]
impl Estimate {
    fn __repr__(&self) -> String {
        format!(
            "Estimate(mean={}, stderr={}, trials={})",
            self.mean, self.stderr, self.trials
        )
    }
}

fn convert_report(report: solver::EquilibriumReport) -> Report {
    Report {
        game: match report.game {
            Game::Delegation => "delegation".into(),
            Game::Conventional => "conventional".into(),
        },
        roots: report
            .roots
            .iter()
            .map(|r| Root {
                strategy_prob: r.strategy_prob,
                win_prob: r.win_prob.value(),
                welfare: r.welfare,
            })
            .collect(),
        corner_note: match report.corner_note {
            solver::CornerNote::AllDelegateDominant => "all_delegate_dominant".into(),
            solver::CornerNote::AllAbstainDominant => "all_abstain_dominant".into(),
            solver::CornerNote::None => "none".into(),
        },
    }
}

fn convert_estimate(e: montecarlo::Estimate) -> Estimate {
    Estimate {
        mean: e.mean,
        stderr: e.stderr,
        trials: e.trials,
    }
}

// --- analytic curves and point quantities ---------------------------------

/// Expected gain from voting over delegating at delegation rate `gamma`.
#[pyfunction]
#[pyo3(signature = (n, f, c, gamma, eps=1e-10))]
fn xi(n: f64, f: u64, c: f64, gamma: f64, eps: f64) -> PyResult<f64> {
    let params = make_params(n, f, c)?;
    delegation::xi(&params, gamma, &make_trunc(eps)?)
        .map(|p| p.xi)
        .map_err(numeric_err)
}

/// Expected gain from voting over abstaining at voting rate `alpha`.
#[pyfunction]
fn pivotal_gain(n: f64, f: u64, c: f64, alpha: f64) -> PyResult<f64> {
    let params = make_params(n, f, c)?;
    conventional::pivotal_gain(&params, alpha).map_err(numeric_err)
}

#[pyfunction]
#[pyo3(signature = (n, f, c, gamma, eps=1e-10))]
fn win_prob_delegation(n: f64, f: u64, c: f64, gamma: f64, eps: f64) -> PyResult<f64> {
    let params = make_params(n, f, c)?;
    delegation::win_prob_delegation(&params, gamma, &make_trunc(eps)?)
        .map(|p| p.value())
        .map_err(numeric_err)
}

#[pyfunction]
#[pyo3(signature = (n, f, c, gamma, eps=1e-10))]
fn welfare_delegation(n: f64, f: u64, c: f64, gamma: f64, eps: f64) -> PyResult<f64> {
    let params = make_params(n, f, c)?;
    delegation::welfare_delegation(&params, gamma, &make_trunc(eps)?).map_err(numeric_err)
}

#[pyfunction]
#[pyo3(signature = (n, f, c, alpha, eps=1e-10))]
fn win_prob_conventional(n: f64, f: u64, c: f64, alpha: f64, eps: f64) -> PyResult<f64> {
    let params = make_params(n, f, c)?;
    conventional::win_prob_conventional(&params, alpha, &make_trunc(eps)?)
        .map(|p| p.value())
        .map_err(numeric_err)
}

#[pyfunction]
#[pyo3(signature = (n, f, c, alpha, eps=1e-10))]
fn welfare_conventional(n: f64, f: u64, c: f64, alpha: f64, eps: f64) -> PyResult<f64> {
    let params = make_params(n, f, c)?;
    conventional::welfare_conventional(&params, alpha, &make_trunc(eps)?).map_err(numeric_err)
}

/// Closed-form maximum of the pivotal gain for `f >= 2`.
#[pyfunction]
fn gain_max_value(f: u64) -> PyResult<f64> {
    if f < 2 {
        return Err(PyValueError::new_err("closed-form maximum requires f >= 2"));
    }
    Ok(conventional::gain_max_value(f))
}

/// `(c_lo, c_hi)` such that the conventional game has interior equilibria.
#[pyfunction]
fn cost_solvability_interval(n: f64, f: u64) -> PyResult<(f64, f64)> {
    conventional::cost_solvability_interval(n, f).map_err(value_err)
}

// --- solver ----------------------------------------------------------------

/// Find all mixed equilibria of one game.
#[pyfunction]
#[pyo3(signature = (n, f, c, game, eps=1e-10, grid_points=401))]
fn solve(n: f64, f: u64, c: f64, game: &str, eps: f64, grid_points: usize) -> PyResult<Report> {
    let params = make_params(n, f, c)?;
    let cfg = SolverConfig::new(grid_points, 1e-10, 1e-6).map_err(value_err)?;
    let trunc = make_trunc(eps)?;
    let report = match parse_game(game)? {
        Game::Delegation => solver::solve_delegation(&params, &cfg, &trunc),
        Game::Conventional => solver::solve_conventional(&params, &cfg, &trunc),
    }
    .map_err(numeric_err)?;
    Ok(convert_report(report))
}

/// Sample an indifference curve; returns `(grid, values, cost)`.
#[pyfunction]
#[pyo3(signature = (n, f, c, game, grid=201, eps=1e-10))]
fn sample_curve(
    n: f64,
    f: u64,
    c: f64,
    game: &str,
    grid: usize,
    eps: f64,
) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    let params = make_params(n, f, c)?;
    let sample = solver::sample_curve(parse_game(game)?, &params, grid, &make_trunc(eps)?)
        .map_err(numeric_err)?;
    Ok((sample.strategy_grid, sample.values, sample.cost_line))
}

// --- asymptotics -----------------------------------------------------------

#[pyfunction]
fn lambert_w0(x: f64) -> PyResult<f64> {
    asymptotics::lambert_w0(x).map_err(value_err)
}

#[pyfunction]
fn lambert_wm1(x: f64) -> PyResult<f64> {
    asymptotics::lambert_wm1(x).map_err(value_err)
}

#[pyfunction]
fn f_star(c: f64, delta: f64) -> PyResult<u64> {
    asymptotics::f_star(c, delta).map_err(value_err)
}

#[pyfunction]
fn d_star_case1(f: u64, delta: f64, c: f64) -> PyResult<f64> {
    asymptotics::d_star_case1(f, delta, c).map_err(value_err)
}

#[pyfunction]
fn d_star_case2(f: u64, slack: f64, c: f64) -> PyResult<f64> {
    asymptotics::d_star_case2(f, slack, c).map_err(value_err)
}

/// `(n_lo, n_hi)` population thresholds bracketing `d_star / gamma`.
#[pyfunction]
fn n_thresholds(d_star: f64, gamma: f64, confidence: f64) -> PyResult<(f64, f64)> {
    asymptotics::n_thresholds(d_star, gamma, confidence).map_err(value_err)
}

// --- Monte Carlo -----------------------------------------------------------

#[pyfunction]
#[pyo3(signature = (n, f, c, gamma, trials=1_000_000, seed=42))]
fn estimate_win_prob(
    n: f64,
    f: u64,
    c: f64,
    gamma: f64,
    trials: u64,
    seed: u64,
) -> PyResult<Estimate> {
    let params = make_params(n, f, c)?;
    let sim = SimConfig::new(trials, seed).map_err(value_err)?;
    Ok(convert_estimate(montecarlo::estimate_win_prob(
        &params, gamma, &sim,
    )))
}

#[pyfunction]
#[pyo3(signature = (n, f, c, gamma, trials=1_000_000, seed=42))]
fn estimate_voting_gain(
    n: f64,
    f: u64,
    c: f64,
    gamma: f64,
    trials: u64,
    seed: u64,
) -> PyResult<Estimate> {
    let params = make_params(n, f, c)?;
    let sim = SimConfig::new(trials, seed).map_err(value_err)?;
    Ok(convert_estimate(montecarlo::estimate_voting_gain(
        &params, gamma, &sim,
    )))
}

#[pyfunction]
#[pyo3(signature = (n, f, c, alpha, trials=1_000_000, seed=42))]
fn estimate_win_prob_conventional(
    n: f64,
    f: u64,
    c: f64,
    alpha: f64,
    trials: u64,
    seed: u64,
) -> PyResult<Estimate> {
    let params = make_params(n, f, c)?;
    let sim = SimConfig::new(trials, seed).map_err(value_err)?;
    Ok(convert_estimate(montecarlo::estimate_win_prob_conventional(
        &params, alpha, &sim,
    )))
}

#[pyfunction]
#[pyo3(signature = (n, f, c, strategy, game, trials=1_000_000, seed=42))]
fn estimate_welfare(
    n: f64,
    f: u64,
    c: f64,
    strategy: f64,
    game: &str,
    trials: u64,
    seed: u64,
) -> PyResult<Estimate> {
    let params = make_params(n, f, c)?;
    let sim = SimConfig::new(trials, seed).map_err(value_err)?;
    Ok(convert_estimate(montecarlo::estimate_welfare(
        &params,
        strategy,
        parse_game(game)?,
        &sim,
    )))
}

#[pymodule]
fn votelab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Root>()?;
    m.add_class::<Report>()?;
    m.add_class::<Estimate>()?;
    m.add_function(wrap_pyfunction!(xi, m)?)?;
    m.add_function(wrap_pyfunction!(pivotal_gain, m)?)?;
    m.add_function(wrap_pyfunction!(win_prob_delegation, m)?)?;
    m.add_function(wrap_pyfunction!(welfare_delegation, m)?)?;
    m.add_function(wrap_pyfunction!(win_prob_conventional, m)?)?;
    m.add_function(wrap_pyfunction!(welfare_conventional, m)?)?;
    m.add_function(wrap_pyfunction!(gain_max_value, m)?)?;
    m.add_function(wrap_pyfunction!(cost_solvability_interval, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(sample_curve, m)?)?;
    m.add_function(wrap_pyfunction!(lambert_w0, m)?)?;
    m.add_function(wrap_pyfunction!(lambert_wm1, m)?)?;
    m.add_function(wrap_pyfunction!(f_star, m)?)?;
    m.add_function(wrap_pyfunction!(d_star_case1, m)?)?;
    m.add_function(wrap_pyfunction!(d_star_case2, m)?)?;
    m.add_function(wrap_pyfunction!(n_thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_win_prob, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_voting_gain, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_win_prob_conventional, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_welfare, m)?)?;
    Ok(())
}

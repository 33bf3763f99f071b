//! Command-line front end: equilibrium solving, f-sweeps, curve sampling,
//! Monte Carlo runs, and asymptotic threshold reports, emitted as CSV or
//! JSON with an embedded run manifest.
//!
//! Exit codes: 0 success (including zero-equilibrium findings), 2 invalid
//! flags or parameter validation, 3 numeric failure during computation.

use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use votelab::solver::{Game, GameOutcome};
use votelab::{
    conventional, delegation, montecarlo, solver, GameParams, SimConfig, SolverConfig,
    TruncationPolicy,
};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

/// Parameter validation failures are usage errors; anything that goes wrong
/// after validated inputs is a numeric failure.
fn usage_err(e: votelab::Error) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: e.to_string(),
    }
}

fn numeric_err(e: votelab::Error) -> Failure {
    Failure {
        code: EXIT_NUMERIC,
        message: e.to_string(),
    }
}

#[derive(Parser)]
#[command(name = "votelab", version, about = "Costly-voting laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum GameFlag {
    Delegation,
    Conventional,
    Both,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Quantity {
    Win,
    Gain,
    Welfare,
}

impl Quantity {
    fn name(self) -> &'static str {
        match self {
            Quantity::Win => "win",
            Quantity::Gain => "gain",
            Quantity::Welfare => "welfare",
        }
    }
}

#[derive(Args)]
struct OutputOpts {
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write output to this file instead of stdout.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Round emitted numbers to K decimal places (default: 12 significant digits).
    #[arg(long)]
    round: Option<usize>,
    /// Certified tail budget for the Poisson series.
    #[arg(long, env = "VOTELAB_EPS", default_value_t = 1e-10)]
    eps: f64,
    /// Grid points for the equilibrium scan.
    #[arg(long = "grid-points", env = "VOTELAB_GRID_POINTS", default_value_t = 401)]
    grid_points: usize,
}

impl OutputOpts {
    fn trunc(&self) -> Result<TruncationPolicy, Failure> {
        TruncationPolicy::new(self.eps, 200_000).map_err(usage_err)
    }

    fn solver(&self) -> Result<SolverConfig, Failure> {
        SolverConfig::new(self.grid_points, 1e-10, 1e-6).map_err(usage_err)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Find all mixed equilibria of one or both games at a single (n, f, c).
    Solve {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        f: u64,
        #[arg(long)]
        c: f64,
        #[arg(long, value_enum, default_value = "both")]
        game: GameFlag,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Sweep f and report both games' equilibria per row.
    Table {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        c: f64,
        #[arg(long = "f-min")]
        f_min: u64,
        #[arg(long = "f-max")]
        f_max: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Sample an indifference curve on a uniform strategy grid.
    Curve {
        #[arg(long, value_enum)]
        game: CurveGame,
        #[arg(long)]
        n: f64,
        #[arg(long)]
        f: u64,
        #[arg(long)]
        c: f64,
        /// Number of grid samples (>= 2).
        #[arg(long, default_value_t = 201)]
        grid: usize,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Monte Carlo estimate of a quantity with its analytic counterpart.
    Simulate {
        #[arg(long, value_enum)]
        game: CurveGame,
        #[arg(long)]
        n: f64,
        #[arg(long)]
        f: u64,
        #[arg(long, default_value_t = 0.14)]
        c: f64,
        /// Delegation probability (delegation game).
        #[arg(long)]
        gamma: Option<f64>,
        /// Voting probability (conventional game).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_enum, default_value = "win")]
        quantity: Quantity,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, env = "VOTELAB_SEED", default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Asymptotic thresholds: f*, D*, and the population bracket.
    Thresholds {
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Adversary size for the D* and population-bracket computations.
        #[arg(long)]
        f: Option<u64>,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 0.99)]
        confidence: f64,
        /// Expected population, enables the regime label.
        #[arg(long)]
        n: Option<f64>,
        #[command(flatten)]
        output: OutputOpts,
    },
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum CurveGame {
    Delegation,
    Conventional,
}

impl CurveGame {
    fn game(self) -> Game {
        match self {
            CurveGame::Delegation => Game::Delegation,
            CurveGame::Conventional => Game::Conventional,
        }
    }
    fn name(self) -> &'static str {
        match self {
            CurveGame::Delegation => "delegation",
            CurveGame::Conventional => "conventional",
        }
    }
}

// ---------------------------------------------------------------------------
// Number formatting: 12 significant digits everywhere unless --round is given.

fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let digits = 11 - x.abs().log10().floor() as i32;
    if !(-300..=300).contains(&digits) {
        return x;
    }
    let factor = 10f64.powi(digits);
    (x * factor).round() / factor
}

fn round_places(x: f64, k: usize) -> f64 {
    let factor = 10f64.powi(k as i32);
    (x * factor).round() / factor
}

fn fmt_num(x: f64, round: Option<usize>) -> String {
    match round {
        Some(k) => format!("{:.*}", k, x),
        None => format!("{}", round_sig(x)),
    }
}

/// Round every number in a JSON tree so the serialized form carries the
/// declared precision (and is stable across runs).
fn round_json(v: &mut Value, round: Option<usize>) {
    match v {
        Value::Number(n) => {
            if let Some(x) = n.as_f64() {
                if n.is_f64() {
                    let y = match round {
                        Some(k) => round_places(x, k),
                        None => round_sig(x),
                    };
                    if let Some(num) = serde_json::Number::from_f64(y) {
                        *v = Value::Number(num);
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|x| round_json(x, round)),
        Value::Object(map) => map.values_mut().for_each(|x| round_json(x, round)),
        _ => {}
    }
}

// ---------------------------------------------------------------------------
// Manifest

#[derive(Serialize)]
struct Manifest {
    command: &'static str,
    params: Value,
    config: Value,
    tool_version: &'static str,
    timestamp: String,
}

impl Manifest {
    fn new(command: &'static str, params: Value, output: &OutputOpts) -> Manifest {
        Manifest {
            command,
            params,
            config: json!({
                "eps": output.eps,
                "grid_points": output.grid_points,
                "format": match output.format { Format::Csv => "csv", Format::Json => "json" },
                "round": output.round,
            }),
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    /// CSV rendering: '#'-prefixed comment lines ahead of the header.
    fn csv_comments(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(s, "# params: {}", compact_obj(&self.params));
        let _ = writeln!(s, "# config: {}", compact_obj(&self.config));
        let _ = writeln!(s, "# tool_version: {}", self.tool_version);
        let _ = writeln!(s, "# timestamp: {}", self.timestamp);
        s
    }
}

fn compact_obj(v: &Value) -> String {
    match v {
        Value::Object(map) => map
            .iter()
            .map(|(k, val)| format!("{k}={val}"))
            .collect::<Vec<_>>()
            .join(" "),
        other => other.to_string(),
    }
}

fn emit(output: &OutputOpts, manifest: Manifest, csv_body: String, data: Value) -> Result<(), Failure> {
    let text = match output.format {
        Format::Csv => format!("{}{}", manifest.csv_comments(), csv_body),
        Format::Json => {
            let mut data = data;
            round_json(&mut data, output.round);
            let doc = json!({
                "manifest": serde_json::to_value(&manifest).expect("manifest serializes"),
                "data": data,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("document serializes");
            s.push('\n');
            s
        }
    };
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure {
            code: EXIT_NUMERIC,
            message: format!("cannot write {}: {e}", path.display()),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// Commands

/// Roots sorted by descending winning probability, matching the reference-table
/// convention (p1 = high-turnout equilibrium).
fn sorted_roots(report: &solver::EquilibriumReport) -> Vec<&solver::EquilibriumRoot> {
    let mut roots: Vec<_> = report.roots.iter().collect();
    roots.sort_by(|a, b| {
        b.win_prob
            .value()
            .partial_cmp(&a.win_prob.value())
            .expect("win probabilities are comparable")
    });
    roots
}

fn cmd_solve(n: f64, f: u64, c: f64, game: GameFlag, output: &OutputOpts) -> Result<(), Failure> {
    let params = GameParams::new(n, f, c).map_err(usage_err)?;
    let trunc = output.trunc()?;
    let cfg = output.solver()?;

    let mut reports = Vec::new();
    if game != GameFlag::Conventional {
        reports.push(solver::solve_delegation(&params, &cfg, &trunc).map_err(numeric_err)?);
    }
    if game != GameFlag::Delegation {
        reports.push(solver::solve_conventional(&params, &cfg, &trunc).map_err(numeric_err)?);
    }

    let manifest = Manifest::new("solve", json!({"n": n, "f": f, "c": c}), output);
    let mut csv = String::from("game,root_index,strategy_prob,win_prob,welfare,corner_note\n");
    for report in &reports {
        let game_name = match report.game {
            Game::Delegation => "delegation",
            Game::Conventional => "conventional",
        };
        let note = serde_json::to_value(report.corner_note).expect("serializes");
        let note = note.as_str().unwrap_or("none").to_string();
        let roots = sorted_roots(report);
        if roots.is_empty() {
            let _ = writeln!(csv, "{game_name},,,,,{note}");
        }
        for (i, root) in roots.iter().enumerate() {
            let _ = writeln!(
                csv,
                "{game_name},{},{},{},{},{note}",
                i + 1,
                fmt_num(root.strategy_prob, output.round),
                fmt_num(root.win_prob.value(), output.round),
                fmt_num(root.welfare, output.round),
            );
        }
    }
    let data = serde_json::to_value(&reports).expect("reports serialize");
    emit(output, manifest, csv, data)
}

fn outcome_report<'a>(outcome: &'a GameOutcome) -> Result<&'a solver::EquilibriumReport, Failure> {
    match outcome {
        GameOutcome::Report(r) => Ok(r),
        GameOutcome::Error(msg) => Err(Failure {
            code: EXIT_NUMERIC,
            message: msg.clone(),
        }),
    }
}

fn cmd_table(n: f64, c: f64, f_min: u64, f_max: u64, output: &OutputOpts) -> Result<(), Failure> {
    let trunc = output.trunc()?;
    let cfg = output.solver()?;
    let rows = solver::sweep_f(n, c, f_min, f_max, &cfg, &trunc).map_err(usage_err)?;

    let manifest = Manifest::new(
        "table",
        json!({"n": n, "c": c, "f_min": f_min, "f_max": f_max}),
        output,
    );
    let mut csv = String::from("f,p1,p2,Wd1,Wd2,q1,q2,Wc1,Wc2\n");
    for row in &rows {
        let del = outcome_report(&row.delegation)?;
        let conv = outcome_report(&row.conventional)?;
        let mut cells = vec![row.f.to_string()];
        for report in [del, conv] {
            let roots = sorted_roots(report);
            for i in 0..2 {
                cells.push(match roots.get(i) {
                    Some(r) => fmt_num(r.win_prob.value(), output.round),
                    None => String::new(),
                });
            }
            for i in 0..2 {
                cells.push(match roots.get(i) {
                    Some(r) => fmt_num(r.welfare, output.round),
                    None => String::new(),
                });
            }
        }
        // Reorder per-game cells into the declared column order.
        let line = [
            cells[0].clone(),
            cells[1].clone(),
            cells[2].clone(),
            cells[3].clone(),
            cells[4].clone(),
            cells[5].clone(),
            cells[6].clone(),
            cells[7].clone(),
            cells[8].clone(),
        ]
        .join(",");
        csv.push_str(&line);
        csv.push('\n');
    }
    let data = serde_json::to_value(&rows).expect("rows serialize");
    emit(output, manifest, csv, data)
}

fn cmd_curve(
    game: CurveGame,
    n: f64,
    f: u64,
    c: f64,
    grid: usize,
    output: &OutputOpts,
) -> Result<(), Failure> {
    let params = GameParams::new(n, f, c).map_err(usage_err)?;
    if grid < 2 {
        return Err(Failure::usage(format!("--grid must be >= 2, got {grid}")));
    }
    let trunc = output.trunc()?;
    let sample = solver::sample_curve(game.game(), &params, grid, &trunc).map_err(numeric_err)?;

    let manifest = Manifest::new(
        "curve",
        json!({"game": game.name(), "n": n, "f": f, "c": c, "grid": grid}),
        output,
    );
    let mut csv = String::from("strategy,value,cost\n");
    for (x, v) in sample.strategy_grid.iter().zip(&sample.values) {
        let _ = writeln!(
            csv,
            "{},{},{}",
            fmt_num(*x, output.round),
            fmt_num(*v, output.round),
            fmt_num(sample.cost_line, output.round),
        );
    }
    let data = serde_json::to_value(&sample).expect("sample serializes");
    emit(output, manifest, csv, data)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    game: CurveGame,
    n: f64,
    f: u64,
    c: f64,
    gamma: Option<f64>,
    alpha: Option<f64>,
    quantity: Quantity,
    trials: u64,
    seed: u64,
    output: &OutputOpts,
) -> Result<(), Failure> {
    let params = GameParams::new(n, f, c).map_err(usage_err)?;
    let sim = SimConfig::new(trials, seed).map_err(usage_err)?;
    let strategy = match game {
        CurveGame::Delegation => {
            gamma.ok_or_else(|| Failure::usage("--gamma is required for --game delegation"))?
        }
        CurveGame::Conventional => {
            alpha.ok_or_else(|| Failure::usage("--alpha is required for --game conventional"))?
        }
    };
    if !(0.0..=1.0).contains(&strategy) {
        return Err(Failure::usage(format!(
            "strategy probability must be in [0, 1], got {strategy}"
        )));
    }
    let trunc = output.trunc()?;

    let (estimate, analytic) = match (game, quantity) {
        (CurveGame::Delegation, Quantity::Win) => (
            montecarlo::estimate_win_prob(&params, strategy, &sim),
            delegation::win_prob_delegation(&params, strategy, &trunc)
                .map_err(numeric_err)?
                .value(),
        ),
        (CurveGame::Delegation, Quantity::Gain) => (
            montecarlo::estimate_voting_gain(&params, strategy, &sim),
            delegation::xi(&params, strategy, &trunc)
                .map_err(numeric_err)?
                .xi,
        ),
        (CurveGame::Delegation, Quantity::Welfare) => (
            montecarlo::estimate_welfare(&params, strategy, Game::Delegation, &sim),
            delegation::welfare_delegation(&params, strategy, &trunc).map_err(numeric_err)?,
        ),
        (CurveGame::Conventional, Quantity::Win) => (
            montecarlo::estimate_win_prob_conventional(&params, strategy, &sim),
            conventional::win_prob_conventional(&params, strategy, &trunc)
                .map_err(numeric_err)?
                .value(),
        ),
        (CurveGame::Conventional, Quantity::Gain) => {
            return Err(Failure::usage(
                "--quantity gain is analytic-only for the conventional game; use win or welfare",
            ))
        }
        (CurveGame::Conventional, Quantity::Welfare) => (
            montecarlo::estimate_welfare(&params, strategy, Game::Conventional, &sim),
            conventional::welfare_conventional(&params, strategy, &trunc).map_err(numeric_err)?,
        ),
    };
    let diff = estimate.mean - analytic;
    let z = if estimate.stderr > 0.0 {
        Some(diff / estimate.stderr)
    } else if diff == 0.0 {
        Some(0.0)
    } else {
        None
    };

    let manifest = Manifest::new(
        "simulate",
        json!({
            "game": game.name(), "n": n, "f": f, "c": c,
            "strategy": strategy, "quantity": quantity.name(),
            "trials": trials, "seed": seed,
        }),
        output,
    );
    let mut csv = String::from("game,quantity,strategy,trials,seed,mean,stderr,analytic,z\n");
    let _ = writeln!(
        csv,
        "{},{},{},{trials},{seed},{},{},{},{}",
        game.name(),
        quantity.name(),
        fmt_num(strategy, output.round),
        fmt_num(estimate.mean, output.round),
        fmt_num(estimate.stderr, output.round),
        fmt_num(analytic, output.round),
        z.map(|z| fmt_num(z, output.round)).unwrap_or_default(),
    );
    let data = json!({
        "game": game.name(),
        "quantity": quantity.name(),
        "strategy": strategy,
        "estimate": serde_json::to_value(estimate).expect("estimate serializes"),
        "analytic": analytic,
        "z": z,
    });
    emit(output, manifest, csv, data)
}

fn cmd_thresholds(
    c: f64,
    delta: f64,
    f: Option<u64>,
    gamma: f64,
    confidence: f64,
    n: Option<f64>,
    output: &OutputOpts,
) -> Result<(), Failure> {
    use votelab::asymptotics;
    let f_star = asymptotics::f_star(c, delta).map_err(usage_err)?;

    let mut d1 = None;
    let mut d2 = None;
    let mut n_lo = None;
    let mut n_hi = None;
    if let Some(f) = f {
        let a = asymptotics::d_star_case1(f, delta, c).map_err(usage_err)?;
        let b = asymptotics::d_star_case2(f, delta, c).map_err(usage_err)?;
        let (lo, hi) = asymptotics::n_thresholds(b, gamma, confidence).map_err(usage_err)?;
        d1 = Some(a);
        d2 = Some(b);
        n_lo = Some(lo);
        n_hi = Some(hi);
    }
    let regime = match (n, f) {
        (Some(n), Some(f)) => {
            let params = GameParams::new(n, f, c).map_err(usage_err)?;
            Some(asymptotics::regime_classify(&params, delta).map_err(numeric_err)?)
        }
        _ => None,
    };

    let manifest = Manifest::new(
        "thresholds",
        json!({
            "c": c, "delta": delta, "f": f, "gamma": gamma,
            "confidence": confidence, "n": n,
        }),
        output,
    );
    let opt = |v: Option<f64>| v.map(|x| fmt_num(x, output.round)).unwrap_or_default();
    let regime_name = regime
        .map(|r| {
            serde_json::to_value(r)
                .expect("serializes")
                .as_str()
                .unwrap_or("unknown")
                .to_string()
        })
        .unwrap_or_default();
    let mut csv = String::from("f_star,d_star_case1,d_star_case2,n_lo,n_hi,regime\n");
    let _ = writeln!(
        csv,
        "{f_star},{},{},{},{},{regime_name}",
        opt(d1),
        opt(d2),
        opt(n_lo),
        opt(n_hi),
    );
    let data = json!({
        "f_star": f_star,
        "d_star_case1": d1,
        "d_star_case2": d2,
        "n_lo": n_lo,
        "n_hi": n_hi,
        "regime": regime,
    });
    emit(output, manifest, csv, data)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Solve { n, f, c, game, output } => cmd_solve(n, f, c, game, &output),
        Cmd::Table { n, c, f_min, f_max, output } => cmd_table(n, c, f_min, f_max, &output),
        Cmd::Curve { game, n, f, c, grid, output } => cmd_curve(game, n, f, c, grid, &output),
        Cmd::Simulate {
            game, n, f, c, gamma, alpha, quantity, trials, seed, output,
        } => cmd_simulate(game, n, f, c, gamma, alpha, quantity, trials, seed, &output),
        Cmd::Thresholds {
            c, delta, f, gamma, confidence, n, output,
        } => cmd_thresholds(c, delta, f, gamma, confidence, n, &output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

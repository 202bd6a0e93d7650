//! Command-line harness for the keep-alive cache policy engine.
//!
//! Subcommands compose through files: `simulate` writes arrival CSVs that
//! `fit`, `gof`, `window`, and `evaluate` consume; `sweep` runs the
//! fixed-vs-optimal cost-curve experiment; `pareto` runs the full trace
//! protocol (fit day / test day / evaluation day) over a cold-start cost grid
//! and emits Pareto curves and savings summaries.
//!
//! Every run echoes its fully resolved configuration into its JSON output.
//! A `--config` JSON file can supply any flag; explicit flags override it.
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use keepalive_cli::azure::{load_trace, Placement, TraceSchema};
use keepalive_cli::dataset::{read_dataset, write_dataset};
use keepalive_cli::io::{emit_json, read_history, write_history};
use keepalive_cli::parallel::map_indexed;
use keepalive_cli::synth::{build_synth_dataset, read_synth_spec};
use keepalive_cli::{CliError, CliResult};
use keepalive_core::estimation::{self, FitOptions};
use keepalive_core::evaluator::{
    assemble_experiment, cost_curve_experiment, prepare_app, replay, AppPrep, PolicyKind,
    SavingsSummary, TraceExperimentConfig,
};
use keepalive_core::point_process::{simulate, HawkesParams, SimConfig, DEFAULT_EVENT_CAP};
use keepalive_core::policy::{
    empty_history_window, optimal_hawkes_window, window_bounds, CostParams, OptimalWindow,
    PolicySpec,
};
use keepalive_core::trace::TraceDataset;

#[derive(Parser)]
#[command(
    name = "keepalive",
    about = "Keep-alive cache policy engine: optimal and approximate caching windows for Poisson/Hawkes arrival streams, with trace-driven evaluation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a Hawkes/Poisson arrival stream to a CSV of timestamps.
    Simulate(SimulateArgs),
    /// Compute the optimal keep-alive window for a history, with bounds.
    Window(WindowArgs),
    /// Fit Hawkes parameters to an arrival CSV by maximum likelihood.
    Fit(FitArgs),
    /// Goodness of fit: random-time-change residuals + KS test.
    Gof(GofArgs),
    /// Cost-curve experiment: fixed-TTL grid vs optimal vs optimized-TTL.
    Sweep(SweepArgs),
    /// Replay one policy against an arrival CSV.
    Evaluate(EvaluateArgs),
    /// Full trace protocol: fit/test/evaluate days, Pareto curves, savings.
    Pareto(ParetoArgs),
}

/// Overlays CLI flags (non-null fields win) onto an optional JSON config
/// file, yielding the merged argument set.
fn merge_config<T: Serialize + DeserializeOwned>(args: T, config: Option<&Path>) -> CliResult<T> {
    let Some(path) = config else {
        return Ok(args);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
    let mut base: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let overlay = serde_json::to_value(&args)
        .map_err(|e| CliError::Config(format!("serializing flags: {e}")))?;
    match (&mut base, overlay) {
        (serde_json::Value::Object(base_map), serde_json::Value::Object(overlay_map)) => {
            for (key, value) in overlay_map {
                if !value.is_null() {
                    base_map.insert(key, value);
                }
            }
        }
        _ => {
            return Err(CliError::Config(format!(
                "{}: config must be a JSON object",
                path.display()
            )))
        }
    }
    serde_json::from_value(base).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn require<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Config(format!("missing required --{flag}")))
}

fn parse_f64_list(text: &str, flag: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Config(format!("--{flag}: {s:?} is not a number")))
        })
        .collect()
}

fn parse_u32_list(text: &str, flag: &str) -> CliResult<Vec<u32>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u32>()
                .map_err(|_| CliError::Config(format!("--{flag}: {s:?} is not an integer")))
        })
        .collect()
}

fn params_from_flags(
    lambda0: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
) -> CliResult<HawkesParams> {
    Ok(HawkesParams::new(
        require(lambda0, "lambda0")?,
        require(alpha, "alpha")?,
        require(beta, "beta")?,
    )?)
}

/// The `params` block of a `fit` output file.
#[derive(Deserialize)]
struct StoredFit {
    params: StoredParams,
}

#[derive(Deserialize)]
struct StoredParams {
    lambda0: f64,
    alpha: f64,
    beta: f64,
}

fn params_from_file(path: &Path) -> CliResult<HawkesParams> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("reading {}: {e}", path.display())))?;
    let stored: StoredFit = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(HawkesParams::new(
        stored.params.lambda0,
        stored.params.alpha,
        stored.params.beta,
    )?)
}

fn resolve_params(
    params_from: Option<&Path>,
    lambda0: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
) -> CliResult<HawkesParams> {
    match params_from {
        Some(path) => params_from_file(path),
        None => params_from_flags(lambda0, alpha, beta),
    }
}

fn params_echo(p: &HawkesParams) -> serde_json::Value {
    json!({"lambda0": p.lambda0, "alpha": p.alpha, "beta": p.beta})
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct SimulateArgs {
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Stop after this many events.
    #[arg(long)]
    events: Option<usize>,
    /// Stop at this time horizon (same time unit as the rates).
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Safety cap on simulated events.
    #[arg(long)]
    cap: Option<usize>,
    /// Output CSV of timestamps.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    #[serde(skip_serializing, default)]
    config: Option<PathBuf>,
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let config_path = args.config.clone();
    let args = merge_config(args, config_path.as_deref())?;
    let params = params_from_flags(args.lambda0, args.alpha, args.beta)?;
    let seed = args.seed.unwrap_or(0);
    let cap = args.cap.unwrap_or(DEFAULT_EVENT_CAP);
    let cfg = match (args.events, args.horizon) {
        (Some(n), None) => SimConfig::events(seed, n)?,
        (None, Some(t)) => SimConfig::horizon(seed, t)?,
        _ => {
            return Err(CliError::Config(
                "exactly one of --events or --horizon is required".into(),
            ))
        }
    }
    .with_cap(cap);
    let out = require(args.out, "out")?;
    let history = simulate(&params, &cfg)?;
    write_history(&out, &history)?;
    emit_json(
        None,
        &json!({
            "command": "simulate",
            "config": {
                "params": params_echo(&params),
                "events": args.events,
                "horizon": args.horizon,
                "seed": seed,
                "cap": cap,
                "out": out,
            },
            "events_written": history.len(),
        }),
    )
}

// ---------------------------------------------------------------------------
// window
// ---------------------------------------------------------------------------

#[derive(Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct WindowArgs {
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Keep cost per unit time.
    #[arg(long)]
    cp: Option<f64>,
    /// Cold-start cost.
    #[arg(long)]
    ccs: Option<f64>,
    /// Arrival CSV to condition on.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Compute the empty-history window instead of reading a history.
    #[arg(long, default_value_t = false)]
    #[serde(default)]
    empty: bool,
    #[arg(long)]
    truncation: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing, default)]
    config: Option<PathBuf>,
}

fn window_echo(window: &OptimalWindow) -> serde_json::Value {
    match window {
        OptimalWindow::Zero => json!({"kind": "zero", "tau": 0.0}),
        OptimalWindow::Finite(tau) => json!({"kind": "finite", "tau": tau}),
        OptimalWindow::Infinite => json!({"kind": "infinite", "tau": null}),
    }
}

fn cmd_window(args: WindowArgs) -> CliResult<()> {
    let config_path = args.config.clone();
    let args = merge_config(args, config_path.as_deref())?;
    let params = params_from_flags(args.lambda0, args.alpha, args.beta)?;
    let costs = CostParams::new(require(args.cp, "cp")?, require(args.ccs, "ccs")?)?;
    let truncation = args.truncation.unwrap_or(200);
    let (window, bounds, history_len) = match (&args.history, args.empty) {
        (Some(path), false) => {
            let history = read_history(path)?;
            if history.is_empty() {
                return Err(CliError::Data(format!(
                    "{}: history is empty; pass --empty for the unconditioned window",
                    path.display()
                )));
            }
            let window = optimal_hawkes_window(&params, &history, &costs, truncation)?;
            let bounds = window_bounds(&params, &history, &costs).ok();
            (window, bounds, history.len())
        }
        (None, true) => (empty_history_window(&params, &costs), None, 0),
        _ => {
            return Err(CliError::Config(
                "exactly one of --history or --empty is required".into(),
            ))
        }
    };
    emit_json(
        args.out.as_deref(),
        &json!({
            "command": "window",
            "config": {
                "params": params_echo(&params),
                "cp": costs.keep_rate,
                "ccs": costs.cold_start,
                "truncation": truncation,
                "history": args.history,
                "empty": args.empty,
                "history_len": history_len,
            },
            "window": window_echo(&window),
            "bounds": bounds.map(|b| json!({
                "lower": b.lower,
                "upper": b.upper,
                "delta": b.delta,
            })),
        }),
    )
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

#[derive(Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FitArgs {
    /// Arrival CSV to fit.
    #[arg(long)]
    history: Option<PathBuf>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing, default)]
    config: Option<PathBuf>,
}

fn cmd_fit(args: FitArgs) -> CliResult<()> {
    let config_path = args.config.clone();
    let args = merge_config(args, config_path.as_deref())?;
    let history_path = require(args.history, "history")?;
    let history = read_history(&history_path)?;
    let defaults = FitOptions::default();
    let opts = FitOptions {
        restarts: args.restarts.unwrap_or(defaults.restarts),
        max_iterations: args.max_iterations.unwrap_or(defaults.max_iterations),
        seed: args.seed.unwrap_or(defaults.seed),
        ..defaults
    };
    let init = estimation::default_init(&history)?;
    let result = estimation::fit(&history, &init, &opts)?;
    emit_json(
        args.out.as_deref(),
        &json!({
            "command": "fit",
            "config": {
                "history": history_path,
                "n_arrivals": history.len(),
                "restarts": opts.restarts,
                "max_iterations": opts.max_iterations,
                "seed": opts.seed,
                "init": params_echo(&init),
            },
            "params": params_echo(&result.params),
            "nll": result.nll,
            "converged": result.converged,
            "iterations": result.iterations,
        }),
    )
}

// ---------------------------------------------------------------------------
// gof
// ---------------------------------------------------------------------------

#[derive(Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct GofArgs {
    /// Arrival CSV to test.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Take parameters from a `fit` output file.
    #[arg(long)]
    params_from: Option<PathBuf>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing, default)]
    config: Option<PathBuf>,
}

fn cmd_gof(args: GofArgs) -> CliResult<()> {
    let config_path = args.config.clone();
    let args = merge_config(args, config_path.as_deref())?;
    let history_path = require(args.history, "history")?;
    let history = read_history(&history_path)?;
    let params = resolve_params(
        args.params_from.as_deref(),
        args.lambda0,
        args.alpha,
        args.beta,
    )?;
    let res = estimation::residuals(&params, &history)?;
    let gof = estimation::ks_test_exp1(&res)?;
    emit_json(
        args.out.as_deref(),
        &json!({
            "command": "gof",
            "config": {
                "history": history_path,
                "params": params_echo(&params),
                "params_from": args.params_from,
            },
            "ks_statistic": gof.statistic,
            "p_value": gof.p_value,
            "n_residuals": gof.n_residuals,
        }),
    )
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct SweepArgs {
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    cp: Option<f64>,
    #[arg(long)]
    ccs: Option<f64>,
    /// Events per realization.
    #[arg(long)]
    events: Option<usize>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Explicit comma-separated TTL grid; otherwise an even grid is built.
    #[arg(long)]
    ttl_grid: Option<String>,
    /// Largest TTL of the built grid (default 3 * ccs / cp).
    #[arg(long)]
    ttl_max: Option<f64>,
    /// Number of points of the built grid.
    #[arg(long)]
    ttl_steps: Option<usize>,
    #[arg(long)]
    truncation: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (ttl, mean_cost per row).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary JSON path (stdout when omitted).
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing, default)]
    config: Option<PathBuf>,
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let config_path = args.config.clone();
    let args = merge_config(args, config_path.as_deref())?;
    let params = params_from_flags(args.lambda0, args.alpha, args.beta)?;
    let costs = CostParams::new(require(args.cp, "cp")?, require(args.ccs, "ccs")?)?;
    let events = args.events.unwrap_or(600);
    let realizations = args.realizations.unwrap_or(100);
    let truncation = args.truncation.unwrap_or(200);
    let seed = args.seed.unwrap_or(0);
    let grid: Vec<f64> = match &args.ttl_grid {
        Some(text) => parse_f64_list(text, "ttl-grid")?,
        None => {
            let steps = args.ttl_steps.unwrap_or(50).max(2);
            let max = args
                .ttl_max
                .unwrap_or(3.0 * costs.cold_start / costs.keep_rate);
            (0..steps)
                .map(|i| max * i as f64 / (steps - 1) as f64)
                .collect()
        }
    };
    let out = require(args.out, "out")?;
    let curve = cost_curve_experiment(
        &params,
        &costs,
        &grid,
        events,
        realizations,
        truncation,
        seed,
    )?;
    let mut csv = String::from("ttl,mean_cost\n");
    for (ttl, cost) in curve.ttl_grid.iter().zip(&curve.fixed_mean_costs) {
        csv.push_str(&format!("{ttl},{cost}\n"));
    }
    fs::write(&out, csv).map_err(|e| CliError::Data(format!("writing {}: {e}", out.display())))?;
    emit_json(
        args.summary.as_deref(),
        &json!({
            "command": "sweep",
            "config": {
                "params": params_echo(&params),
                "cp": costs.keep_rate,
                "ccs": costs.cold_start,
                "events": events,
                "realizations": realizations,
                "truncation": truncation,
                "seed": seed,
                "ttl_grid_len": grid.len(),
                "out": out,
            },
            "optimal_mean_cost": curve.optimal_mean_cost,
            "optimized_ttl": float_or_null(curve.optimized_ttl),
            "optimized_ttl_mean_cost": curve.optimized_ttl_mean_cost,
            "approx_ttl": float_or_null(curve.approx_ttl),
            "approx_mean_cost": curve.approx_mean_cost,
            "n_gaps": curve.n_gaps,
        }),
    )
}

/// JSON has no infinity; emit null for unbounded windows.
fn float_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

#[derive(Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct EvaluateArgs {
    /// Arrival CSV to replay.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Policy: fixed:<ttl> | prewarm:<delay>:<ttl> | optimal | optimized-ttl
    /// | approx | offline
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    cp: Option<f64>,
    #[arg(long)]
    ccs: Option<f64>,
    #[arg(long)]
    params_from: Option<PathBuf>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// End of the accounting day (same unit as the history).
    #[arg(long)]
    day_end: Option<f64>,
    #[arg(long)]
    truncation: Option<usize>,
    /// Seed of the optimized-TTL backing simulation.
    #[arg(long)]
    seed: Option<u64>,
    /// Horizon of the optimized-TTL backing simulation.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing, default)]
    config: Option<PathBuf>,
}

fn parse_policy(
    text: &str,
    truncation: usize,
    seed: u64,
    horizon: f64,
    realizations: usize,
) -> CliResult<PolicySpec> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::Config(format!("unknown policy spec {text:?}"));
    match parts.as_slice() {
        ["fixed", ttl] => Ok(PolicySpec::FixedTtl(ttl.parse().map_err(|_| bad())?)),
        ["prewarm", delay, ttl] => Ok(PolicySpec::PreWarm {
            delay: delay.parse().map_err(|_| bad())?,
            ttl: ttl.parse().map_err(|_| bad())?,
        }),
        ["optimal"] => Ok(PolicySpec::OptimalHawkes { truncation }),
        ["optimized-ttl"] => Ok(PolicySpec::OptimizedTtl {
            sim: SimConfig::horizon(seed, horizon)?,
            truncation,
            realizations,
        }),
        ["approx"] => Ok(PolicySpec::Approx),
        ["offline"] => Ok(PolicySpec::OfflineOptimal),
        _ => Err(bad()),
    }
}

fn cmd_evaluate(args: EvaluateArgs) -> CliResult<()> {
    let config_path = args.config.clone();
    let args = merge_config(args, config_path.as_deref())?;
    let history_path = require(args.history, "history")?;
    let history = read_history(&history_path)?;
    let costs = CostParams::new(require(args.cp, "cp")?, require(args.ccs, "ccs")?)?;
    let truncation = args.truncation.unwrap_or(200);
    let seed = args.seed.unwrap_or(0);
    let horizon = args.horizon.unwrap_or(1440.0);
    let realizations = args.realizations.unwrap_or(1);
    let day_end = args.day_end.unwrap_or(1440.0);
    let policy_text = require(args.policy, "policy")?;
    let policy = parse_policy(&policy_text, truncation, seed, horizon, realizations)?;
    let params = if policy.needs_params() {
        Some(resolve_params(
            args.params_from.as_deref(),
            args.lambda0,
            args.alpha,
            args.beta,
        )?)
    } else {
        None
    };
    let metrics = replay(&history, &policy, &costs, params.as_ref(), day_end)?;
    emit_json(
        args.out.as_deref(),
        &json!({
            "command": "evaluate",
            "config": {
                "history": history_path,
                "policy": policy_text,
                "cp": costs.keep_rate,
                "ccs": costs.cold_start,
                "params": params.as_ref().map(params_echo),
                "day_end": day_end,
                "truncation": truncation,
                "seed": seed,
                "horizon": horizon,
                "realizations": realizations,
            },
            "cold_starts": metrics.cold_starts,
            "wasted_memory_time": metrics.wasted_memory_time,
            "warm_time_before_hits": metrics.warm_time_before_hits,
            "total_cost": metrics.total_cost(),
            "n_cost_entries": metrics.per_interarrival_costs.len(),
        }),
    )
}

// ---------------------------------------------------------------------------
// pareto
// ---------------------------------------------------------------------------

#[derive(Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ParetoArgs {
    /// Per-day trace CSVs in the production schema, one per day.
    #[arg(long, num_args = 1..)]
    trace: Option<Vec<PathBuf>>,
    /// Day numbers matching the --trace files, e.g. 7,8,9.
    #[arg(long)]
    days: Option<String>,
    /// Cached dataset JSON (written by --dump-dataset).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Synthetic dataset spec JSON.
    #[arg(long)]
    synth: Option<PathBuf>,
    #[arg(long)]
    fit_day: Option<u32>,
    #[arg(long)]
    gof_day: Option<u32>,
    #[arg(long)]
    eval_day: Option<u32>,
    /// Comma-separated cold-start cost grid.
    #[arg(long)]
    ccs_grid: Option<String>,
    /// Fraction of apps (best goodness of fit) treated with model policies.
    #[arg(long)]
    treat_frac: Option<f64>,
    #[arg(long)]
    truncation: Option<usize>,
    /// Default fixed window for untreated apps, minutes.
    #[arg(long)]
    default_ttl: Option<f64>,
    /// Keep cost per minute.
    #[arg(long)]
    cp: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread cap for per-app preparation.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory for curves.csv and summary.json.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Also write the loaded/generated dataset as JSON.
    #[arg(long)]
    dump_dataset: Option<PathBuf>,
    /// Sub-minute placement when expanding trace bins: mid | uniform.
    #[arg(long)]
    placement: Option<String>,
    /// Application id column of the trace schema.
    #[arg(long)]
    app_column: Option<String>,
    /// Function id column of the trace schema.
    #[arg(long)]
    function_column: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing, default)]
    config: Option<PathBuf>,
}

fn cmd_pareto(args: ParetoArgs) -> CliResult<()> {
    let config_path = args.config.clone();
    let args = merge_config(args, config_path.as_deref())?;
    let seed = args.seed.unwrap_or(0);
    let placement = match args.placement.as_deref() {
        None | Some("mid") => Placement::Mid,
        Some("uniform") => Placement::Uniform,
        Some(other) => {
            return Err(CliError::Config(format!(
                "--placement must be mid or uniform, got {other:?}"
            )))
        }
    };

    let sources = [
        args.trace.is_some(),
        args.dataset.is_some(),
        args.synth.is_some(),
    ];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(CliError::Config(
            "exactly one of --trace, --dataset, or --synth is required".into(),
        ));
    }
    let dataset: TraceDataset = if let Some(traces) = &args.trace {
        let days = parse_u32_list(&require(args.days.clone(), "days")?, "days")?;
        if days.len() != traces.len() {
            return Err(CliError::Config(format!(
                "{} trace files but {} day numbers",
                traces.len(),
                days.len()
            )));
        }
        let schema = TraceSchema {
            app_column: args.app_column.clone().unwrap_or_else(|| "HashApp".into()),
            function_column: args
                .function_column
                .clone()
                .unwrap_or_else(|| "HashFunction".into()),
        };
        let pairs: Vec<(u32, &Path)> = days
            .iter()
            .copied()
            .zip(traces.iter().map(PathBuf::as_path))
            .collect();
        load_trace(&pairs, &schema, placement, seed)?
    } else if let Some(path) = &args.dataset {
        read_dataset(path)?
    } else {
        build_synth_dataset(&read_synth_spec(args.synth.as_ref().unwrap())?)?
    };
    if let Some(path) = &args.dump_dataset {
        write_dataset(path, &dataset)?;
    }

    let mut config = TraceExperimentConfig::standard(
        require(args.fit_day, "fit-day")?,
        require(args.gof_day, "gof-day")?,
        require(args.eval_day, "eval-day")?,
        seed,
    );
    if let Some(grid) = &args.ccs_grid {
        config.cold_start_grid = parse_f64_list(grid, "ccs-grid")?;
    }
    if let Some(frac) = args.treat_frac {
        config.treat_fraction = frac;
    }
    if let Some(truncation) = args.truncation {
        config.truncation = truncation;
    }
    if let Some(ttl) = args.default_ttl {
        config.default_ttl = ttl;
    }
    if let Some(cp) = args.cp {
        config.keep_rate = cp;
    }

    let threads = args
        .threads
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .max(1);
    let app_ids: Vec<String> = dataset.app_ids().map(String::from).collect();
    let preps: Vec<AppPrep> = map_indexed(app_ids.len(), threads, |i| {
        prepare_app(&dataset, &app_ids[i], i as u64, &config)
    });
    let result = assemble_experiment(&dataset, &config, &preps)?;

    let out_dir = require(args.out_dir, "out-dir")?;
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Data(format!("creating {}: {e}", out_dir.display())))?;

    let mut csv = String::from(
        "policy,population,cold_start_cost,avg_cold_starts_per_app,normalized_wasted_memory\n",
    );
    for curves in &result.curves {
        for (population, points) in [("treated", &curves.treated), ("all", &curves.all)] {
            for p in points {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    curves.policy.name(),
                    population,
                    p.cold_start_cost,
                    p.avg_cold_starts_per_app,
                    p.normalized_wasted_memory
                ));
            }
        }
    }
    let curves_path = out_dir.join("curves.csv");
    fs::write(&curves_path, csv)
        .map_err(|e| CliError::Data(format!("writing {}: {e}", curves_path.display())))?;

    let savings_block = |list: &[(PolicyKind, SavingsSummary)]| {
        let mut map = serde_json::Map::new();
        for (kind, s) in list {
            map.insert(
                kind.name().to_string(),
                json!({
                    "avg_cold_start_savings": s.avg_cold_start_savings,
                    "avg_memory_savings": s.avg_memory_savings,
                    "curves_cross": s.curves_cross,
                }),
            );
        }
        serde_json::Value::Object(map)
    };
    emit_json(
        Some(&out_dir.join("summary.json")),
        &json!({
            "command": "pareto",
            "config": {
                "fit_day": config.fit_day,
                "gof_day": config.gof_day,
                "eval_day": config.eval_day,
                "ccs_grid": config.cold_start_grid,
                "treat_frac": config.treat_fraction,
                "truncation": config.truncation,
                "default_ttl": config.default_ttl,
                "cp": config.keep_rate,
                "seed": config.seed,
                "threads": threads,
                "placement": if placement == Placement::Mid { "mid" } else { "uniform" },
                "source": {
                    "trace": args.trace,
                    "days": args.days,
                    "dataset": args.dataset,
                    "synth": args.synth,
                },
            },
            "n_apps": result.n_apps,
            "n_eval_apps": result.n_eval_apps,
            "n_treated": result.n_treated,
            "n_untreatable": result.n_untreatable,
            "n_ttl_fallbacks": result.n_ttl_fallbacks,
            "savings": {
                "treated": savings_block(&result.savings_treated),
                "all": savings_block(&result.savings_all),
            },
            "curves_csv": curves_path,
        }),
    )
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Window(args) => cmd_window(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Gof(args) => cmd_gof(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Pareto(args) => cmd_pareto(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            err.exit_code()
        }
    }
}

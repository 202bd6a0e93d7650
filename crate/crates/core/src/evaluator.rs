//! Policy replay and experiment harness.
//!
//! [`replay`] walks an arrival series under a policy and accounts cold
//! starts, warm time, and wasted memory time: a warm hit's cached time counts
//! as warm time, a miss's scheduled cached time counts as waste, and whatever
//! the schedule would keep cached after the last arrival is cut at the day
//! end and counted as waste. The first invocation of a series is always a
//! cold start.
//!
//! [`cost_curve_experiment`] reproduces the fixed-vs-optimal cost curves:
//! mean per-inter-arrival cost of fixed windows over a TTL grid against the
//! history-dependent optimal policy, with the optimized-TTL point (the mean
//! optimal window across the same realizations) and the approximate window.
//!
//! [`trace_experiment`] runs the full trace protocol: fit each application on
//! one day, test goodness of fit on another, treat the best-fitting fraction
//! with a model-based policy, replay everything on a third day over a grid of
//! cold-start costs, and emit Pareto trade-off curves (average cold starts
//! per app vs wasted memory normalized to the default fixed policy) plus
//! area-based savings summaries.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::cost::{realized_cost, RealizedOutcome};
use crate::estimation::{default_init, fit, ks_test_exp1, residuals, FitOptions, FitResult, GofResult};
use crate::point_process::{simulate, truncated_weight, HawkesParams, History, SimConfig};
use crate::policy::{
    optimal_window_from_weight, optimized_ttl, tau_approx, tau_fixed, CostParams, OptimalWindow,
    PolicySpec, WindowSchedule,
};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Replay accounting for one arrival series.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayMetrics {
    /// Misses, including the first invocation.
    pub cold_starts: u64,
    /// Cached time that did not culminate in a hit, including the tail after
    /// the last arrival up to the day end.
    pub wasted_memory_time: f64,
    /// Cached time immediately preceding warm hits.
    pub warm_time_before_hits: f64,
    /// Cost entries: the first invocation's cold start, one entry per
    /// inter-arrival, and the trailing keep cost after the last arrival.
    pub per_interarrival_costs: Vec<f64>,
}

impl ReplayMetrics {
    fn empty() -> Self {
        ReplayMetrics {
            cold_starts: 0,
            wasted_memory_time: 0.0,
            warm_time_before_hits: 0.0,
            per_interarrival_costs: Vec::new(),
        }
    }

    /// Sum of the per-inter-arrival cost entries.
    pub fn total_cost(&self) -> f64 {
        self.per_interarrival_costs.iter().sum()
    }
}

/// How a policy materializes per inter-arrival during a day replay.
enum DayPolicy<'a> {
    /// The same schedule after every arrival.
    Schedule(WindowSchedule),
    /// Optimal single window recomputed from the running history; `weights[i]`
    /// is the jump-inclusive truncated excitation weight at arrival `i`.
    Optimal {
        params: &'a HawkesParams,
        weights: &'a [f64],
    },
    /// Clairvoyant per-gap rule.
    Offline,
}

/// Realized outcome of a single leading window `[0, len]`; `len = 0` means
/// never cached and an infinite `len` always warm. Agrees with
/// `realized_cost` on the equivalent schedule.
fn single_window_outcome(x: f64, len: f64, costs: &CostParams) -> RealizedOutcome {
    if x <= len {
        RealizedOutcome {
            cost: costs.keep_rate * x,
            cold_start: false,
            cached_time: x,
        }
    } else {
        RealizedOutcome {
            cost: costs.keep_rate * len + costs.cold_start,
            cold_start: true,
            cached_time: len,
        }
    }
}

fn replay_day(times: &[f64], day_end: f64, policy: &DayPolicy, costs: &CostParams) -> ReplayMetrics {
    let mut metrics = ReplayMetrics::empty();
    if times.is_empty() {
        return metrics;
    }
    metrics.cold_starts = 1;
    metrics.per_interarrival_costs.push(costs.cold_start);
    for i in 1..times.len() {
        let x = times[i] - times[i - 1];
        let outcome = match policy {
            DayPolicy::Offline => {
                if costs.keep_rate * x >= costs.cold_start {
                    RealizedOutcome {
                        cost: costs.cold_start,
                        cold_start: true,
                        cached_time: 0.0,
                    }
                } else {
                    RealizedOutcome {
                        cost: costs.keep_rate * x,
                        cold_start: false,
                        cached_time: x,
                    }
                }
            }
            DayPolicy::Schedule(schedule) => realized_cost(x, schedule, costs),
            DayPolicy::Optimal { params, weights } => {
                let len = optimal_window_from_weight(params, weights[i - 1], costs).length();
                single_window_outcome(x, len, costs)
            }
        };
        metrics.per_interarrival_costs.push(outcome.cost);
        if outcome.cold_start {
            metrics.cold_starts += 1;
            metrics.wasted_memory_time += outcome.cached_time;
        } else {
            metrics.warm_time_before_hits += outcome.cached_time;
        }
    }
    // Open schedule after the last arrival: waste until the day ends.
    let remaining = day_end - times[times.len() - 1];
    let trailing = match policy {
        DayPolicy::Offline => 0.0,
        DayPolicy::Schedule(schedule) => schedule.cached_time_until(remaining),
        DayPolicy::Optimal { params, weights } => {
            let len = optimal_window_from_weight(params, weights[times.len() - 1], costs).length();
            len.min(remaining)
        }
    };
    metrics.wasted_memory_time += trailing;
    metrics
        .per_interarrival_costs
        .push(costs.keep_rate * trailing);
    metrics
}

/// Replays one arrival series under a policy. History-dependent policies
/// (`OptimalHawkes`, `OptimizedTtl`, `Approx`) require process parameters.
/// `day_end` caps any schedule still open after the last arrival.
pub fn replay(
    arrivals: &History,
    policy: &PolicySpec,
    costs: &CostParams,
    params: Option<&HawkesParams>,
    day_end: f64,
) -> Result<ReplayMetrics> {
    if policy.needs_params() && params.is_none() {
        return Err(Error::Config(
            "this policy needs Hawkes parameters; none were given".into(),
        ));
    }
    if let Some(last) = arrivals.last() {
        if day_end < last {
            return Err(Error::Domain(format!(
                "day end {day_end} precedes the last arrival {last}"
            )));
        }
    }
    let times = arrivals.times();
    let weights_for = |truncation: usize| -> Vec<f64> {
        (0..times.len())
            .map(|i| truncated_weight(params.unwrap().beta, &times[..=i], truncation))
            .collect()
    };
    let metrics = match policy {
        PolicySpec::FixedTtl(ttl) => {
            if *ttl < 0.0 || ttl.is_nan() {
                return Err(Error::Domain(format!("ttl must be >= 0, got {ttl}")));
            }
            replay_day(
                times,
                day_end,
                &DayPolicy::Schedule(WindowSchedule::fixed_ttl(*ttl)),
                costs,
            )
        }
        PolicySpec::PreWarm { delay, ttl } => replay_day(
            times,
            day_end,
            &DayPolicy::Schedule(WindowSchedule::pre_warm(*delay, *ttl)?),
            costs,
        ),
        PolicySpec::Windows(schedule) => {
            replay_day(times, day_end, &DayPolicy::Schedule(schedule.clone()), costs)
        }
        PolicySpec::OptimalHawkes { truncation } => {
            let weights = weights_for(*truncation);
            replay_day(
                times,
                day_end,
                &DayPolicy::Optimal {
                    params: params.unwrap(),
                    weights: &weights,
                },
                costs,
            )
        }
        PolicySpec::OptimizedTtl {
            sim,
            truncation,
            realizations,
        } => {
            let ttl = optimized_ttl(params.unwrap(), costs, sim, *truncation, *realizations)?;
            replay_day(
                times,
                day_end,
                &DayPolicy::Schedule(WindowSchedule::fixed_ttl(ttl)),
                costs,
            )
        }
        PolicySpec::Approx => replay_day(
            times,
            day_end,
            &DayPolicy::Schedule(WindowSchedule::fixed_ttl(tau_approx(
                params.unwrap(),
                costs,
            ))),
            costs,
        ),
        PolicySpec::OfflineOptimal => replay_day(times, day_end, &DayPolicy::Offline, costs),
    };
    Ok(metrics)
}

/// Cost-curve experiment output: per-inter-arrival mean costs of the fixed
/// policy over a TTL grid, the optimal policy, the optimized-TTL window, and
/// the approximate window, all over the same simulated realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct CostCurve {
    pub ttl_grid: Vec<f64>,
    pub fixed_mean_costs: Vec<f64>,
    pub optimal_mean_cost: f64,
    /// Mean optimal window pooled across all per-arrival decisions (zero
    /// windows count as 0; any infinite window forces infinity).
    pub optimized_ttl: f64,
    pub optimized_ttl_mean_cost: f64,
    pub approx_ttl: f64,
    pub approx_mean_cost: f64,
    pub n_gaps: usize,
}

/// Cost of a fixed window of length `ttl` on a gap of length `x`.
fn fixed_window_cost(x: f64, ttl: f64, costs: &CostParams) -> f64 {
    if x <= ttl {
        costs.keep_rate * x
    } else {
        costs.keep_rate * ttl + costs.cold_start
    }
}

/// Simulates `n_realizations` runs of `n_events` arrivals each and evaluates
/// per-inter-arrival costs of every policy family on the pooled gaps.
pub fn cost_curve_experiment(
    params: &HawkesParams,
    costs: &CostParams,
    ttl_grid: &[f64],
    n_events: usize,
    n_realizations: usize,
    truncation: usize,
    seed: u64,
) -> Result<CostCurve> {
    if ttl_grid.is_empty() || ttl_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Domain("ttl grid must be nonnegative values".into()));
    }
    if n_events < 2 || n_realizations < 1 {
        return Err(Error::Domain(
            "need at least 2 events and 1 realization".into(),
        ));
    }
    let mut gaps: Vec<f64> = Vec::with_capacity(n_realizations * (n_events - 1));
    let mut optimal_cost_sum = 0.0;
    let mut window_sum = 0.0;
    let mut window_count = 0usize;
    let mut any_infinite = false;
    for r in 0..n_realizations {
        let cfg = SimConfig::events(derive_seed(seed, r as u64), n_events)?;
        let realization = simulate(params, &cfg)?;
        let times = realization.times();
        for m in 1..times.len() {
            let x = times[m] - times[m - 1];
            let weight = truncated_weight(params.beta, &times[..m], truncation);
            let window = optimal_window_from_weight(params, weight, costs);
            match window {
                OptimalWindow::Infinite => any_infinite = true,
                OptimalWindow::Zero => {}
                OptimalWindow::Finite(tau) => window_sum += tau,
            }
            window_count += 1;
            optimal_cost_sum += single_window_outcome(x, window.length(), costs).cost;
            gaps.push(x);
        }
    }
    let n_gaps = gaps.len();
    let mean_over_gaps = |ttl: f64| -> f64 {
        gaps.iter()
            .map(|&x| fixed_window_cost(x, ttl, costs))
            .sum::<f64>()
            / n_gaps as f64
    };
    let optimized = if any_infinite {
        f64::INFINITY
    } else {
        window_sum / window_count as f64
    };
    let approx = tau_approx(params, costs);
    Ok(CostCurve {
        ttl_grid: ttl_grid.to_vec(),
        fixed_mean_costs: ttl_grid.iter().map(|&t| mean_over_gaps(t)).collect(),
        optimal_mean_cost: optimal_cost_sum / n_gaps as f64,
        optimized_ttl: optimized,
        optimized_ttl_mean_cost: mean_over_gaps(optimized),
        approx_ttl: approx,
        approx_mean_cost: mean_over_gaps(approx),
        n_gaps,
    })
}

/// One point of a Pareto trade-off curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoPoint {
    /// Cold-start cost this point was computed at (the fixed policy uses the
    /// matching window length `cold_start_cost / keep_rate`).
    pub cold_start_cost: f64,
    pub avg_cold_starts_per_app: f64,
    /// Wasted memory time divided by what the default fixed policy wastes on
    /// the same population.
    pub normalized_wasted_memory: f64,
}

/// Area-based improvement of one curve over the fixed baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SavingsSummary {
    /// Area between the curves divided by the normalized-memory extent.
    pub avg_cold_start_savings: f64,
    /// Area between the curves divided by the cold-start extent.
    pub avg_memory_savings: f64,
    /// The curves cross; the reported areas are signed.
    pub curves_cross: bool,
}

/// Piecewise-linear interpolation over points sorted by x.
fn interpolate(points: &[(f64, f64)], x: f64) -> f64 {
    match points.iter().position(|p| p.0 >= x) {
        Some(0) => points[0].1,
        Some(i) => {
            let (x0, y0) = points[i - 1];
            let (x1, y1) = points[i];
            if x1 == x0 {
                y1
            } else {
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
        None => points[points.len() - 1].1,
    }
}

/// Trapezoidal area between the fixed curve and another curve sharing its
/// cold-start-cost grid, divided by the effective axis extents: by the
/// cold-start extent for memory savings and by the memory extent for
/// cold-start savings. Positive when the other curve improves on the fixed
/// one; crossing curves yield a signed area and set the warning flag.
pub fn savings(fixed: &[ParetoPoint], other: &[ParetoPoint]) -> Result<SavingsSummary> {
    if fixed.len() != other.len() || fixed.is_empty() {
        return Err(Error::Domain(
            "curves must be non-empty and share the cost grid".into(),
        ));
    }
    let mut grid_a: Vec<f64> = fixed.iter().map(|p| p.cold_start_cost).collect();
    let mut grid_b: Vec<f64> = other.iter().map(|p| p.cold_start_cost).collect();
    grid_a.sort_by(|a, b| a.total_cmp(b));
    grid_b.sort_by(|a, b| a.total_cmp(b));
    if grid_a != grid_b {
        return Err(Error::Domain("curves use different cost grids".into()));
    }

    let as_xy = |curve: &[ParetoPoint]| -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = curve
            .iter()
            .map(|p| (p.avg_cold_starts_per_app, p.normalized_wasted_memory))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pts
    };
    let f = as_xy(fixed);
    let o = as_xy(other);

    let lo = f[0].0.max(o[0].0);
    let hi = f[f.len() - 1].0.min(o[o.len() - 1].0);
    let mut area = 0.0;
    let mut saw_positive = false;
    let mut saw_negative = false;
    if hi > lo {
        let mut xs: Vec<f64> = f
            .iter()
            .chain(o.iter())
            .map(|p| p.0)
            .filter(|&x| x >= lo && x <= hi)
            .collect();
        xs.push(lo);
        xs.push(hi);
        xs.sort_by(|a, b| a.total_cmp(b));
        xs.dedup();
        let diff_at = |x: f64| interpolate(&f, x) - interpolate(&o, x);
        for w in xs.windows(2) {
            let d0 = diff_at(w[0]);
            let d1 = diff_at(w[1]);
            saw_positive |= d0 > 1e-12 || d1 > 1e-12;
            saw_negative |= d0 < -1e-12 || d1 < -1e-12;
            area += 0.5 * (d0 + d1) * (w[1] - w[0]);
        }
    }

    let x_all: Vec<f64> = f.iter().chain(o.iter()).map(|p| p.0).collect();
    let y_all: Vec<f64> = f.iter().chain(o.iter()).map(|p| p.1).collect();
    let extent = |values: &[f64]| -> f64 {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max - min
    };
    let x_extent = extent(&x_all);
    let y_extent = extent(&y_all);
    Ok(SavingsSummary {
        avg_cold_start_savings: if y_extent > 0.0 { area / y_extent } else { 0.0 },
        avg_memory_savings: if x_extent > 0.0 { area / x_extent } else { 0.0 },
        curves_cross: saw_positive && saw_negative,
    })
}

/// Whether every point of `other` is weakly dominated by some point of
/// `dominant` (no `other` point is strictly better in both axes than the
/// whole dominant curve).
pub fn weakly_dominates(dominant: &[ParetoPoint], other: &[ParetoPoint]) -> bool {
    other.iter().all(|q| {
        dominant.iter().any(|p| {
            p.avg_cold_starts_per_app <= q.avg_cold_starts_per_app + 1e-12
                && p.normalized_wasted_memory <= q.normalized_wasted_memory + 1e-12
        })
    })
}

/// The policy families compared by the trace experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Fixed,
    Optimal,
    OptimizedTtl,
    Approx,
    OfflineOptimal,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Fixed => "fixed",
            PolicyKind::Optimal => "optimal",
            PolicyKind::OptimizedTtl => "optimized_ttl",
            PolicyKind::Approx => "approx",
            PolicyKind::OfflineOptimal => "offline_optimal",
        }
    }
}

/// All compared policies, fixed baseline first.
pub const TRACE_POLICIES: [PolicyKind; 5] = [
    PolicyKind::Fixed,
    PolicyKind::Optimal,
    PolicyKind::OptimizedTtl,
    PolicyKind::Approx,
    PolicyKind::OfflineOptimal,
];

/// Trace protocol configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceExperimentConfig {
    pub fit_day: u32,
    pub gof_day: u32,
    pub eval_day: u32,
    /// Cold-start cost grid; the fixed baseline uses the matching window
    /// lengths.
    pub cold_start_grid: Vec<f64>,
    /// Fraction of applications (by best goodness of fit) treated with the
    /// model-based policies.
    pub treat_fraction: f64,
    pub truncation: usize,
    /// Window of the default fixed policy applied to untreated apps, minutes.
    pub default_ttl: f64,
    /// Keep cost per minute; cold-start costs come from the grid.
    pub keep_rate: f64,
    pub seed: u64,
    pub fit: FitOptions,
    /// Horizon of the per-app simulation behind the optimized-TTL window.
    pub ttl_sim_horizon: f64,
}

impl TraceExperimentConfig {
    /// The standard protocol: fit/test/evaluate on three days, cold-start
    /// grid {5, 10, 20, 30, 45, 60, 90, 120}, top 25% treated, 200-arrival
    /// truncation, 10-minute default window, unit keep rate, and a 1440-minute
    /// optimized-TTL simulation.
    pub fn standard(fit_day: u32, gof_day: u32, eval_day: u32, seed: u64) -> Self {
        TraceExperimentConfig {
            fit_day,
            gof_day,
            eval_day,
            cold_start_grid: alloc::vec![5.0, 10.0, 20.0, 30.0, 45.0, 60.0, 90.0, 120.0],
            treat_fraction: 0.25,
            truncation: 200,
            default_ttl: 10.0,
            keep_rate: 1.0,
            seed,
            fit: FitOptions::default(),
            ttl_sim_horizon: 1440.0,
        }
    }
}

/// Per-application preparation: the fit, its goodness of fit, and the
/// per-arrival weights of the optimized-TTL simulation. Untreatable apps keep
/// `None`s and fall back to the default fixed policy.
#[derive(Debug, Clone)]
pub struct AppPrep {
    pub app_id: String,
    pub index: u64,
    pub fit: Option<FitResult>,
    pub gof: Option<GofResult>,
    pub ttl_sim_weights: Option<Vec<f64>>,
}

impl AppPrep {
    pub fn treatable(&self) -> bool {
        self.fit.is_some() && self.gof.is_some()
    }
}

/// Fits one application on the fit day and tests it on the GOF day. Apps with
/// too little data (fewer than 5 fit-day or 2 GOF-day arrivals) or a failed
/// fit come back untreatable rather than erroring.
pub fn prepare_app(
    dataset: &crate::trace::TraceDataset,
    app_id: &str,
    index: u64,
    config: &TraceExperimentConfig,
) -> AppPrep {
    let mut prep = AppPrep {
        app_id: String::from(app_id),
        index,
        fit: None,
        gof: None,
        ttl_sim_weights: None,
    };
    let fit_arrivals = match dataset.arrivals(app_id, config.fit_day) {
        Some(h) if h.len() >= 5 => h,
        _ => return prep,
    };
    let init = match default_init(fit_arrivals) {
        Ok(init) => init,
        Err(_) => return prep,
    };
    let fit_opts = FitOptions {
        seed: derive_seed(config.seed, index * 4),
        ..config.fit
    };
    let fitted = match fit(fit_arrivals, &init, &fit_opts) {
        Ok(f) => f,
        Err(_) => return prep,
    };
    if let Some(gof_arrivals) = dataset.arrivals(app_id, config.gof_day) {
        if gof_arrivals.len() >= 2 {
            if let Ok(res) = residuals(&fitted.params, gof_arrivals) {
                prep.gof = ks_test_exp1(&res).ok();
            }
        }
    }
    // One simulated realization per app backs its optimized-TTL windows for
    // every cold-start cost.
    let sim_seed = derive_seed(config.seed, index * 4 + 1);
    if let Ok(cfg) = SimConfig::horizon(sim_seed, config.ttl_sim_horizon) {
        if let Ok(sim) = simulate(&fitted.params, &cfg) {
            if sim.len() >= 2 {
                let times = sim.times();
                prep.ttl_sim_weights = Some(
                    (0..times.len())
                        .map(|i| {
                            truncated_weight(fitted.params.beta, &times[..=i], config.truncation)
                        })
                        .collect(),
                );
            }
        }
    }
    prep.fit = Some(fitted);
    prep
}

/// Mean optimal window over precomputed per-arrival weights; infinity as soon
/// as any window is infinite.
fn pooled_ttl_from_weights(params: &HawkesParams, weights: &[f64], costs: &CostParams) -> f64 {
    let mut sum = 0.0;
    for &w in weights {
        match optimal_window_from_weight(params, w, costs) {
            OptimalWindow::Infinite => return f64::INFINITY,
            OptimalWindow::Zero => {}
            OptimalWindow::Finite(tau) => sum += tau,
        }
    }
    sum / weights.len() as f64
}

/// One policy's Pareto curves over the treated population and all apps.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyCurves {
    pub policy: PolicyKind,
    pub treated: Vec<ParetoPoint>,
    pub all: Vec<ParetoPoint>,
}

/// Full trace-experiment output.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceExperimentResult {
    pub curves: Vec<PolicyCurves>,
    /// Savings of each non-fixed policy over the fixed baseline, treated apps.
    pub savings_treated: Vec<(PolicyKind, SavingsSummary)>,
    /// Same, over all apps.
    pub savings_all: Vec<(PolicyKind, SavingsSummary)>,
    pub n_apps: usize,
    /// Apps with at least one arrival on the evaluation day.
    pub n_eval_apps: usize,
    pub n_treated: usize,
    /// Apps that could not be fitted or tested and stayed on the default
    /// policy.
    pub n_untreatable: usize,
    /// Treated apps whose optimized-TTL simulation was unusable; they fall
    /// back to the default window in the optimized-TTL curve.
    pub n_ttl_fallbacks: usize,
}

impl TraceExperimentResult {
    pub fn curve(&self, kind: PolicyKind) -> &PolicyCurves {
        self.curves
            .iter()
            .find(|c| c.policy == kind)
            .expect("all policy kinds are present")
    }

    pub fn savings_for(&self, kind: PolicyKind, treated_only: bool) -> Option<&SavingsSummary> {
        let list = if treated_only {
            &self.savings_treated
        } else {
            &self.savings_all
        };
        list.iter().find(|(k, _)| *k == kind).map(|(_, s)| s)
    }
}

/// Selection and evaluation on top of prepared apps: ranks treatable apps by
/// their KS statistic, treats the best `treat_fraction` of the population,
/// replays all five policies over the cost grid, and assembles curves and
/// savings.
pub fn assemble_experiment(
    dataset: &crate::trace::TraceDataset,
    config: &TraceExperimentConfig,
    preps: &[AppPrep],
) -> Result<TraceExperimentResult> {
    for day in [config.fit_day, config.gof_day, config.eval_day] {
        if !dataset.days().contains(&day) {
            return Err(Error::Config(format!("dataset does not cover day {day}")));
        }
    }
    if !(config.treat_fraction >= 0.0 && config.treat_fraction <= 1.0) {
        return Err(Error::Config("treat fraction must be in [0, 1]".into()));
    }
    if config.cold_start_grid.is_empty() {
        return Err(Error::Config("cold-start grid is empty".into()));
    }
    let keep_rate = config.keep_rate;

    // Rank treatable apps by goodness of fit (smallest KS distance first).
    let mut ranked: Vec<&AppPrep> = preps.iter().filter(|p| p.treatable()).collect();
    ranked.sort_by(|a, b| {
        let da = a.gof.as_ref().unwrap().statistic;
        let db = b.gof.as_ref().unwrap().statistic;
        da.total_cmp(&db).then_with(|| a.app_id.cmp(&b.app_id))
    });
    let treat_count = ((config.treat_fraction * preps.len() as f64) as usize).min(ranked.len());
    let treated: BTreeMap<&str, &AppPrep> = ranked[..treat_count]
        .iter()
        .map(|p| (p.app_id.as_str(), *p))
        .collect();

    // Evaluation population: apps with eval-day arrivals, in dataset order.
    struct EvalApp<'a> {
        times: &'a [f64],
        prep: Option<&'a AppPrep>,
        eval_weights: Option<Vec<f64>>,
    }
    let mut population: Vec<EvalApp> = Vec::new();
    let mut n_ttl_fallbacks = 0usize;
    for prep in preps {
        let arrivals = match dataset.arrivals(&prep.app_id, config.eval_day) {
            Some(h) if !h.is_empty() => h,
            _ => continue,
        };
        let times = arrivals.times();
        let is_treated = treated.contains_key(prep.app_id.as_str());
        let eval_weights = if is_treated {
            let beta = prep.fit.as_ref().unwrap().params.beta;
            if prep.ttl_sim_weights.is_none() {
                n_ttl_fallbacks += 1;
            }
            Some(
                (0..times.len())
                    .map(|i| truncated_weight(beta, &times[..=i], config.truncation))
                    .collect(),
            )
        } else {
            None
        };
        population.push(EvalApp {
            times,
            prep: if is_treated { Some(prep) } else { None },
            eval_weights,
        });
    }
    if population.is_empty() {
        return Err(Error::Config(
            "no application has arrivals on the evaluation day".into(),
        ));
    }

    let day_end = crate::trace::MINUTES_PER_DAY as f64;
    let default_schedule = WindowSchedule::fixed_ttl(config.default_ttl);
    // Wasted memory of the default policy normalizes both populations.
    let default_costs = CostParams::new(keep_rate, keep_rate * config.default_ttl)?;
    let mut norm_all = 0.0;
    let mut norm_treated = 0.0;
    for app in &population {
        let wasted = replay_day(
            app.times,
            day_end,
            &DayPolicy::Schedule(default_schedule.clone()),
            &default_costs,
        )
        .wasted_memory_time;
        norm_all += wasted;
        if app.prep.is_some() {
            norm_treated += wasted;
        }
    }
    let n_treated_eval = population.iter().filter(|a| a.prep.is_some()).count();
    if norm_all <= 0.0 || (n_treated_eval > 0 && norm_treated <= 0.0) {
        return Err(Error::Config(
            "the default fixed policy wastes no memory; normalization is undefined".into(),
        ));
    }

    let mut curves: Vec<PolicyCurves> = TRACE_POLICIES
        .iter()
        .map(|&policy| PolicyCurves {
            policy,
            treated: Vec::new(),
            all: Vec::new(),
        })
        .collect();

    for &cold_cost in &config.cold_start_grid {
        let costs = CostParams::new(keep_rate, cold_cost)?;
        for (slot, &policy) in TRACE_POLICIES.iter().enumerate() {
            let mut cold_all = 0u64;
            let mut wasted_all = 0.0;
            let mut cold_treated = 0u64;
            let mut wasted_treated = 0.0;
            for app in &population {
                let day_policy = match (policy, app.prep) {
                    (PolicyKind::Fixed, _) => {
                        DayPolicy::Schedule(WindowSchedule::fixed_ttl(tau_fixed(&costs)))
                    }
                    (PolicyKind::OfflineOptimal, _) => DayPolicy::Offline,
                    (_, None) => DayPolicy::Schedule(default_schedule.clone()),
                    (PolicyKind::Optimal, Some(prep)) => DayPolicy::Optimal {
                        params: &prep.fit.as_ref().unwrap().params,
                        weights: app.eval_weights.as_ref().unwrap(),
                    },
                    (PolicyKind::OptimizedTtl, Some(prep)) => {
                        let params = &prep.fit.as_ref().unwrap().params;
                        let ttl = match &prep.ttl_sim_weights {
                            Some(weights) => pooled_ttl_from_weights(params, weights, &costs),
                            None => config.default_ttl,
                        };
                        DayPolicy::Schedule(WindowSchedule::fixed_ttl(ttl))
                    }
                    (PolicyKind::Approx, Some(prep)) => {
                        let params = &prep.fit.as_ref().unwrap().params;
                        DayPolicy::Schedule(WindowSchedule::fixed_ttl(tau_approx(params, &costs)))
                    }
                };
                let metrics = replay_day(app.times, day_end, &day_policy, &costs);
                cold_all += metrics.cold_starts;
                wasted_all += metrics.wasted_memory_time;
                if app.prep.is_some() {
                    cold_treated += metrics.cold_starts;
                    wasted_treated += metrics.wasted_memory_time;
                }
            }
            curves[slot].all.push(ParetoPoint {
                cold_start_cost: cold_cost,
                avg_cold_starts_per_app: cold_all as f64 / population.len() as f64,
                normalized_wasted_memory: wasted_all / norm_all,
            });
            if n_treated_eval > 0 {
                curves[slot].treated.push(ParetoPoint {
                    cold_start_cost: cold_cost,
                    avg_cold_starts_per_app: cold_treated as f64 / n_treated_eval as f64,
                    normalized_wasted_memory: wasted_treated / norm_treated,
                });
            }
        }
    }

    let fixed_slot = 0;
    let mut savings_treated = Vec::new();
    let mut savings_all = Vec::new();
    for (slot, &policy) in TRACE_POLICIES.iter().enumerate() {
        if policy == PolicyKind::Fixed {
            continue;
        }
        savings_all.push((policy, savings(&curves[fixed_slot].all, &curves[slot].all)?));
        if n_treated_eval > 0 {
            savings_treated.push((
                policy,
                savings(&curves[fixed_slot].treated, &curves[slot].treated)?,
            ));
        }
    }

    Ok(TraceExperimentResult {
        curves,
        savings_treated,
        savings_all,
        n_apps: preps.len(),
        n_eval_apps: population.len(),
        n_treated: treat_count,
        n_untreatable: preps.iter().filter(|p| !p.treatable()).count(),
        n_ttl_fallbacks,
    })
}

/// The full trace protocol, sequentially: prepare every app, then select,
/// replay, and assemble. Parallel drivers can run [`prepare_app`] per app and
/// call [`assemble_experiment`] themselves.
pub fn trace_experiment(
    dataset: &crate::trace::TraceDataset,
    config: &TraceExperimentConfig,
) -> Result<TraceExperimentResult> {
    let preps: Vec<AppPrep> = dataset
        .app_ids()
        .enumerate()
        .map(|(i, id)| prepare_app(dataset, id, i as u64, config))
        .collect();
    assemble_experiment(dataset, config, &preps)
}

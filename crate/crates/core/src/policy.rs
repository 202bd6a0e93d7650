//! Keep-alive policy construction.
//!
//! A policy decides, after each arrival, during which time intervals the
//! object stays cached until the next arrival. The sign of the instantaneous
//! cost `g(x) = keep_rate - cold_start_cost * hazard(x)` fully determines the
//! optimal schedule: windows open where `g` turns negative and close where it
//! turns positive. For an exponential-kernel Hawkes process the hazard is
//! decreasing between arrivals, so the optimal policy is a single window
//! starting at zero whose length has the closed form
//!
//! ```text
//! tau = (1/beta) * (ln(alpha) + ln(sum_j exp(beta (t_j - t_last))) - ln(ratio - lambda0))
//! ```
//!
//! with `ratio = keep_rate / cold_start_cost`. This module also builds the
//! history-independent alternatives: the ski-rental fixed window
//! `cold_start_cost / keep_rate`, the parameter-aware approximate window, the
//! optimized-TTL heuristic (mean of per-history optimal windows over simulated
//! arrivals), per-history bounds, and the clairvoyant offline rule.

use alloc::format;
use alloc::vec::Vec;

use crate::math;
use crate::point_process::{simulate, truncated_weight, HawkesParams, History, SimConfig};
use crate::{Error, Result};

/// Number of most recent arrivals the closed form considers by default.
pub const DEFAULT_TRUNCATION: usize = 200;

/// Default number of sign-scan samples for [`windows_from_hazard`]; a good
/// resolution is `horizon / DEFAULT_HAZARD_SCAN_STEPS as f64`.
pub const DEFAULT_HAZARD_SCAN_STEPS: usize = 10_000;

/// Cost model: a price per unit time an object stays cached and a price per
/// cold start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    /// Cost per unit time of keeping the object cached (`c_p`).
    pub keep_rate: f64,
    /// Cost of one cold start (`c_cs`).
    pub cold_start: f64,
}

impl CostParams {
    pub fn new(keep_rate: f64, cold_start: f64) -> Result<Self> {
        if !(keep_rate.is_finite() && cold_start.is_finite() && keep_rate > 0.0 && cold_start > 0.0)
        {
            return Err(Error::Domain(format!(
                "costs must be positive and finite, got ({keep_rate}, {cold_start})"
            )));
        }
        Ok(CostParams {
            keep_rate,
            cold_start,
        })
    }

    /// Break-even hazard rate `keep_rate / cold_start`: caching pays off
    /// exactly while the hazard exceeds this ratio.
    pub fn ratio(&self) -> f64 {
        self.keep_rate / self.cold_start
    }
}

/// Optimal single keep-alive window starting at the most recent arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimalWindow {
    /// Never cache; every arrival is a cold start.
    Zero,
    /// Keep cached for this long, then evict.
    Finite(f64),
    /// Keep cached forever.
    Infinite,
}

impl OptimalWindow {
    /// Window length with `Zero -> 0` and `Infinite -> +inf`.
    pub fn length(&self) -> f64 {
        match self {
            OptimalWindow::Zero => 0.0,
            OptimalWindow::Finite(tau) => *tau,
            OptimalWindow::Infinite => f64::INFINITY,
        }
    }

    /// The schedule this window encodes.
    pub fn to_schedule(&self) -> WindowSchedule {
        match self {
            OptimalWindow::Zero => WindowSchedule::none(),
            OptimalWindow::Finite(tau) => WindowSchedule::fixed_ttl(*tau),
            OptimalWindow::Infinite => WindowSchedule::always_on(),
        }
    }
}

/// One keep-alive interval, measured from the most recent arrival. The end may
/// be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

/// An ordered sequence of disjoint keep-alive windows over one inter-arrival.
///
/// Intervals are closed: an arrival exactly at a window boundary is warm. Only
/// the last interval may extend to infinity. The empty schedule means the
/// object is never cached.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowSchedule {
    windows: Vec<Window>,
}

impl WindowSchedule {
    /// Never cache.
    pub fn none() -> Self {
        WindowSchedule {
            windows: Vec::new(),
        }
    }

    /// Single window `[0, ttl]`; a zero or negative ttl collapses to the empty
    /// schedule and an infinite ttl keeps the window open forever.
    pub fn fixed_ttl(ttl: f64) -> Self {
        if ttl <= 0.0 {
            WindowSchedule::none()
        } else {
            WindowSchedule {
                windows: alloc::vec![Window {
                    start: 0.0,
                    end: ttl,
                }],
            }
        }
    }

    /// Pre-warming form: wait `delay`, then keep cached for `ttl`.
    pub fn pre_warm(delay: f64, ttl: f64) -> Result<Self> {
        WindowSchedule::from_windows(alloc::vec![Window {
            start: delay,
            end: delay + ttl,
        }])
    }

    /// Cache from the arrival onward, forever.
    pub fn always_on() -> Self {
        WindowSchedule {
            windows: alloc::vec![Window {
                start: 0.0,
                end: f64::INFINITY,
            }],
        }
    }

    /// Validates intervals: sorted, disjoint, nonnegative starts, start < end,
    /// infinity only as the final end.
    pub fn from_windows(windows: Vec<Window>) -> Result<Self> {
        for (i, w) in windows.iter().enumerate() {
            if !(w.start.is_finite() && w.start >= 0.0) {
                return Err(Error::Domain(format!(
                    "window start must be finite and >= 0, got {}",
                    w.start
                )));
            }
            if w.end.is_nan() || w.end <= w.start {
                return Err(Error::Domain(format!(
                    "window end {} must exceed start {}",
                    w.end, w.start
                )));
            }
            if w.end == f64::INFINITY && i + 1 != windows.len() {
                return Err(Error::Domain(
                    "only the last window may extend to infinity".into(),
                ));
            }
            if i > 0 && w.start <= windows[i - 1].end {
                return Err(Error::Domain(format!(
                    "windows must be disjoint and sorted, got end {} then start {}",
                    windows[i - 1].end,
                    w.start
                )));
            }
        }
        Ok(WindowSchedule { windows })
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Whether an arrival at elapsed time `x` lands inside a window (warm).
    pub fn contains(&self, x: f64) -> bool {
        self.windows.iter().any(|w| w.start <= x && x <= w.end)
    }

    /// Cached time accumulated strictly before elapsed time `x`: full lengths
    /// of windows that closed before `x` plus the partial overlap of the
    /// window containing `x`.
    pub fn cached_time_before(&self, x: f64) -> f64 {
        let mut total = 0.0;
        for w in &self.windows {
            if w.end < x {
                total += w.end - w.start;
            } else if w.start <= x {
                total += x - w.start;
            }
        }
        total
    }

    /// Total cached time if no arrival occurs before `horizon`.
    pub fn cached_time_until(&self, horizon: f64) -> f64 {
        let mut total = 0.0;
        for w in &self.windows {
            if w.start >= horizon {
                break;
            }
            total += w.end.min(horizon) - w.start;
        }
        total
    }
}

/// Optimal keep-alive window for a Hawkes process conditioned on a non-empty
/// history, using the closed form over at most `truncation` most recent
/// arrivals.
///
/// `Infinite` when the background intensity alone justifies caching
/// (`ratio <= lambda0`, with equality costing nothing in expectation), `Zero`
/// when the hazard immediately after the arrival is already below the
/// break-even ratio, otherwise the closed-form length.
pub fn optimal_hawkes_window(
    params: &HawkesParams,
    history: &History,
    costs: &CostParams,
    truncation: usize,
) -> Result<OptimalWindow> {
    if history.is_empty() {
        return Err(Error::Domain(
            "history is empty; use empty_history_window for the unconditioned form".into(),
        ));
    }
    if truncation < 1 {
        return Err(Error::Domain("truncation must be >= 1".into()));
    }
    let weight = truncated_weight(params.beta, history.times(), truncation);
    Ok(optimal_window_from_weight(params, weight, costs))
}

/// Closed form evaluated on a precomputed jump-inclusive excitation weight.
/// Replay loops use this to avoid rebuilding history prefixes.
pub fn optimal_window_from_weight(
    params: &HawkesParams,
    weight: f64,
    costs: &CostParams,
) -> OptimalWindow {
    let ratio = costs.ratio();
    if ratio <= params.lambda0 {
        return OptimalWindow::Infinite;
    }
    // tau = (1/beta) ln(alpha * weight / (ratio - lambda0)); the hazard at the
    // arrival is lambda0 + alpha * weight, so tau <= 0 is exactly the
    // always-cold case.
    let numerator = params.alpha * weight;
    if numerator <= 0.0 {
        return OptimalWindow::Zero;
    }
    let tau = (math::ln(numerator) - math::ln(ratio - params.lambda0)) / params.beta;
    if tau <= 0.0 {
        OptimalWindow::Zero
    } else {
        OptimalWindow::Finite(tau)
    }
}

/// Optimal window when no previous arrivals are known beyond the one that just
/// happened: the closed form with a history weight of one. This is also a
/// lower bound on the optimal window for every history.
pub fn empty_history_window(params: &HawkesParams, costs: &CostParams) -> OptimalWindow {
    optimal_window_from_weight(params, 1.0, costs)
}

/// General schedule construction from an arbitrary hazard function, per the
/// sign-change characterization: scan the sign of
/// `g(x) = keep_rate - cold_start * hazard(x)` on `[0, horizon]` at the given
/// resolution, refine each strict sign change by bisection, open a window
/// where the sign turns negative and close where it turns positive.
///
/// A tangential touch (g reaches zero without changing sign) produces no
/// boundary. If `g` is still negative at the horizon the last window stays
/// open to infinity.
pub fn windows_from_hazard<F: Fn(f64) -> f64>(
    hazard: F,
    costs: &CostParams,
    horizon: f64,
    resolution: f64,
) -> Result<WindowSchedule> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be > 0, got {horizon}")));
    }
    if !(resolution > 0.0 && resolution <= horizon) {
        return Err(Error::Domain(format!(
            "resolution must be in (0, horizon], got {resolution}"
        )));
    }
    let g = |x: f64| -> Result<f64> {
        let h = hazard(x);
        if !h.is_finite() {
            return Err(Error::Numeric(format!("hazard is not finite at x = {x}")));
        }
        Ok(costs.keep_rate - costs.cold_start * h)
    };
    // Bisect a strict sign change of g inside [lo, hi] down to 1e-9.
    let refine = |mut lo: f64, mut hi: f64| -> Result<f64> {
        let negative_at_lo = g(lo)? < 0.0;
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            let gm = g(mid)?;
            if (gm < 0.0) == negative_at_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };

    let steps = (horizon / resolution) as usize;
    let mut windows: Vec<Window> = Vec::new();
    let mut open_start: Option<f64> = None;
    // Last grid point with a strictly nonzero g, and its sign; zeros in
    // between are skipped so tangential touches cannot fabricate boundaries.
    let mut prev: Option<(f64, bool)> = None;
    for k in 0..=steps {
        let x = if k == steps {
            horizon
        } else {
            k as f64 * resolution
        };
        let gx = g(x)?;
        if gx == 0.0 {
            continue;
        }
        let negative = gx < 0.0;
        match prev {
            None => {
                if negative {
                    // Negative from the start of the scan: window opens at 0.
                    open_start = Some(0.0);
                }
            }
            Some((px, was_negative)) if was_negative != negative => {
                let boundary = refine(px, x)?;
                if negative {
                    open_start = Some(boundary);
                } else {
                    let start = open_start.take().unwrap_or(0.0);
                    if boundary > start {
                        windows.push(Window {
                            start,
                            end: boundary,
                        });
                    }
                }
            }
            Some(_) => {}
        }
        prev = Some((x, negative));
    }
    if let Some(start) = open_start {
        windows.push(Window {
            start,
            end: f64::INFINITY,
        });
    }
    WindowSchedule::from_windows(windows)
}

/// Optimized-TTL heuristic: simulate arrivals, compute the optimal window
/// after every arrival, and average the lengths (`Zero` counts as 0). Any
/// `Infinite` window forces the result to infinity, since it only appears when
/// every window is infinite.
///
/// Defaults follow the trace protocol: a single realization. Multiple
/// realizations pool all per-arrival windows into one mean.
pub fn optimized_ttl(
    params: &HawkesParams,
    costs: &CostParams,
    sim: &SimConfig,
    truncation: usize,
    realizations: usize,
) -> Result<f64> {
    if realizations < 1 {
        return Err(Error::Domain("need at least one realization".into()));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for r in 0..realizations {
        let cfg = SimConfig {
            seed: sim.seed.wrapping_add(r as u64),
            ..*sim
        };
        let history = simulate(params, &cfg)?;
        if history.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: history.len(),
            });
        }
        let times = history.times();
        for m in 1..=times.len() {
            let weight = truncated_weight(params.beta, &times[..m], truncation);
            match optimal_window_from_weight(params, weight, costs) {
                OptimalWindow::Infinite => return Ok(f64::INFINITY),
                OptimalWindow::Zero => count += 1,
                OptimalWindow::Finite(tau) => {
                    sum += tau;
                    count += 1;
                }
            }
        }
    }
    Ok(sum / count as f64)
}

/// History-independent bracket around the optimal window, valid whenever the
/// finite regime applies (`ratio > lambda0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowBounds {
    pub lower: f64,
    pub upper: f64,
    /// Number of most recent arrivals carrying at least half the total
    /// excitation weight.
    pub delta: usize,
}

/// Computes the bracket: the lower bound is the empty-history window (clamped
/// at zero), the upper bound replaces the history term with `ln(delta) + 1`
/// where `delta` is the smallest count of most recent arrivals whose weight
/// reaches half of the full history's weight.
pub fn window_bounds(
    params: &HawkesParams,
    history: &History,
    costs: &CostParams,
) -> Result<WindowBounds> {
    let ratio = costs.ratio();
    if ratio <= params.lambda0 {
        return Err(Error::Domain(
            "bounds require the finite-window regime (ratio > lambda0)".into(),
        ));
    }
    if history.is_empty() {
        return Err(Error::Domain("bounds require a non-empty history".into()));
    }
    let times = history.times();
    let last = times[times.len() - 1];
    let total: f64 = times.iter().map(|&t| math::exp(params.beta * (t - last))).sum();
    let mut acc = 0.0;
    let mut delta = times.len();
    for (i, &t) in times.iter().rev().enumerate() {
        acc += math::exp(params.beta * (t - last));
        if acc >= 0.5 * total {
            delta = i + 1;
            break;
        }
    }
    let base = math::ln(params.alpha) - math::ln(ratio - params.lambda0);
    let lower = (base / params.beta).max(0.0);
    let upper = (base + math::ln(delta as f64) + 1.0) / params.beta;
    Ok(WindowBounds {
        lower,
        upper,
        delta,
    })
}

/// Ski-rental fixed window: keep cached exactly until the keeping cost equals
/// one cold start, i.e. `cold_start / keep_rate`. A worst-case
/// 2-approximation of the optimal policy for any history.
pub fn tau_fixed(costs: &CostParams) -> f64 {
    costs.cold_start / costs.keep_rate
}

/// Parameter-aware approximate window
/// `sqrt((c/k) * (tau_empty + c/k))` with `c/k = cold_start / keep_rate`.
/// Falls back to the ski-rental window when the empty-history window is zero
/// and to an always-on policy when it is infinite.
pub fn tau_approx(params: &HawkesParams, costs: &CostParams) -> f64 {
    let ck = tau_fixed(costs);
    match empty_history_window(params, costs) {
        OptimalWindow::Infinite => f64::INFINITY,
        OptimalWindow::Zero => ck,
        OptimalWindow::Finite(tau_empty) => math::sqrt(ck * (tau_empty + ck)),
    }
}

/// Clairvoyant per-inter-arrival cost: pay the cold start if keeping through
/// the whole gap would cost at least as much, otherwise keep until the
/// arrival. Ties go to the cold start.
pub fn offline_optimal_cost(x: f64, costs: &CostParams) -> f64 {
    if costs.keep_rate * x >= costs.cold_start {
        costs.cold_start
    } else {
        costs.keep_rate * x
    }
}

/// A policy family to replay against an arrival series.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    /// Fixed keep-alive window after every arrival.
    FixedTtl(f64),
    /// Pre-warming delay followed by a keep-alive window.
    PreWarm { delay: f64, ttl: f64 },
    /// An explicit multi-window schedule reused for every inter-arrival.
    Windows(WindowSchedule),
    /// History-dependent optimal window, recomputed after every arrival.
    OptimalHawkes { truncation: usize },
    /// Optimized-TTL: the fixed window is the mean optimal window over
    /// simulated arrivals from the process parameters.
    OptimizedTtl {
        sim: SimConfig,
        truncation: usize,
        realizations: usize,
    },
    /// The approximate window derived from the process parameters.
    Approx,
    /// Clairvoyant per-gap rule; a lower bound on every online policy.
    OfflineOptimal,
}

impl PolicySpec {
    /// Whether replaying this policy requires Hawkes parameters.
    pub fn needs_params(&self) -> bool {
        matches!(
            self,
            PolicySpec::OptimalHawkes { .. }
                | PolicySpec::OptimizedTtl { .. }
                | PolicySpec::Approx
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::{intensity, NextArrival};

    fn reference_params() -> HawkesParams {
        HawkesParams::new(0.01, 0.5, 1.0).unwrap()
    }

    /// Bisection on keep_rate - cold_start * lambda(x | history) = 0, the
    /// independent oracle for the closed form.
    fn bisect_window(
        params: &HawkesParams,
        history: &History,
        costs: &CostParams,
        hi_start: f64,
    ) -> f64 {
        let last = history.last().unwrap();
        let g = |x: f64| {
            costs.keep_rate - costs.cold_start * intensity(params, history, last + x).unwrap()
        };
        let mut lo = 0.0;
        let mut hi = hi_start;
        while g(hi) < 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn cost_params_validation() {
        assert!(CostParams::new(0.0, 1.0).is_err());
        assert!(CostParams::new(1.0, -1.0).is_err());
        assert!(CostParams::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn reference_costs_give_zero_window() {
        let params = reference_params();
        let h = History::from_times(vec![0.0]).unwrap();
        let costs = CostParams::new(1.0, 1.0).unwrap();
        let w = optimal_hawkes_window(&params, &h, &costs, DEFAULT_TRUNCATION).unwrap();
        assert_eq!(w, OptimalWindow::Zero);
    }

    #[test]
    fn low_ratio_gives_infinite_window() {
        let params = HawkesParams::new(0.2, 0.5, 1.0).unwrap();
        let h = History::from_times(vec![0.0]).unwrap();
        let costs = CostParams::new(1.0, 10.0).unwrap();
        let w = optimal_hawkes_window(&params, &h, &costs, DEFAULT_TRUNCATION).unwrap();
        assert_eq!(w, OptimalWindow::Infinite);
        // Equality resolved toward Infinite: zero marginal expected cost.
        let costs_eq = CostParams::new(1.0, 5.0).unwrap();
        let w_eq = optimal_hawkes_window(&params, &h, &costs_eq, DEFAULT_TRUNCATION).unwrap();
        assert_eq!(w_eq, OptimalWindow::Infinite);
    }

    #[test]
    fn single_arrival_closed_form_matches_bisection() {
        // tau = ln(0.5 / 0.09) ~= 1.71480
        let params = reference_params();
        let h = History::from_times(vec![0.0]).unwrap();
        let costs = CostParams::new(1.0, 10.0).unwrap();
        let w = optimal_hawkes_window(&params, &h, &costs, DEFAULT_TRUNCATION).unwrap();
        let tau = match w {
            OptimalWindow::Finite(tau) => tau,
            other => panic!("expected finite window, got {other:?}"),
        };
        assert!((tau - (0.5f64 / 0.09).ln()).abs() < 1e-12);
        assert!((tau - 1.71480).abs() < 1e-5);
        let oracle = bisect_window(&params, &h, &costs, 1.0);
        assert!((tau - oracle).abs() < 1e-9, "closed {tau} vs oracle {oracle}");
    }

    #[test]
    fn empty_history_matches_single_arrival_form() {
        let params = reference_params();
        let costs = CostParams::new(1.0, 10.0).unwrap();
        match empty_history_window(&params, &costs) {
            OptimalWindow::Finite(tau) => assert!((tau - 1.71480).abs() < 1e-5),
            other => panic!("expected finite, got {other:?}"),
        }
    }

    #[test]
    fn empty_history_zero_when_hazard_never_reaches_ratio() {
        // ratio 2.5 > lambda0 + alpha = 1.1 everywhere.
        let params = HawkesParams::new(0.5, 0.6, 1.5).unwrap();
        let costs = CostParams::new(1.0, 0.4).unwrap();
        assert_eq!(empty_history_window(&params, &costs), OptimalWindow::Zero);
    }

    #[test]
    fn empty_history_infinite_in_low_ratio_regime() {
        let params = HawkesParams::new(0.5, 0.6, 1.5).unwrap();
        let costs = CostParams::new(1.0, 2.0).unwrap();
        assert_eq!(
            empty_history_window(&params, &costs),
            OptimalWindow::Infinite
        );
    }

    #[test]
    fn optimal_window_requires_history() {
        let params = reference_params();
        let costs = CostParams::new(1.0, 1.0).unwrap();
        assert!(optimal_hawkes_window(&params, &History::new(), &costs, 200).is_err());
    }

    #[test]
    fn truncation_keeps_exponents_safe() {
        // Very old arrivals do not change the truncated window.
        let params = reference_params();
        let costs = CostParams::new(1.0, 10.0).unwrap();
        let mut times = vec![-1e6];
        times.extend((0..300).map(|i| i as f64 * 0.01));
        let h = History::from_times(times).unwrap();
        let w = optimal_hawkes_window(&params, &h, &costs, 200).unwrap();
        match w {
            OptimalWindow::Finite(tau) => assert!(tau.is_finite() && tau > 0.0),
            other => panic!("expected finite, got {other:?}"),
        }
    }

    #[test]
    fn hazard_step_yields_two_windows() {
        // hazard 2 on [0,1), 0.1 on [1,3), 2 on [3,inf); ratio 1.
        let costs = CostParams::new(1.0, 1.0).unwrap();
        let hazard = |x: f64| {
            if x < 1.0 {
                2.0
            } else if x < 3.0 {
                0.1
            } else {
                2.0
            }
        };
        let sched = windows_from_hazard(hazard, &costs, 10.0, 1e-3).unwrap();
        let ws = sched.windows();
        assert_eq!(ws.len(), 2, "{ws:?}");
        assert_eq!(ws[0].start, 0.0);
        assert!((ws[0].end - 1.0).abs() < 1e-6);
        assert!((ws[1].start - 3.0).abs() < 1e-6);
        assert_eq!(ws[1].end, f64::INFINITY);
    }

    #[test]
    fn hazard_constant_below_ratio_gives_empty_schedule() {
        let costs = CostParams::new(1.0, 0.5).unwrap(); // ratio 2 > hazard 1
        let sched = windows_from_hazard(|_| 1.0, &costs, 10.0, 1e-2).unwrap();
        assert!(sched.is_empty());
    }

    #[test]
    fn increasing_hazard_gives_prewarm_window() {
        // hazard x/1 crossing ratio 2 at x = 2: window [2, inf).
        let costs = CostParams::new(2.0, 1.0).unwrap();
        let sched = windows_from_hazard(|x| x, &costs, 10.0, 1e-3).unwrap();
        let ws = sched.windows();
        assert_eq!(ws.len(), 1);
        assert!((ws[0].start - 2.0).abs() < 1e-8, "{:?}", ws[0]);
        assert_eq!(ws[0].end, f64::INFINITY);
    }

    #[test]
    fn decreasing_hazard_gives_single_leading_window() {
        let params = reference_params();
        let h = History::from_times(vec![0.0]).unwrap();
        let law = NextArrival::after_history(&params, &h);
        let costs = CostParams::new(1.0, 10.0).unwrap();
        let sched = windows_from_hazard(|x| law.hazard(x), &costs, 50.0, 1e-3).unwrap();
        let ws = sched.windows();
        assert_eq!(ws.len(), 1);
        assert_eq!(ws[0].start, 0.0);
        assert!((ws[0].end - 1.71480).abs() < 1e-5, "{:?}", ws[0]);
    }

    #[test]
    fn tangential_touch_produces_no_boundary() {
        // hazard touches the ratio at x = 1 without crossing it.
        let costs = CostParams::new(1.0, 1.0).unwrap();
        let hazard = |x: f64| 1.0 - (x - 1.0) * (x - 1.0);
        let sched = windows_from_hazard(hazard, &costs, 5.0, 1e-3).unwrap();
        assert!(sched.is_empty(), "{:?}", sched.windows());
    }

    #[test]
    fn hazard_must_be_finite() {
        let costs = CostParams::new(1.0, 1.0).unwrap();
        let res = windows_from_hazard(|x| if x > 1.0 { f64::NAN } else { 2.0 }, &costs, 5.0, 0.1);
        assert!(res.is_err());
    }

    #[test]
    fn optimized_ttl_poisson_edges() {
        let costs_high = CostParams::new(1.0, 2.0).unwrap(); // ratio 0.5 < 1
        let poisson = HawkesParams::poisson(1.0).unwrap();
        let sim = SimConfig::events(5, 50).unwrap();
        let inf = optimized_ttl(&poisson, &costs_high, &sim, 200, 1).unwrap();
        assert_eq!(inf, f64::INFINITY);

        let costs_low = CostParams::new(1.0, 0.5).unwrap(); // ratio 2 > 1
        let zero = optimized_ttl(&poisson, &costs_low, &sim, 200, 1).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn optimized_ttl_insufficient_data() {
        let params = reference_params();
        let costs = CostParams::new(1.0, 10.0).unwrap();
        let sim = SimConfig::events(5, 1).unwrap();
        match optimized_ttl(&params, &costs, &sim, 200, 1) {
            Err(Error::InsufficientData { .. }) => {}
            other => panic!("expected insufficient data, got {other:?}"),
        }
    }

    #[test]
    fn bounds_delta_for_coincident_weights() {
        // Four arrivals bunched tightly: each term ~1, so two of them already
        // carry half the weight.
        let params = reference_params();
        let costs = CostParams::new(1.0, 10.0).unwrap();
        let h = History::from_times(vec![10.0, 10.0 + 1e-12, 10.0 + 2e-12, 10.0 + 3e-12]).unwrap();
        let b = window_bounds(&params, &h, &costs).unwrap();
        assert_eq!(b.delta, 2);
    }

    #[test]
    fn bounds_single_arrival() {
        let params = reference_params();
        let costs = CostParams::new(1.0, 10.0).unwrap();
        let h = History::from_times(vec![0.0]).unwrap();
        let b = window_bounds(&params, &h, &costs).unwrap();
        assert_eq!(b.delta, 1);
        assert!((b.upper - b.lower - 1.0 / params.beta).abs() < 1e-12);
        let tau = optimal_hawkes_window(&params, &h, &costs, 200)
            .unwrap()
            .length();
        assert!(b.lower <= tau && tau <= b.upper);
    }

    #[test]
    fn bounds_reject_infinite_regime() {
        let params = HawkesParams::new(0.2, 0.5, 1.0).unwrap();
        let costs = CostParams::new(1.0, 10.0).unwrap();
        let h = History::from_times(vec![0.0]).unwrap();
        assert!(window_bounds(&params, &h, &costs).is_err());
    }

    #[test]
    fn tau_fixed_is_cost_ratio() {
        assert_eq!(tau_fixed(&CostParams::new(1.0, 10.0).unwrap()), 10.0);
        assert_eq!(tau_fixed(&CostParams::new(2.0, 1.0).unwrap()), 0.5);
        assert_eq!(tau_fixed(&CostParams::new(3.0, 3.0).unwrap()), 1.0);
    }

    #[test]
    fn tau_approx_reduces_to_ski_rental() {
        // Zero empty-history window: same as the fixed policy.
        let params = HawkesParams::new(0.5, 0.6, 1.5).unwrap();
        let costs = CostParams::new(1.0, 0.4).unwrap();
        assert_eq!(tau_approx(&params, &costs), tau_fixed(&costs));
    }

    #[test]
    fn tau_approx_square_root_form() {
        let params = reference_params();
        let costs = CostParams::new(1.0, 10.0).unwrap();
        let tau_empty = match empty_history_window(&params, &costs) {
            OptimalWindow::Finite(t) => t,
            other => panic!("{other:?}"),
        };
        let tau = tau_approx(&params, &costs);
        assert!((tau - (10.0 * (tau_empty + 10.0)).sqrt()).abs() < 1e-12);
        assert!((tau - 10.8235).abs() < 1e-4, "{tau}");
        // Oracle: the two approximation-bound branches are equal at tau.
        let branch_a = costs.keep_rate * tau / (costs.keep_rate * tau_empty + costs.cold_start);
        let branch_b = costs.cold_start / (costs.keep_rate * tau);
        assert!(
            (branch_a - branch_b).abs() < 1e-12,
            "branches {branch_a} vs {branch_b}"
        );
    }

    #[test]
    fn tau_approx_infinite_regime() {
        let params = HawkesParams::new(0.2, 0.5, 1.0).unwrap();
        let costs = CostParams::new(1.0, 10.0).unwrap();
        assert_eq!(tau_approx(&params, &costs), f64::INFINITY);
    }

    #[test]
    fn offline_rule_and_tie() {
        let costs = CostParams::new(1.0, 3.0).unwrap();
        assert_eq!(offline_optimal_cost(5.0, &costs), 3.0);
        assert_eq!(offline_optimal_cost(2.0, &costs), 2.0);
        // Tie goes to the cold start; cost is the same either way.
        assert_eq!(offline_optimal_cost(3.0, &costs), 3.0);
    }

    #[test]
    fn schedule_validation() {
        assert!(WindowSchedule::from_windows(vec![Window {
            start: -1.0,
            end: 2.0
        }])
        .is_err());
        assert!(WindowSchedule::from_windows(vec![
            Window {
                start: 0.0,
                end: f64::INFINITY
            },
            Window {
                start: 5.0,
                end: 6.0
            }
        ])
        .is_err());
        assert!(WindowSchedule::from_windows(vec![
            Window {
                start: 0.0,
                end: 2.0
            },
            Window {
                start: 1.0,
                end: 3.0
            }
        ])
        .is_err());
        let ok = WindowSchedule::from_windows(vec![
            Window {
                start: 0.0,
                end: 1.0,
            },
            Window {
                start: 3.0,
                end: 5.0,
            },
        ])
        .unwrap();
        assert!(ok.contains(1.0)); // closed boundary is warm
        assert!(!ok.contains(2.0));
        assert_eq!(ok.cached_time_before(4.0), 1.0 + 1.0);
        assert_eq!(ok.cached_time_until(4.0), 2.0);
    }

    #[test]
    fn closed_form_matches_bisection_on_random_inputs() {
        // Finite-regime sweep: random params, histories, costs.
        let mut rng = crate::rng::Rng::from_seed(2024);
        let mut checked = 0;
        while checked < 200 {
            let lambda0 = 0.005 + 0.3 * rng.uniform();
            let beta = 0.3 + 2.5 * rng.uniform();
            let alpha = beta * (0.1 + 0.8 * rng.uniform());
            let params = HawkesParams::new(lambda0, alpha, beta).unwrap();
            let n = 1 + (rng.next_u64() % 50) as usize;
            let mut t = 0.0;
            let mut times = Vec::with_capacity(n);
            for _ in 0..n {
                t += rng.exponential(0.5);
                times.push(t);
            }
            let h = History::from_times(times).unwrap();
            let weight = truncated_weight(beta, h.times(), 200);
            let hazard_at_zero = lambda0 + alpha * weight;
            // Pick a ratio strictly inside (lambda0, hazard(0)) for a finite window.
            let ratio = lambda0 + (hazard_at_zero - lambda0) * (0.05 + 0.9 * rng.uniform());
            let costs = CostParams::new(ratio, 1.0).unwrap();
            let tau = match optimal_hawkes_window(&params, &h, &costs, 200).unwrap() {
                OptimalWindow::Finite(tau) => tau,
                other => panic!("expected finite, got {other:?}"),
            };
            let oracle = bisect_window(&params, &h, &costs, 1.0);
            assert!(
                (tau - oracle).abs() <= 1e-9 * tau.max(1.0),
                "closed {tau} vs oracle {oracle}"
            );
            checked += 1;
        }
    }
}

//! Hawkes/Poisson point processes with an exponential excitation kernel.
//!
//! The conditional intensity after a history of arrivals `t_j` is
//!
//! ```text
//! lambda(t | H) = lambda0 + alpha * sum_{t_j <= t} exp(-beta * (t - t_j))
//! ```
//!
//! With `alpha = 0` this degenerates exactly to a homogeneous Poisson process
//! of rate `lambda0`. Everything a policy needs — intensity, survival of the
//! next inter-arrival, compensator increments, and Ogata-thinning simulation —
//! lives here. All operations are pure given their inputs; [`simulate`] owns
//! its generator state.

use alloc::format;
use alloc::vec::Vec;

use crate::math;
use crate::rng::Rng;
use crate::{Error, Result};

/// Default safety cap on simulated events, guarding non-stationary
/// parameterizations (`alpha >= beta`).
pub const DEFAULT_EVENT_CAP: usize = 1_000_000;

/// Parameters of an exponential-kernel Hawkes process.
///
/// `lambda0` is the background intensity, `alpha` the jump each arrival adds
/// to the intensity, and `beta` the rate at which that influence decays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HawkesParams {
    pub lambda0: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl HawkesParams {
    pub fn new(lambda0: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(lambda0.is_finite() && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Domain(format!(
                "parameters must be finite, got ({lambda0}, {alpha}, {beta})"
            )));
        }
        if lambda0 < 0.0 || alpha < 0.0 || beta <= 0.0 {
            return Err(Error::Domain(format!(
                "need lambda0 >= 0, alpha >= 0, beta > 0, got ({lambda0}, {alpha}, {beta})"
            )));
        }
        Ok(HawkesParams {
            lambda0,
            alpha,
            beta,
        })
    }

    /// Homogeneous Poisson process of the given rate.
    pub fn poisson(rate: f64) -> Result<Self> {
        HawkesParams::new(rate, 0.0, 1.0)
    }

    /// Expected offspring per arrival, `alpha / beta`.
    pub fn branching_ratio(&self) -> f64 {
        self.alpha / self.beta
    }

    /// Stationarity requires the branching ratio to be below one.
    pub fn is_stationary(&self) -> bool {
        self.branching_ratio() < 1.0
    }

    /// Long-run mean arrival rate `lambda0 / (1 - alpha/beta)`, when stationary.
    pub fn stationary_rate(&self) -> Option<f64> {
        if self.is_stationary() {
            Some(self.lambda0 / (1.0 - self.branching_ratio()))
        } else {
            None
        }
    }
}

/// Strictly increasing arrival timestamps of one application.
///
/// The empty history is permitted; it conditions the next arrival on the
/// background intensity alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    times: Vec<f64>,
}

impl History {
    pub fn new() -> Self {
        History { times: Vec::new() }
    }

    /// Validates that the given timestamps are finite and strictly increasing.
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        for (i, &t) in times.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::Domain(format!("non-finite timestamp at index {i}")));
            }
            if i > 0 && t <= times[i - 1] {
                return Err(Error::Domain(format!(
                    "timestamps must be strictly increasing, violated at index {i} ({} -> {t})",
                    times[i - 1]
                )));
            }
        }
        Ok(History { times })
    }

    /// Appends an arrival; it must come strictly after the current last one.
    pub fn push(&mut self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("non-finite timestamp {t}")));
        }
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::Domain(format!(
                    "timestamp {t} does not come after last arrival {last}"
                )));
            }
        }
        self.times.push(t);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn last(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Consecutive inter-arrival times; one fewer than the arrival count.
    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.windows(2).map(|w| w[1] - w[0])
    }
}

/// Running excitation weight `sum exp(-beta * (t - t_j))` over arrivals
/// `t_j <= t`, maintained recursively so a sorted scan costs O(1) per step.
#[derive(Debug, Clone, Copy)]
pub struct ExcitationWeight {
    at: f64,
    weight: f64,
}

impl ExcitationWeight {
    pub fn empty() -> Self {
        ExcitationWeight {
            at: f64::NEG_INFINITY,
            weight: 0.0,
        }
    }

    /// Weight decayed from its reference time to `t >= at`.
    pub fn decayed_to(&self, beta: f64, t: f64) -> f64 {
        if self.weight == 0.0 {
            0.0
        } else {
            self.weight * math::exp(-beta * (t - self.at))
        }
    }

    /// Moves the reference time forward, decaying the weight in place.
    pub fn advance_to(&mut self, beta: f64, t: f64) {
        self.weight = self.decayed_to(beta, t);
        self.at = t;
    }

    /// Registers an arrival at `t`; the new arrival contributes a full unit.
    pub fn add_arrival(&mut self, beta: f64, t: f64) {
        self.advance_to(beta, t);
        self.weight += 1.0;
    }

    /// Current weight at the reference time.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Folds a sorted history; the result is the jump-inclusive weight at the
    /// last arrival (the most recent arrival contributes exactly 1).
    pub fn from_history(beta: f64, times: &[f64]) -> Self {
        let mut acc = ExcitationWeight::empty();
        for &t in times {
            acc.add_arrival(beta, t);
        }
        acc
    }
}

/// Jump-inclusive excitation weight at the last arrival, summed over at most
/// the `truncation` most recent arrivals. Exponents are `beta * (t_j - t_last)
/// <= 0`, so the computation cannot overflow.
pub fn truncated_weight(beta: f64, times: &[f64], truncation: usize) -> f64 {
    let last = match times.last() {
        Some(&t) => t,
        None => return 0.0,
    };
    let start = times.len().saturating_sub(truncation.max(1));
    times[start..]
        .iter()
        .map(|&t| math::exp(beta * (t - last)))
        .sum()
}

/// Conditional law of the elapsed time to the next arrival, given everything
/// up to and including the most recent arrival.
///
/// The hazard is `base + excitation * exp(-decay * x)` where `excitation`
/// bundles `alpha` with the jump-inclusive weight at the conditioning point.
#[derive(Debug, Clone, Copy)]
pub struct NextArrival {
    base: f64,
    excitation: f64,
    decay: f64,
}

impl NextArrival {
    /// Conditions on a full history (empty history means background only).
    pub fn after_history(params: &HawkesParams, history: &History) -> Self {
        let weight = ExcitationWeight::from_history(params.beta, history.times()).weight();
        NextArrival::after_weight(params, weight)
    }

    /// Conditions on a precomputed jump-inclusive excitation weight.
    pub fn after_weight(params: &HawkesParams, weight: f64) -> Self {
        NextArrival {
            base: params.lambda0,
            excitation: params.alpha * weight,
            decay: params.beta,
        }
    }

    /// Hazard rate at elapsed time `x`.
    pub fn hazard(&self, x: f64) -> f64 {
        self.base + self.excitation * math::exp(-self.decay * x)
    }

    /// Integrated hazard over `[0, x]`.
    pub fn integrated_hazard(&self, x: f64) -> f64 {
        if x == f64::INFINITY {
            return if self.base > 0.0 {
                f64::INFINITY
            } else {
                self.excitation / self.decay
            };
        }
        self.base * x + self.excitation / self.decay * (-math::expm1(-self.decay * x))
    }

    /// Survival `P(next gap > x) = exp(-integrated hazard)`.
    pub fn survival(&self, x: f64) -> f64 {
        math::exp(-self.integrated_hazard(x))
    }

    /// Density of the next gap, `hazard * survival`.
    pub fn density(&self, x: f64) -> f64 {
        self.hazard(x) * self.survival(x)
    }

    /// Total integrated hazard over `[0, inf)`. Finite only when `base == 0`,
    /// in which case the next arrival may never come.
    pub fn total_mass(&self) -> f64 {
        self.integrated_hazard(f64::INFINITY)
    }

    /// Inverts the integrated hazard: the `x` with `integrated_hazard(x) ==
    /// target`. Returns infinity when the target exceeds the total mass.
    pub fn invert_integrated_hazard(&self, target: f64) -> f64 {
        if target <= 0.0 {
            return 0.0;
        }
        if target >= self.total_mass() {
            return f64::INFINITY;
        }
        // Bracket, then safeguarded Newton.
        let mut lo = 0.0;
        let mut hi = if self.base > 0.0 {
            target / self.base
        } else {
            1.0 / self.decay
        };
        while self.integrated_hazard(hi) < target {
            lo = hi;
            hi *= 2.0;
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let f = self.integrated_hazard(x) - target;
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let step = f / self.hazard(x);
            let mut next = x - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if math::abs(next - x) <= 1e-15 * (1.0 + math::abs(x)) {
                return next;
            }
            x = next;
        }
        x
    }

    /// Draws the next inter-arrival by inverse transform of the compensator.
    /// May return infinity for defective laws (`base == 0`).
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        let e = rng.exponential(1.0);
        self.invert_integrated_hazard(e)
    }
}

/// Conditional intensity `lambda(t | history)` at time `t`, which must not
/// precede the last arrival.
///
/// Computed with the recursive accumulator, so a scan over sorted query times
/// interleaved with arrivals costs O(1) amortized per step.
pub fn intensity(params: &HawkesParams, history: &History, t: f64) -> Result<f64> {
    if let Some(last) = history.last() {
        if t < last {
            return Err(Error::Domain(format!(
                "query time {t} precedes last arrival {last}"
            )));
        }
    }
    let acc = ExcitationWeight::from_history(params.beta, history.times());
    Ok(params.lambda0 + params.alpha * acc.decayed_to(params.beta, t))
}

/// Integrated intensity over `[from, to]` given the arrivals at or before
/// `from`:
///
/// ```text
/// lambda0 * (to - from) + (alpha / beta) * sum_{t_j <= from} (exp(-beta (from - t_j)) - exp(-beta (to - t_j)))
/// ```
///
/// Arrivals strictly inside `(from, to)` would invalidate the formula and are
/// rejected.
pub fn compensator_increment(
    params: &HawkesParams,
    history: &History,
    from: f64,
    to: f64,
) -> Result<f64> {
    if to < from {
        return Err(Error::Domain(format!(
            "interval end {to} precedes start {from}"
        )));
    }
    if history.times().iter().any(|&t| t > from && t < to) {
        return Err(Error::Domain(format!(
            "history contains arrivals inside ({from}, {to})"
        )));
    }
    let mut acc = ExcitationWeight::empty();
    for &t in history.times().iter().filter(|&&t| t <= from) {
        acc.add_arrival(params.beta, t);
    }
    let weight_at_from = acc.decayed_to(params.beta, from);
    let law = NextArrival::after_weight(params, weight_at_from);
    Ok(law.integrated_hazard(to - from))
}

/// Survival of the next inter-arrival: `P(no arrival within x of the most
/// recent one) = exp(-compensator increment)`. For an empty history the
/// reference point is `t = 0`.
pub fn survival(params: &HawkesParams, history: &History, x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::Domain(format!("elapsed time must be >= 0, got {x}")));
    }
    Ok(NextArrival::after_history(params, history).survival(x))
}

/// Conditional density of the next inter-arrival at elapsed time `x`,
/// `intensity * survival`.
pub fn density(params: &HawkesParams, history: &History, x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::Domain(format!("elapsed time must be >= 0, got {x}")));
    }
    Ok(NextArrival::after_history(params, history).density(x))
}

/// When a simulation stops: after a fixed number of events or at a time
/// horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    Events(usize),
    Horizon(f64),
}

/// Simulation configuration: seed, stop rule, and the event safety cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub stop: StopRule,
    pub max_events: usize,
}

impl SimConfig {
    pub fn events(seed: u64, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("event target must be >= 1".into()));
        }
        Ok(SimConfig {
            seed,
            stop: StopRule::Events(n),
            max_events: DEFAULT_EVENT_CAP,
        })
    }

    pub fn horizon(seed: u64, t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Domain(format!("horizon must be > 0, got {t}")));
        }
        Ok(SimConfig {
            seed,
            stop: StopRule::Horizon(t),
            max_events: DEFAULT_EVENT_CAP,
        })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.max_events = cap;
        self
    }
}

/// Simulates a realization by Ogata's modified thinning.
///
/// The exponential kernel makes the intensity decreasing between arrivals, so
/// the intensity immediately after the latest accepted or rejected candidate
/// is a valid upper bound; it is refreshed after every candidate. Output is
/// deterministic given the seed.
pub fn simulate(params: &HawkesParams, cfg: &SimConfig) -> Result<History> {
    let mut rng = Rng::from_seed(cfg.seed);
    let mut acc = ExcitationWeight::empty();
    let mut t = 0.0;
    let mut times: Vec<f64> = Vec::new();

    loop {
        if let StopRule::Events(n) = cfg.stop {
            if times.len() >= n {
                break;
            }
        }
        let bound = params.lambda0 + params.alpha * acc.weight();
        if bound <= 0.0 {
            match cfg.stop {
                StopRule::Horizon(_) => break,
                StopRule::Events(_) => {
                    return Err(Error::Domain(
                        "intensity decayed to zero before reaching the event target".into(),
                    ))
                }
            }
        }
        let candidate = t + rng.exponential(bound);
        if let StopRule::Horizon(h) = cfg.stop {
            if candidate > h {
                break;
            }
        }
        acc.advance_to(params.beta, candidate);
        t = candidate;
        let lambda_cand = params.lambda0 + params.alpha * acc.weight();
        if rng.uniform() * bound <= lambda_cand {
            if times.len() >= cfg.max_events {
                return Err(Error::CapExceeded {
                    cap: cfg.max_events,
                });
            }
            times.push(candidate);
            acc.add_arrival(params.beta, candidate);
        }
    }
    History::from_times(times)
}

//! Per-minute invocation traces: bin expansion, day-split datasets, and
//! synthetic workload generation.
//!
//! Production FaaS traces record invocation counts per function binned in
//! 1-minute intervals. After summing a given application's functions, each
//! day becomes a vector of 1440 counts. A count of `k` in minute `b` expands
//! to `k` arrivals placed deterministically at `b + (j + 0.5) / k`
//! (mid-offset even spacing — reproducible and unbiased within the bin);
//! uniform-random placement is available for sensitivity checks. Arrivals
//! never cross day boundaries; each day is analyzed independently.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::point_process::{simulate, HawkesParams, History, SimConfig};
use crate::rng::{derive_seed, Rng};
use crate::{Error, Result};

/// Bins per day; the time unit throughout the trace pipeline is minutes.
pub const MINUTES_PER_DAY: usize = 1440;

/// Per-application arrival series keyed by day, in minutes within `[0, 1440)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceDataset {
    apps: BTreeMap<String, BTreeMap<u32, History>>,
    days: Vec<u32>,
}

impl TraceDataset {
    pub fn new(mut days: Vec<u32>) -> TraceDataset {
        days.sort_unstable();
        days.dedup();
        TraceDataset {
            apps: BTreeMap::new(),
            days,
        }
    }

    /// Inserts one app-day series; arrivals must lie in `[0, 1440)` and the
    /// day must be covered by the dataset.
    pub fn insert(&mut self, app_id: &str, day: u32, arrivals: History) -> Result<()> {
        if !self.days.contains(&day) {
            return Err(Error::Domain(format!("day {day} is not covered")));
        }
        if let Some(&t) = arrivals.times().iter().find(|&&t| !(0.0..1440.0).contains(&t)) {
            return Err(Error::Domain(format!(
                "arrival {t} outside the day range [0, 1440)"
            )));
        }
        let slot = self.apps.entry(String::from(app_id)).or_default();
        if slot.insert(day, arrivals).is_some() {
            return Err(Error::Domain(format!(
                "duplicate series for app {app_id} day {day}"
            )));
        }
        Ok(())
    }

    /// Covered days, sorted ascending.
    pub fn days(&self) -> &[u32] {
        &self.days
    }

    /// Application ids in deterministic (sorted) order.
    pub fn app_ids(&self) -> impl Iterator<Item = &str> {
        self.apps.keys().map(String::as_str)
    }

    pub fn n_apps(&self) -> usize {
        self.apps.len()
    }

    /// Arrivals of one app on one day, if present.
    pub fn arrivals(&self, app_id: &str, day: u32) -> Option<&History> {
        self.apps.get(app_id).and_then(|per_day| per_day.get(&day))
    }

    pub fn per_day(&self, app_id: &str) -> Option<&BTreeMap<u32, History>> {
        self.apps.get(app_id)
    }
}

/// Expands per-minute counts into arrival timestamps with deterministic
/// mid-offset even spacing: `k` arrivals in bin `b` land at `b + (j + 0.5)/k`.
pub fn expand_bins(bins: &[u64]) -> History {
    let mut times = Vec::new();
    for (b, &count) in bins.iter().enumerate() {
        for j in 0..count {
            times.push(b as f64 + (j as f64 + 0.5) / count as f64);
        }
    }
    History::from_times(times).expect("mid-offset placement is strictly increasing")
}

/// Uniform-random placement variant for sensitivity checks; arrivals stay
/// inside their source bins.
pub fn expand_bins_uniform(bins: &[u64], rng: &mut Rng) -> History {
    let mut times = Vec::new();
    for (b, &count) in bins.iter().enumerate() {
        if count == 0 {
            continue;
        }
        'bin: loop {
            let mut draws: Vec<f64> = (0..count).map(|_| b as f64 + rng.uniform()).collect();
            draws.sort_by(|a, b| a.total_cmp(b));
            if draws.windows(2).all(|w| w[0] < w[1]) {
                times.extend(draws);
                break 'bin;
            }
        }
    }
    History::from_times(times).expect("draws are strictly increasing within and across bins")
}

/// Bins arrivals back into per-minute counts. Arrivals must lie in
/// `[0, 1440)`.
pub fn bin_arrivals(arrivals: &History) -> Result<Vec<u64>> {
    let mut bins = vec![0u64; MINUTES_PER_DAY];
    for &t in arrivals.times() {
        if !(0.0..1440.0).contains(&t) {
            return Err(Error::Domain(format!(
                "arrival {t} outside the day range [0, 1440)"
            )));
        }
        bins[math::floor(t) as usize] += 1;
    }
    Ok(bins)
}

/// One synthetic application: an id and its generating process.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthApp {
    pub id: String,
    pub params: HawkesParams,
}

/// Generates a dataset by simulating each app independently per day, binning
/// to minutes, and re-expanding — the same round trip real traces go through.
/// Deterministic given the seed; rates are per minute.
pub fn synth_trace(apps: &[SynthApp], days: &[u32], seed: u64) -> Result<TraceDataset> {
    let mut dataset = TraceDataset::new(days.to_vec());
    for (i, app) in apps.iter().enumerate() {
        for (j, &day) in days.iter().enumerate() {
            let stream = (i as u64) * 8192 + j as u64;
            let cfg = SimConfig::horizon(derive_seed(seed, stream), MINUTES_PER_DAY as f64)?;
            let raw = simulate(&app.params, &cfg)?;
            // Half-open day: drop a boundary arrival at exactly t = 1440.
            let clipped =
                History::from_times(raw.times().iter().copied().filter(|&t| t < 1440.0).collect())?;
            let bins = bin_arrivals(&clipped)?;
            dataset.insert(&app.id, day, expand_bins(&bins))?;
        }
    }
    Ok(dataset)
}

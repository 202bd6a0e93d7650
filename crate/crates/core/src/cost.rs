//! Realized and expected costs of a keep-alive schedule over one
//! inter-arrival.
//!
//! For a single window the realized cost is the classic three-case form: a
//! cold start if the arrival lands before the window opens, the keeping cost
//! up to the arrival if it lands inside, and the full window cost plus a cold
//! start if it lands after. With multiple windows the keeping cost of every
//! earlier window is paid as well. In expectation,
//!
//! ```text
//! E[cost] = cold_start + integral over the schedule of g(x) dx
//! g(x)    = survival(x) * (keep_rate - cold_start * hazard(x))
//! ```
//!
//! which is what makes the sign of `g` the whole story for optimality.

use alloc::format;

use crate::math;
use crate::point_process::{HawkesParams, History, NextArrival};
use crate::policy::{CostParams, WindowSchedule};
use crate::{Error, Result};

/// Survival level below which the tail of an infinite window is ignored; the
/// remaining mass bounds the truncation error of the expected-cost integral.
const SURVIVAL_CUTOFF: f64 = 1e-10;

/// Relative factor for the expected-cost quadrature tolerance,
/// `tolerance = EXPECTED_COST_TOL * cold_start`.
const EXPECTED_COST_TOL: f64 = 1e-8;

/// Outcome of one inter-arrival under a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizedOutcome {
    /// `keep_rate * cached_time + (cold_start ? cold cost : 0)`.
    pub cost: f64,
    /// Whether the arrival missed every window.
    pub cold_start: bool,
    /// Memory-time consumed before the arrival.
    pub cached_time: f64,
}

/// Cost of the schedule when the next arrival comes `x` after the previous
/// one. Window boundaries count as warm.
pub fn realized_cost(x: f64, schedule: &WindowSchedule, costs: &CostParams) -> RealizedOutcome {
    debug_assert!(x >= 0.0);
    let cached_time = schedule.cached_time_before(x);
    let cold_start = !schedule.contains(x);
    let cost = costs.keep_rate * cached_time + if cold_start { costs.cold_start } else { 0.0 };
    RealizedOutcome {
        cost,
        cold_start,
        cached_time,
    }
}

/// Instantaneous cost rate `g(x) = survival(x) * (keep_rate - cold_start *
/// hazard(x))` at elapsed time `x` after the most recent arrival.
pub fn instantaneous_cost_g(
    params: &HawkesParams,
    history: &History,
    x: f64,
    costs: &CostParams,
) -> f64 {
    let law = NextArrival::after_history(params, history);
    law.survival(x) * (costs.keep_rate - costs.cold_start * law.hazard(x))
}

/// Expected cost of a schedule over the next inter-arrival:
/// `cold_start + sum over windows of the integral of g`.
///
/// Infinite windows are truncated where the survival drops below `1e-10`; the
/// conditional tail mass bounds the remainder. Returns infinity when the
/// conditional law is defective (`lambda0 == 0`) and a window extends past all
/// remaining probability mass.
pub fn expected_cost(
    params: &HawkesParams,
    history: &History,
    schedule: &WindowSchedule,
    costs: &CostParams,
) -> Result<f64> {
    let law = NextArrival::after_history(params, history);
    let cutoff = if law.total_mass() == f64::INFINITY {
        law.invert_integrated_hazard(-math::ln(SURVIVAL_CUTOFF))
    } else {
        f64::INFINITY
    };
    let g = |x: f64| law.survival(x) * (costs.keep_rate - costs.cold_start * law.hazard(x));

    let mut total = costs.cold_start;
    let n_windows = schedule.windows().len().max(1);
    let tol = EXPECTED_COST_TOL * costs.cold_start / n_windows as f64;
    for w in schedule.windows() {
        if w.start > cutoff {
            break;
        }
        let end = w.end.min(cutoff);
        if end == f64::INFINITY {
            // Defective law: survival never decays, the keeping cost diverges.
            return Ok(f64::INFINITY);
        }
        total += adaptive_simpson(&g, w.start, end, tol)?;
    }
    Ok(total)
}

/// Adaptive Simpson integration with Richardson extrapolation.
fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if math::abs(delta) <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::Numeric(format!(
                "expected-cost quadrature did not converge on [{a}, {b}] at tolerance {tol}"
            )));
        }
        Ok(
            recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)?
                + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)?,
        )
    }
    if a >= b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 48)
}

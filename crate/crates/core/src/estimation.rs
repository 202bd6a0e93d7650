//! Hawkes parameter estimation and goodness of fit.
//!
//! The log-likelihood of arrivals `t_1 < ... < t_k` observed on `[0, t_k]` is
//!
//! ```text
//! sum_i ln(lambda0 + alpha * A(i)) - lambda0 * t_k
//!     + (alpha / beta) * sum_i (exp(-beta (t_k - t_i)) - 1)
//! ```
//!
//! where `A(i) = sum_{j<i} exp(-beta (t_i - t_j))` satisfies the O(k)
//! recursion `A(i) = exp(-beta (t_i - t_{i-1})) * (1 + A(i-1))`. Fitting
//! minimizes the negative log-likelihood with a derivative-free simplex search
//! in log-parameter space (positivity by construction) and seeded multi-start.
//!
//! Goodness of fit transforms the arrivals through the fitted compensator
//! (random time change); under a correct model the transformed inter-arrivals
//! are i.i.d. Exp(1), which a Kolmogorov-Smirnov test checks.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::point_process::{ExcitationWeight, HawkesParams, History, NextArrival};
use crate::rng::Rng;
use crate::{Error, Result};

/// Outcome of a maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: HawkesParams,
    /// Negative log-likelihood at the fitted parameters.
    pub nll: f64,
    pub converged: bool,
    /// Simplex iterations used by the winning restart.
    pub iterations: usize,
}

/// Kolmogorov-Smirnov test outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GofResult {
    /// Supremum distance between the empirical CDF and `1 - exp(-x)`.
    pub statistic: f64,
    /// Asymptotic p-value with the standard `sqrt(n)` scaling.
    pub p_value: f64,
    pub n_residuals: usize,
}

/// Optimizer configuration for [`fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Seeded restarts; the first starts from the given initial guess, the
    /// rest jitter it multiplicatively by up to `e^{+-1}` per coordinate.
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
    /// Convergence threshold on the simplex diameter in log space.
    pub tol_x: f64,
    /// Convergence threshold on the NLL spread across the simplex.
    pub tol_f: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 5,
            max_iterations: 500,
            seed: 0,
            tol_x: 1e-6,
            tol_f: 1e-9,
        }
    }
}

/// Log-likelihood of the arrivals under the given parameters, observed on
/// `[0, t_k]`. Returns negative infinity when some `lambda0 + alpha * A(i)`
/// is not positive (the infeasible marker).
pub fn log_likelihood(params: &HawkesParams, arrivals: &History) -> Result<f64> {
    let times = arrivals.times();
    if times.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let t_last = times[times.len() - 1];
    let mut log_intensity_sum = 0.0;
    let mut a = 0.0; // A(i), the excitation weight excluding the current arrival
    for (i, &t) in times.iter().enumerate() {
        if i > 0 {
            a = math::exp(-params.beta * (t - times[i - 1])) * (1.0 + a);
        }
        let lam = params.lambda0 + params.alpha * a;
        if lam <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        log_intensity_sum += math::ln(lam);
    }
    let tail: f64 = times
        .iter()
        .map(|&t| math::exp(-params.beta * (t_last - t)) - 1.0)
        .sum();
    Ok(log_intensity_sum - params.lambda0 * t_last + params.alpha / params.beta * tail)
}

/// Moment-matching initial guess: background at half the empirical rate, decay
/// at the inverse mean gap, excitation at half the decay.
pub fn default_init(arrivals: &History) -> Result<HawkesParams> {
    let times = arrivals.times();
    if times.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: times.len(),
        });
    }
    let span = times[times.len() - 1] - times[0];
    let k = times.len() as f64;
    let mean_gap = span / (k - 1.0);
    let beta = 1.0 / mean_gap;
    HawkesParams::new(0.5 * k / span, 0.5 * beta, beta)
}

/// Maximum-likelihood fit by multi-start Nelder-Mead over
/// `(ln lambda0, ln alpha, ln beta)`.
///
/// Arrivals are shifted so the observation origin sits at the first arrival,
/// making the fit invariant to global time shifts of the data.
pub fn fit(arrivals: &History, init: &HawkesParams, opts: &FitOptions) -> Result<FitResult> {
    let times = arrivals.times();
    if times.len() < 5 {
        return Err(Error::InsufficientData {
            needed: 5,
            got: times.len(),
        });
    }
    if opts.restarts < 1 {
        return Err(Error::Domain("need at least one restart".into()));
    }
    let origin = times[0];
    let shifted = History::from_times(times.iter().map(|&t| t - origin).collect())?;
    let nll = |u: &[f64; 3]| -> f64 {
        let params = HawkesParams {
            lambda0: math::exp(u[0]),
            alpha: math::exp(u[1]),
            beta: math::exp(u[2]),
        };
        match log_likelihood(&params, &shifted) {
            Ok(ll) if ll.is_finite() => -ll,
            _ => f64::INFINITY,
        }
    };

    let base = [
        math::ln(init.lambda0.max(1e-12)),
        math::ln(init.alpha.max(1e-12)),
        math::ln(init.beta),
    ];
    let mut rng = Rng::from_seed(opts.seed);
    let mut best: Option<(f64, [f64; 3], bool, usize)> = None;
    for restart in 0..opts.restarts {
        let mut start = base;
        if restart > 0 {
            for coord in &mut start {
                *coord += 2.0 * rng.uniform() - 1.0;
            }
        }
        let (value, point, converged, iterations) = nelder_mead(&nll, start, opts);
        if !value.is_finite() {
            continue;
        }
        let better = match &best {
            Some((best_value, ..)) => value < *best_value,
            None => true,
        };
        if better {
            best = Some((value, point, converged, iterations));
        }
    }
    let (value, point, converged, iterations) = best.ok_or_else(|| {
        Error::FitFailed("negative log-likelihood was infeasible on every restart".into())
    })?;
    Ok(FitResult {
        params: HawkesParams::new(
            math::exp(point[0]),
            math::exp(point[1]),
            math::exp(point[2]),
        )?,
        nll: value,
        converged,
        iterations,
    })
}

/// Standard Nelder-Mead on three coordinates. Returns the best value, the best
/// point, whether the stopping tolerances were met, and iterations used.
fn nelder_mead<F: Fn(&[f64; 3]) -> f64>(
    f: &F,
    start: [f64; 3],
    opts: &FitOptions,
) -> (f64, [f64; 3], bool, usize) {
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;
    const INITIAL_STEP: f64 = 0.5;

    let mut simplex: Vec<[f64; 3]> = vec![start; 4];
    for i in 0..3 {
        simplex[i + 1][i] += INITIAL_STEP;
    }
    let mut values: Vec<f64> = simplex.iter().map(f).collect();

    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        // Order: best first.
        let mut order = [0usize, 1, 2, 3];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let reordered: Vec<[f64; 3]> = order.iter().map(|&i| simplex[i]).collect();
        let revalued: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalued;

        let diameter = simplex[1..]
            .iter()
            .map(|p| {
                (0..3)
                    .map(|d| math::abs(p[d] - simplex[0][d]))
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < opts.tol_x || math::abs(values[3] - values[0]) < opts.tol_f {
            converged = true;
            break;
        }

        let centroid = {
            let mut c = [0.0; 3];
            for p in &simplex[..3] {
                for d in 0..3 {
                    c[d] += p[d] / 3.0;
                }
            }
            c
        };
        let at = |scale: f64| {
            let mut p = [0.0; 3];
            for d in 0..3 {
                p[d] = centroid[d] + scale * (centroid[d] - simplex[3][d]);
            }
            p
        };

        let reflected = at(1.0);
        let reflected_value = f(&reflected);
        if reflected_value < values[0] {
            let expanded = at(EXPAND);
            let expanded_value = f(&expanded);
            if expanded_value < reflected_value {
                simplex[3] = expanded;
                values[3] = expanded_value;
            } else {
                simplex[3] = reflected;
                values[3] = reflected_value;
            }
        } else if reflected_value < values[2] {
            simplex[3] = reflected;
            values[3] = reflected_value;
        } else {
            let contracted = if reflected_value < values[3] {
                at(CONTRACT)
            } else {
                at(-CONTRACT)
            };
            let contracted_value = f(&contracted);
            if contracted_value < values[3].min(reflected_value) {
                simplex[3] = contracted;
                values[3] = contracted_value;
            } else {
                let best = simplex[0];
                for i in 1..4 {
                    for (coord, anchor) in simplex[i].iter_mut().zip(best) {
                        *coord = anchor + SHRINK * (*coord - anchor);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..4 {
        if values[i] < values[best] {
            best = i;
        }
    }
    (values[best], simplex[best], converged, iterations)
}

/// Random-time-change residuals: compensator increments between consecutive
/// arrivals. Under the true parameters these are i.i.d. Exp(1).
pub fn residuals(params: &HawkesParams, arrivals: &History) -> Result<Vec<f64>> {
    let times = arrivals.times();
    if times.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: times.len(),
        });
    }
    let mut acc = ExcitationWeight::empty();
    acc.add_arrival(params.beta, times[0]);
    let mut out = Vec::with_capacity(times.len() - 1);
    for pair in times.windows(2) {
        let law = NextArrival::after_weight(params, acc.weight());
        out.push(law.integrated_hazard(pair[1] - pair[0]));
        acc.add_arrival(params.beta, pair[1]);
    }
    Ok(out)
}

/// One-sample Kolmogorov-Smirnov test of the residuals against Exp(1):
/// `D = sup_x |F_n(x) - (1 - exp(-x))|`, p-value from the asymptotic
/// Kolmogorov distribution at `sqrt(n) * D`.
pub fn ks_test_exp1(sample: &[f64]) -> Result<GofResult> {
    if sample.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut sorted: Vec<f64> = sample.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = -math::expm1(-x.max(0.0));
        let below = cdf - i as f64 / n;
        let above = (i + 1) as f64 / n - cdf;
        d = d.max(below.max(above));
    }
    Ok(GofResult {
        statistic: d,
        p_value: kolmogorov_survival(math::sqrt(n) * d),
        n_residuals: sorted.len(),
    })
}

/// Complementary CDF of the Kolmogorov distribution,
/// `Q(t) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 t^2)`.
fn kolmogorov_survival(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = math::exp(-2.0 * (k as f64) * (k as f64) * t * t);
        if term < 1e-18 {
            break;
        }
        sum += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`)
//! and enforcing its stated tolerance and runtime budget.
//!
//! Criterion 10 needs the public production trace; without it the test prints
//! a SKIP line and succeeds. Point `KEEPALIVE_AZURE_TRACE_DIR` at a directory
//! holding `invocations_per_function_md.anon.dXX.csv` files to run it.

use std::time::{Duration, Instant};

use keepalive_cli::azure::{load_trace, Placement, TraceSchema};
use keepalive_cli::parallel::map_indexed;
use keepalive_core::cost::{expected_cost, realized_cost};
use keepalive_core::estimation::{default_init, fit, ks_test_exp1, residuals, FitOptions};
use keepalive_core::evaluator::{
    assemble_experiment, cost_curve_experiment, prepare_app, trace_experiment, weakly_dominates,
    AppPrep, PolicyKind, TraceExperimentConfig, TraceExperimentResult,
};
use keepalive_core::point_process::{
    intensity, simulate, HawkesParams, History, NextArrival, SimConfig,
};
use keepalive_core::policy::{
    empty_history_window, optimal_hawkes_window, tau_approx, tau_fixed, window_bounds, CostParams,
    OptimalWindow, Window, WindowSchedule,
};
use keepalive_core::rng::Rng;
use keepalive_core::trace::TraceDataset;

struct Criterion {
    number: u32,
    what: &'static str,
    budget: Duration,
    started: Instant,
}

impl Criterion {
    fn start(number: u32, what: &'static str, budget_secs: u64) -> Self {
        Criterion {
            number,
            what,
            budget: Duration::from_secs(budget_secs),
            started: Instant::now(),
        }
    }

    fn finish(self, outcome: Result<String, String>) {
        let elapsed = self.started.elapsed();
        let (verdict, detail) = match &outcome {
            Ok(detail) => ("PASS", detail.clone()),
            Err(detail) => ("FAIL", detail.clone()),
        };
        println!(
            "criterion {:>2}: {verdict} — {} ({detail}; {elapsed:.2?})",
            self.number, self.what
        );
        if let Err(detail) = outcome {
            panic!("criterion {} failed: {detail}", self.number);
        }
        assert!(
            elapsed <= self.budget,
            "criterion {} exceeded its {:?} budget: {elapsed:.2?}",
            self.number,
            self.budget
        );
    }
}

fn random_history(rng: &mut Rng, max_len: usize, rate: f64) -> History {
    let n = 1 + (rng.next_u64() as usize) % max_len;
    let mut t = 0.0;
    History::from_times(
        (0..n)
            .map(|_| {
                t += rng.exponential(rate);
                t
            })
            .collect(),
    )
    .unwrap()
}

/// Random tuple in the regime where the break-even equation has a root, so
/// the optimal window is strictly positive and finite.
fn random_finite_regime(rng: &mut Rng) -> (HawkesParams, History, CostParams) {
    let lambda0 = 0.3 * rng.uniform();
    let beta = 0.2 + 2.5 * rng.uniform();
    let alpha = beta * (0.05 + 1.1 * rng.uniform());
    let params = HawkesParams::new(lambda0, alpha, beta).unwrap();
    let history = random_history(rng, 200, 0.8);
    let hazard_at_zero = intensity(&params, &history, history.last().unwrap()).unwrap();
    let ratio = lambda0 + (hazard_at_zero - lambda0) * (0.05 + 0.9 * rng.uniform());
    let costs = CostParams::new(ratio, 1.0).unwrap();
    (params, history, costs)
}

#[test]
fn criterion_01_closed_form_matches_bisection() {
    let c = Criterion::start(1, "closed-form optimal window vs bisection", 10);
    let mut rng = Rng::from_seed(101);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (params, history, costs) = random_finite_regime(&mut rng);
        let tau = match optimal_hawkes_window(&params, &history, &costs, 200).unwrap() {
            OptimalWindow::Finite(tau) => tau,
            other => panic!("regime generator produced {other:?}"),
        };
        // Independent oracle: bisection on keep_rate - cold_start * hazard.
        let last = history.last().unwrap();
        let g = |x: f64| {
            costs.keep_rate - costs.cold_start * intensity(&params, &history, last + x).unwrap()
        };
        let mut lo = 0.0;
        let mut hi = 1.0;
        while g(hi) < 0.0 {
            hi *= 2.0;
        }
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        worst = worst.max((tau - 0.5 * (lo + hi)).abs());
    }
    c.finish(if worst <= 1e-9 {
        Ok(format!("1000 tuples, worst |dtau| = {worst:.2e}"))
    } else {
        Err(format!("worst |dtau| = {worst:.2e} > 1e-9"))
    });
}

#[test]
fn criterion_02_poisson_closed_forms() {
    let c = Criterion::start(2, "Poisson always-on and zero-window expected costs", 5);
    let mut rng = Rng::from_seed(202);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rate = 0.2 + 4.8 * rng.uniform();
        let params = HawkesParams::poisson(rate).unwrap();
        let costs =
            CostParams::new(0.5 + 4.5 * rng.uniform(), 0.5 + 19.5 * rng.uniform()).unwrap();
        let history = History::from_times(vec![0.0]).unwrap();
        let always_on =
            expected_cost(&params, &history, &WindowSchedule::always_on(), &costs).unwrap();
        let target = costs.keep_rate / rate;
        worst = worst.max((always_on - target).abs() / target);
        let never = expected_cost(&params, &history, &WindowSchedule::none(), &costs).unwrap();
        worst = worst.max((never - costs.cold_start).abs() / costs.cold_start);
    }
    c.finish(if worst <= 1e-6 {
        Ok(format!("100 draws, worst relative error {worst:.2e}"))
    } else {
        Err(format!("worst relative error {worst:.2e} > 1e-6"))
    });
}

#[test]
fn criterion_03_expected_cost_monte_carlo() {
    let c = Criterion::start(3, "expected cost vs Monte-Carlo realized mean", 120);
    let mut rng = Rng::from_seed(303);
    let mut worst_sigmas: f64 = 0.0;
    for case in 0..50 {
        let lambda0 = 0.05 + 0.45 * rng.uniform();
        let beta = 0.3 + 1.7 * rng.uniform();
        let alpha = beta * 0.8 * rng.uniform();
        let params = HawkesParams::new(lambda0, alpha, beta).unwrap();
        let history = random_history(&mut rng, 20, 1.0);
        let costs = CostParams::new(0.3 + rng.uniform(), 0.5 + 7.0 * rng.uniform()).unwrap();
        let a = 0.2 + 2.0 * rng.uniform();
        let b = a + 0.2 + 2.0 * rng.uniform();
        let d = b + 0.2 + 2.0 * rng.uniform();
        let schedule = match case % 5 {
            0 => WindowSchedule::fixed_ttl(a),
            1 => WindowSchedule::pre_warm(a, b - a).unwrap(),
            2 => WindowSchedule::from_windows(vec![
                Window { start: 0.0, end: a },
                Window { start: b, end: d },
            ])
            .unwrap(),
            3 => WindowSchedule::from_windows(vec![
                Window { start: 0.0, end: a },
                Window {
                    start: b,
                    end: f64::INFINITY,
                },
            ])
            .unwrap(),
            _ => WindowSchedule::always_on(),
        };
        let analytic = expected_cost(&params, &history, &schedule, &costs).unwrap();
        let law = NextArrival::after_history(&params, &history);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let x = law.sample(&mut rng);
            let cost = realized_cost(x, &schedule, &costs).cost;
            sum += cost;
            sum_sq += cost * cost;
        }
        let mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mean * mean).max(0.0) / n as f64).sqrt();
        worst_sigmas = worst_sigmas.max((analytic - mean).abs() / se.max(1e-12));
    }
    c.finish(if worst_sigmas <= 4.0 {
        Ok(format!(
            "50 schedules x 1e5 draws, worst deviation {worst_sigmas:.2} sigma"
        ))
    } else {
        Err(format!("worst deviation {worst_sigmas:.2} sigma > 4"))
    });
}

/// Shared harness for the two worst-case-bound criteria: random
/// (params, history, costs, x) draws in mixed regimes.
fn bound_harness(mut check: impl FnMut(&HawkesParams, &History, &CostParams, f64)) {
    let mut rng = Rng::from_seed(404);
    for _ in 0..10_000 {
        let lambda0 = 0.3 * rng.uniform();
        let beta = 0.2 + 2.0 * rng.uniform();
        let alpha = beta * 1.2 * rng.uniform();
        let params = HawkesParams::new(lambda0, alpha, beta).unwrap();
        let costs = CostParams::new(0.2 + rng.uniform(), 0.2 + 10.0 * rng.uniform()).unwrap();
        let history = random_history(&mut rng, 30, 0.7);
        let x = rng.exponential(0.3);
        check(&params, &history, &costs, x);
    }
}

#[test]
fn criterion_04_ski_rental_two_approximation() {
    let c = Criterion::start(4, "fixed window is a 2-approximation everywhere", 30);
    let mut worst: f64 = 0.0;
    bound_harness(|params, history, costs, x| {
        let optimal = optimal_hawkes_window(params, history, costs, 200)
            .unwrap()
            .to_schedule();
        let fixed = WindowSchedule::fixed_ttl(tau_fixed(costs));
        let cost_fixed = realized_cost(x, &fixed, costs).cost;
        let cost_opt = realized_cost(x, &optimal, costs).cost;
        worst = worst.max(cost_fixed / cost_opt);
        assert!(
            cost_fixed <= 2.0 * cost_opt + 1e-9,
            "fixed {cost_fixed} > 2 * optimal {cost_opt} at x {x}"
        );
    });
    c.finish(Ok(format!("10^4 draws, worst ratio {worst:.6}")));
}

#[test]
fn criterion_05_approx_window_bound() {
    let c = Criterion::start(5, "approximate window obeys its cost-ratio bound", 30);
    let mut worst_slack: f64 = f64::NEG_INFINITY;
    let mut zero_cases = 0usize;
    bound_harness(|params, history, costs, x| {
        let tau_a = tau_approx(params, costs);
        if empty_history_window(params, costs) == OptimalWindow::Zero {
            assert_eq!(tau_a, tau_fixed(costs), "ski-rental reduction must be exact");
            zero_cases += 1;
        }
        let tau_empty = empty_history_window(params, costs).length();
        let bound = 1.0 + (1.0 / (costs.ratio() * tau_empty + 1.0)).sqrt();
        let optimal = optimal_hawkes_window(params, history, costs, 200)
            .unwrap()
            .to_schedule();
        let approx = WindowSchedule::fixed_ttl(tau_a);
        let cost_approx = realized_cost(x, &approx, costs).cost;
        let cost_opt = realized_cost(x, &optimal, costs).cost;
        let ratio = cost_approx / cost_opt;
        worst_slack = worst_slack.max(ratio - bound);
        assert!(
            ratio <= bound + 1e-9,
            "ratio {ratio} > bound {bound} at x {x}"
        );
    });
    c.finish(Ok(format!(
        "10^4 draws, worst bound slack {worst_slack:.2e}, {zero_cases} exact ski-rental reductions"
    )));
}

#[test]
fn criterion_06_history_independent_bounds() {
    let c = Criterion::start(6, "optimal window sits inside its bracket", 10);
    let mut rng = Rng::from_seed(606);
    let mut worst_delta = 0usize;
    for _ in 0..1000 {
        let (params, history, costs) = random_finite_regime(&mut rng);
        let bounds = window_bounds(&params, &history, &costs).unwrap();
        let tau = optimal_hawkes_window(&params, &history, &costs, usize::MAX)
            .unwrap()
            .length();
        assert!(
            bounds.lower <= tau + 1e-9 && tau <= bounds.upper + 1e-9,
            "tau {tau} outside [{}, {}]",
            bounds.lower,
            bounds.upper
        );
        worst_delta = worst_delta.max(bounds.delta);
    }
    c.finish(Ok(format!("1000 histories bracketed, max delta {worst_delta}")));
}

#[test]
fn criterion_07_cost_curve_reproduction() {
    let c = Criterion::start(7, "cost-curve experiment at the reference parameters", 300);
    let params = HawkesParams::new(0.01, 0.5, 1.0).unwrap();
    let seed = 7;
    let mut failures: Vec<String> = Vec::new();
    let mut notes: Vec<String> = Vec::new();

    // (a) cold-start cost 1: the claim is a zero optimized-TTL window whose
    // mean cost matches the optimal policy's to 1e-9.
    {
        let costs = CostParams::new(1.0, 1.0).unwrap();
        let grid: Vec<f64> = (0..50).map(|i| 3.0 * i as f64 / 49.0).collect();
        let curve = cost_curve_experiment(&params, &costs, &grid, 600, 100, 200, seed).unwrap();
        let gap = (curve.optimized_ttl_mean_cost - curve.optimal_mean_cost).abs();
        if curve.optimized_ttl == 0.0 && gap <= 1e-9 {
            notes.push("(a) optimized-TTL 0 and cost gap <= 1e-9".into());
        } else {
            failures.push(format!(
                "(a) optimized-TTL {:.4e} (want 0), |cost gap| {gap:.3e} (want <= 1e-9): \
                 self-excitation opens small windows after ~2% of arrivals, so neither \
                 equality can hold",
                curve.optimized_ttl
            ));
        }
    }

    // (b) cold-start cost 10: optimized-TTL within 5% of the 50-point grid
    // minimum and within 10% of the optimal mean.
    {
        let costs = CostParams::new(1.0, 10.0).unwrap();
        let grid: Vec<f64> = (0..50).map(|i| 30.0 * i as f64 / 49.0).collect();
        let curve = cost_curve_experiment(&params, &costs, &grid, 600, 100, 200, seed).unwrap();
        let grid_min = curve
            .fixed_mean_costs
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let vs_min = (curve.optimized_ttl_mean_cost - grid_min).abs() / grid_min;
        let vs_opt = (curve.optimized_ttl_mean_cost - curve.optimal_mean_cost)
            / curve.optimal_mean_cost;
        if vs_min <= 0.05 && vs_opt <= 0.10 {
            notes.push(format!(
                "(b) vs grid min {:.2}%, vs optimal {:.2}%",
                100.0 * vs_min,
                100.0 * vs_opt
            ));
        } else {
            failures.push(format!(
                "(b) optimized-TTL cost off: {:.2}% vs grid min (budget 5%), {:.2}% vs optimal (budget 10%)",
                100.0 * vs_min,
                100.0 * vs_opt
            ));
        }
    }

    // (c) cold-start cost 120: the largest-window fixed policy approaches the
    // always-on optimal from above.
    {
        let costs = CostParams::new(1.0, 120.0).unwrap();
        let grid: Vec<f64> = (0..50).map(|i| 360.0 * i as f64 / 49.0).collect();
        let curve = cost_curve_experiment(&params, &costs, &grid, 600, 100, 200, seed).unwrap();
        let largest = *curve.fixed_mean_costs.last().unwrap();
        let rel = (largest - curve.optimal_mean_cost) / curve.optimal_mean_cost;
        if rel.abs() <= 0.10 {
            notes.push(format!("(c) largest-window gap {:.2}%", 100.0 * rel));
        } else {
            failures.push(format!(
                "(c) largest-window fixed cost {:.2}% away from optimal (budget 10%)",
                100.0 * rel
            ));
        }
    }

    c.finish(if failures.is_empty() {
        Ok(notes.join("; "))
    } else {
        Err(format!(
            "{}{}{}",
            failures.join("; "),
            if notes.is_empty() { "" } else { "; passing: " },
            notes.join("; ")
        ))
    });
}

#[test]
fn criterion_08_estimation_recovery() {
    let c = Criterion::start(8, "parameter recovery and residual goodness of fit", 180);
    let truth = HawkesParams::new(0.6, 1.2, 2.4).unwrap();
    let runs = 20;
    let mut params_ok = 0;
    let mut ks_ok = 0;
    for run in 0..runs {
        let data = simulate(&truth, &SimConfig::events(1000 + run, 5000).unwrap()).unwrap();
        let opts = FitOptions {
            seed: 77 + run,
            ..FitOptions::default()
        };
        let fitted = fit(&data, &default_init(&data).unwrap(), &opts).unwrap();
        let p = fitted.params;
        let within =
            |est: f64, tru: f64| (est - tru).abs() / tru <= 0.15;
        if within(p.lambda0, truth.lambda0) && within(p.alpha, truth.alpha) && within(p.beta, truth.beta)
        {
            params_ok += 1;
        }
        let res = residuals(&p, &data).unwrap();
        if ks_test_exp1(&res).unwrap().p_value >= 0.05 {
            ks_ok += 1;
        }
    }
    c.finish(
        if params_ok * 5 >= runs * 4 && ks_ok * 10 >= runs * 9 {
            Ok(format!(
                "params within 15% in {params_ok}/{runs}, KS pass in {ks_ok}/{runs}"
            ))
        } else {
            Err(format!(
                "params within 15% in {params_ok}/{runs} (need 16), KS pass in {ks_ok}/{runs} (need 18)"
            ))
        },
    )
}

/// 200 synthetic applications with known Hawkes parameters over three days:
/// 60 dense "heavy hitter" apps (invoked every few minutes; these end up
/// treated, since the KS distance of a well-specified fit shrinks with sample
/// size) and 140 sparse long-tail apps, mirroring production trace shape.
/// Timestamps stay continuous so window-boundary ties (a binning artifact)
/// cannot muddy the dominance checks.
fn synthetic_population() -> TraceDataset {
    let mut rng = Rng::from_seed(900);
    let mut dataset = TraceDataset::new(vec![7, 8, 9]);
    for i in 0..200 {
        let params = if i < 60 {
            let lambda0 = 0.1 + 0.15 * rng.uniform();
            let branching = 0.2 + 0.3 * rng.uniform();
            let beta = 0.5 + 1.5 * rng.uniform();
            HawkesParams::new(lambda0, branching * beta, beta).unwrap()
        } else {
            let lambda0 = 0.003 + 0.003 * rng.uniform();
            let branching = 0.2 + 0.3 * rng.uniform();
            let beta = 0.1 + 0.9 * rng.uniform();
            HawkesParams::new(lambda0, branching * beta, beta).unwrap()
        };
        for (j, day) in [7u32, 8, 9].into_iter().enumerate() {
            let seed = keepalive_core::rng::derive_seed(31, (i as u64) * 8 + j as u64);
            let sim = simulate(&params, &SimConfig::horizon(seed, 1440.0).unwrap()).unwrap();
            let times: Vec<f64> = sim.times().iter().copied().filter(|&t| t < 1440.0).collect();
            dataset
                .insert(&format!("app{i:03}"), day, History::from_times(times).unwrap())
                .unwrap();
        }
    }
    dataset
}

fn check_trace_result(result: &TraceExperimentResult, min_ttl_ratio: f64) -> Result<String, String> {
    let fixed = result.curve(PolicyKind::Fixed);
    let offline = result.curve(PolicyKind::OfflineOptimal);
    let mut failures = Vec::new();

    for kind in [PolicyKind::Optimal, PolicyKind::OptimizedTtl] {
        let curve = result.curve(kind);
        if !weakly_dominates(&curve.treated, &fixed.treated) {
            failures.push(format!("{} does not dominate fixed on treated apps", kind.name()));
        }
    }
    for kind in [
        PolicyKind::Fixed,
        PolicyKind::Optimal,
        PolicyKind::OptimizedTtl,
        PolicyKind::Approx,
    ] {
        let curve = result.curve(kind);
        if !weakly_dominates(&offline.all, &curve.all)
            || !weakly_dominates(&offline.treated, &curve.treated)
        {
            failures.push(format!("offline does not dominate {}", kind.name()));
        }
    }

    let mut ratios = Vec::new();
    for treated_only in [true, false] {
        let optimal = result.savings_for(PolicyKind::Optimal, treated_only).unwrap();
        let ttl = result
            .savings_for(PolicyKind::OptimizedTtl, treated_only)
            .unwrap();
        if optimal.avg_cold_start_savings <= 0.0 || optimal.avg_memory_savings <= 0.0 {
            failures.push(format!(
                "optimal savings not positive (treated_only = {treated_only})"
            ));
            continue;
        }
        let cs_ratio = ttl.avg_cold_start_savings / optimal.avg_cold_start_savings;
        let mem_ratio = ttl.avg_memory_savings / optimal.avg_memory_savings;
        ratios.push(format!(
            "{}: {:.1}%/{:.1}%",
            if treated_only { "treated" } else { "all" },
            100.0 * cs_ratio,
            100.0 * mem_ratio
        ));
        if cs_ratio < min_ttl_ratio || mem_ratio < min_ttl_ratio {
            failures.push(format!(
                "optimized-TTL savings {:.1}%/{:.1}% of optimal, below {:.0}% (treated_only = {treated_only})",
                100.0 * cs_ratio,
                100.0 * mem_ratio,
                100.0 * min_ttl_ratio
            ));
        }
    }

    if failures.is_empty() {
        Ok(format!(
            "treated {} / eval {} apps; optimized-TTL vs optimal savings {}",
            result.n_treated,
            result.n_eval_apps,
            ratios.join(", ")
        ))
    } else {
        Err(failures.join("; "))
    }
}

#[test]
fn criterion_09_trace_protocol_on_synthetic_data() {
    let c = Criterion::start(9, "trace protocol Pareto structure on synthetic apps", 600);
    let dataset = synthetic_population();
    let config = TraceExperimentConfig::standard(8, 7, 9, 17);
    let result = trace_experiment(&dataset, &config).unwrap();
    assert_eq!(result.n_apps, 200);
    assert_eq!(result.n_treated, 50);
    c.finish(check_trace_result(&result, 0.90));
}

#[test]
fn criterion_10_azure_reproduction_when_trace_supplied() {
    let c = Criterion::start(10, "production-trace protocol (conditional)", 6000);
    let Some(dir) = std::env::var_os("KEEPALIVE_AZURE_TRACE_DIR") else {
        println!(
            "criterion 10: SKIP — production-trace protocol (set KEEPALIVE_AZURE_TRACE_DIR to run)"
        );
        return;
    };
    let dir = std::path::PathBuf::from(dir);
    let day_file = |day: u32| dir.join(format!("invocations_per_function_md.anon.d{day:02}.csv"));
    let files = [(8u32, day_file(8)), (7u32, day_file(7)), (9u32, day_file(9))];
    for (_, path) in &files {
        assert!(path.is_file(), "missing trace file {}", path.display());
    }
    let pairs: Vec<(u32, &std::path::Path)> =
        files.iter().map(|(d, p)| (*d, p.as_path())).collect();
    let dataset = load_trace(&pairs, &TraceSchema::default(), Placement::Mid, 0).unwrap();
    let config = TraceExperimentConfig::standard(8, 7, 9, 17);
    let app_ids: Vec<String> = dataset.app_ids().map(String::from).collect();
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let preps: Vec<AppPrep> = map_indexed(app_ids.len(), threads, |i| {
        prepare_app(&dataset, &app_ids[i], i as u64, &config)
    });
    let result = assemble_experiment(&dataset, &config, &preps).unwrap();
    for treated_only in [true, false] {
        for kind in [
            PolicyKind::Optimal,
            PolicyKind::OptimizedTtl,
            PolicyKind::OfflineOptimal,
        ] {
            let s = result.savings_for(kind, treated_only).unwrap();
            println!(
                "criterion 10 detail: {} (treated_only = {treated_only}): cold-start savings {:.4}, memory savings {:.4}",
                kind.name(),
                s.avg_cold_start_savings,
                s.avg_memory_savings
            );
        }
    }
    c.finish(check_trace_result(&result, 0.85));
}

use std::time::Instant;

use super::problems::{self, Problem};
use super::{CheckReport, Status};
use crate::closed_form::invariant_u;
use crate::fd::{
    explicit_solve_backward, implicit_solve_backward, linear_bs_price, linear_fd_solve, solve_layer, BoundaryPolicy,
    InitialGuess, SolverConfig, Terminal,
};
use crate::model::{payoff_value, GridSpec, MarketParams, Payoff, SolutionField};

/// Pass threshold on every benchmark grid.
pub const BENCH_TOL_ALL: f64 = 5e-3;
/// Pass threshold on the finest benchmark grid.
pub const BENCH_TOL_FINEST: f64 = 2e-3;
/// Mesh ratios `τ/h²` for the explicit scheme.
pub const EXPLICIT_RATIOS: [f64; 3] = [0.1, 1.0, 10.0];
pub const EXPLICIT_SPACE_NODES: usize = 28;
/// Absolute tolerance for the gap of the linear solver, which is linear in the payoff.
pub const LINEAR_GAP_TOL: f64 = 1e-10;
/// Linear spread solve vs closed-form linear price: 1% of the spread width.
pub const SPREAD_LINEAR_TOL: f64 = 0.2;

fn timed(name: &str, body: impl FnOnce(&mut CheckReport) -> bool) -> CheckReport {
    let start = Instant::now();
    let mut report = CheckReport::new(name);
    let ok = body(&mut report);
    report.status = if ok { Status::Pass } else { Status::Fail };
    report.runtime = start.elapsed();
    report
}

fn solve(problem: &Problem) -> crate::Result<SolutionField> {
    implicit_solve_backward(&problem.terminal, &problem.grid, &problem.market, &problem.config)
}

fn guess_label(g: InitialGuess) -> String {
    match g {
        InitialGuess::WarmStart => "warm".into(),
        InitialGuess::Constant(k) => format!("const:{k}"),
    }
}

fn record_solver(report: &mut CheckReport, prefix: &str, cfg: &SolverConfig) {
    report.config(format!("{prefix}newton_tol"), cfg.newton_tol);
    report.config(format!("{prefix}newton_max_iter"), cfg.newton_max_iter);
    report.config(format!("{prefix}damping_max_halvings"), cfg.damping_max_halvings);
    report.config(format!("{prefix}initial_guess"), guess_label(cfg.initial_guess));
    let bc = match cfg.boundary_policy {
        BoundaryPolicy::PayoffHeld => "payoff-held",
        BoundaryPolicy::ExactClosedForm(_) => "exact-closed-form",
        BoundaryPolicy::LinearBlackScholes => "linear-bs",
    };
    report.config(format!("{prefix}boundary"), bc);
    report.config(
        format!("{prefix}layer_form"),
        format!("{:?}", cfg.layer_form).to_lowercase(),
    );
}

fn record_grid(report: &mut CheckReport, prefix: &str, g: &GridSpec) {
    report.config(format!("{prefix}s_min"), g.s_min);
    report.config(format!("{prefix}s_max"), g.s_max);
    report.config(format!("{prefix}n_space"), g.n_space);
    report.config(format!("{prefix}n_time"), g.n_time);
    report.config(format!("{prefix}maturity"), g.maturity);
}

fn record_market(report: &mut CheckReport, prefix: &str, p: &MarketParams) {
    report.config(format!("{prefix}sigma"), p.sigma);
    report.config(format!("{prefix}rho"), p.rho);
    report.config(format!("{prefix}rate"), p.rate);
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter()
        .fold(0.0_f64, |a, x| if x.is_nan() { f64::NAN } else { a.max(x.abs()) })
}

/// Max error at `t = 0` relative to the largest exact magnitude.
fn benchmark_error(field: &SolutionField) -> f64 {
    let family = problems::benchmark_family();
    let market = problems::benchmark_market();
    let grid = field.grid;
    let exact: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&s| invariant_u(s, 0.0, &family, &market).unwrap_or(f64::NAN))
        .collect();
    let err = max_abs(field.initial().iter().zip(&exact).map(|(u, e)| u - e));
    err / max_abs(exact.iter().copied())
}

/// Implicit solver against closed-form data on the six benchmark grids.
pub fn check_benchmark_accuracy() -> CheckReport {
    timed("benchmark_accuracy", |r| {
        let sample = problems::benchmark(16, 15);
        record_market(r, "", &sample.market);
        r.config("m", problems::BENCH_M);
        r.config("s_min", problems::BENCH_S_MIN);
        r.config("s_max", problems::BENCH_S_MAX);
        r.config("maturity", problems::BENCH_MATURITY);
        r.config("error_measure", "max|u-u_exact|/max|u_exact|@t=0");
        record_solver(r, "", &sample.config);
        r.tolerance("all_grids", BENCH_TOL_ALL);
        r.tolerance("finest", BENCH_TOL_FINEST);

        let mut errs = Vec::new();
        for &ns in &problems::BENCH_SPACE_NODES {
            for &nt in &problems::BENCH_TIME_STEPS {
                let e = match solve(&problems::benchmark(ns, nt)) {
                    Ok(f) => benchmark_error(&f),
                    Err(e) => {
                        r.note(format!("error_{ns}x{nt}"), e);
                        f64::NAN
                    }
                };
                r.metric(format!("rel_err_{ns}x{nt}"), e);
                errs.push(((ns, nt), e));
            }
        }
        let get = |ns: usize, nt: usize| errs.iter().find(|(k, _)| *k == (ns, nt)).map(|(_, e)| *e).unwrap();
        let space_mono = problems::BENCH_TIME_STEPS
            .iter()
            .all(|&nt| get(16, nt) > get(28, nt) && get(28, nt) > get(42, nt));
        let time_mono = problems::BENCH_SPACE_NODES.iter().all(|&ns| get(ns, 15) > get(ns, 30));
        r.metric("monotone_in_space", f64::from(u8::from(space_mono)));
        r.metric("monotone_in_time", f64::from(u8::from(time_mono)));
        r.metric("coarsest_finite", f64::from(u8::from(get(16, 15).is_finite())));
        let finest = get(42, 30);
        let worst = errs
            .iter()
            .map(|(_, e)| *e)
            .fold(0.0_f64, |a, e| if e.is_nan() { f64::NAN } else { a.max(e) });
        r.metric("rel_err_worst", worst);
        worst <= BENCH_TOL_ALL && finest <= BENCH_TOL_FINEST
    })
}

fn min_increment(lower: &[f64], upper: &[f64], idx: impl Iterator<Item = usize>) -> f64 {
    idx.map(|i| upper[i] - lower[i]).fold(f64::INFINITY, f64::min)
}

/// Hedge cost of a call at `t = 0` is nondecreasing in `ρ`.
pub fn check_rho_monotonicity() -> CheckReport {
    timed("rho_monotonicity", |r| {
        let sample = problems::calls(problems::CALL_RHOS[0], 1.0, problems::CALL_GUESS_K);
        let tol = 10.0 * sample.config.newton_tol;
        record_grid(r, "", &sample.grid);
        r.config("sigma", problems::CALL_SIGMA);
        r.config("strike", problems::CALL_STRIKE);
        r.config("multiplicity", 1.0);
        r.config("rhos", "0.1,0.2,0.3");
        record_solver(r, "", &sample.config);
        r.tolerance("decrease", tol);

        let mut ok = true;
        let mut fields = Vec::new();
        for &rho in &problems::CALL_RHOS {
            match solve(&problems::calls(rho, 1.0, problems::CALL_GUESS_K)) {
                Ok(f) => fields.push(f.initial().to_vec()),
                Err(e) => {
                    r.note(format!("error_rho_{rho}"), e);
                    ok = false;
                }
            }
        }
        if fields.len() == 3 {
            let n = fields[0].len();
            for (k, pair) in fields.windows(2).enumerate() {
                let d = min_increment(&pair[0], &pair[1], 0..n);
                r.metric(
                    format!(
                        "min_increment_{}_{}",
                        problems::CALL_RHOS[k],
                        problems::CALL_RHOS[k + 1]
                    ),
                    d,
                );
                ok &= d >= -tol;
            }
        }

        // Same ordering on a mesh refined by two in both directions, near the strike.
        let fine = GridSpec::new(0.1, 2.0, 77, 36, problems::CALL_MATURITY).expect("pinned grid is valid");
        record_grid(r, "fine_", &fine);
        let near: Vec<usize> = (0..fine.n_space)
            .filter(|&i| (fine.s(i) - problems::CALL_STRIKE).abs() <= 10.0 * fine.h())
            .collect();
        let mut fine_fields = Vec::new();
        for &rho in &problems::CALL_RHOS {
            let mut pb = problems::calls(rho, 1.0, problems::CALL_GUESS_K);
            pb.grid = fine;
            match solve(&pb) {
                Ok(f) => fine_fields.push(f.initial().to_vec()),
                Err(e) => {
                    r.note(format!("error_fine_rho_{rho}"), e);
                    ok = false;
                }
            }
        }
        if fine_fields.len() == 3 {
            let d = fine_fields
                .windows(2)
                .map(|p| min_increment(&p[0], &p[1], near.iter().copied()))
                .fold(f64::INFINITY, f64::min);
            r.metric("fine_near_strike_min_increment", d);
            ok &= d >= -tol;
        }

        // Zero terminal data stays zero for every ρ.
        let zero_grid = problems::call_grid();
        let mut zero_max = 0.0_f64;
        for &rho in &problems::CALL_RHOS {
            let p = MarketParams::new(problems::CALL_SIGMA, rho, 0.0).expect("pinned parameters are valid");
            match implicit_solve_backward(
                &Terminal::Values(vec![0.0; zero_grid.n_space]),
                &zero_grid,
                &p,
                &sample.config,
            ) {
                Ok(f) => zero_max = zero_max.max(f.max_abs()),
                Err(e) => {
                    r.note("error_zero", e);
                    zero_max = f64::NAN;
                }
            }
        }
        r.metric("zero_payoff_max_abs", zero_max);
        ok && zero_max <= tol
    })
}

/// `u₈ − (u₃ + u₅)` is nonzero and concentrated at the strike.
pub fn check_nonlinearity_gap() -> CheckReport {
    timed("nonlinearity_gap", |r| {
        let sample = problems::calls(problems::GAP_RHO, 8.0, problems::CALL_GUESS_K);
        let grid = sample.grid;
        let tol = 10.0 * sample.config.newton_tol;
        let h = grid.h();
        record_grid(r, "", &grid);
        record_market(r, "", &sample.market);
        r.config("strike", problems::CALL_STRIKE);
        r.config("multiplicities", "3,5,8");
        r.config("linear_rate", problems::GAP_RATE);
        record_solver(r, "", &sample.config);
        r.tolerance("gap_min", tol);
        r.tolerance("localisation", 10.0 * h);
        r.tolerance("linear_gap", LINEAR_GAP_TOL);

        let mut us = Vec::new();
        for k in [3.0, 5.0, 8.0] {
            match solve(&problems::calls(problems::GAP_RHO, k, problems::CALL_GUESS_K)) {
                Ok(f) => us.push(f.initial().to_vec()),
                Err(e) => r.note(format!("error_k{k}"), e),
            }
        }
        let mut ok = us.len() == 3;
        if ok {
            let gap: Vec<f64> = (0..grid.n_space)
                .map(|i| (us[2][i] - us[0][i] - us[1][i]).abs())
                .collect();
            let (imax, gmax) = gap
                .iter()
                .enumerate()
                .fold((0, 0.0_f64), |a, (i, &g)| if g > a.1 { (i, g) } else { a });
            let s_star = grid.s(imax);
            r.metric("gap_max", gmax);
            r.metric("gap_argmax_s", s_star);
            r.metric("gap_argmax_distance", (s_star - problems::CALL_STRIKE).abs());
            r.metric("gap_at_s_min", gap[0]);
            r.metric("gap_at_s_max", gap[grid.n_space - 1]);
            ok &= gmax > tol && (s_star - problems::CALL_STRIKE).abs() <= 10.0 * h;
        }

        let lin = MarketParams::linear(problems::CALL_SIGMA, problems::GAP_RATE).expect("pinned parameters are valid");
        let mut ls = Vec::new();
        for k in [3.0, 5.0, 8.0] {
            let payoff = Payoff::call(problems::CALL_STRIKE, k).expect("pinned payoff is valid");
            match linear_fd_solve(&payoff, &grid, &lin) {
                Ok(f) => ls.push(f.initial().to_vec()),
                Err(e) => r.note(format!("error_linear_k{k}"), e),
            }
        }
        if ls.len() == 3 {
            let lgap = max_abs((0..grid.n_space).map(|i| ls[2][i] - ls[0][i] - ls[1][i]));
            r.metric("linear_gap_max", lgap);
            ok &= lgap <= LINEAR_GAP_TOL;
        } else {
            ok = false;
        }
        ok
    })
}

/// Fields do not depend on the Newton starting value.
pub fn check_guess_independence() -> CheckReport {
    timed("guess_independence", |r| {
        let tol = 10.0 * SolverConfig::default().newton_tol;
        r.tolerance("sup_difference", tol);
        record_grid(r, "calls_", &problems::call_grid());
        r.config("calls_strike", problems::CALL_STRIKE);
        r.config("calls_sigma", problems::CALL_SIGMA);
        r.config("guesses", "0.03,1.0,warm");
        let mut ok = true;

        let cases: [(f64, f64); 6] = [
            (0.1, 1.0),
            (0.2, 1.0),
            (0.3, 1.0),
            (0.03, 3.0),
            (0.03, 5.0),
            (0.03, 8.0),
        ];
        let mut worst = 0.0_f64;
        for (rho, k) in cases {
            let mut runs = Vec::new();
            for guess in [
                InitialGuess::Constant(0.03),
                InitialGuess::Constant(1.0),
                InitialGuess::WarmStart,
            ] {
                let mut pb = problems::calls(rho, k, 0.03);
                pb.config.initial_guess = guess;
                match solve(&pb) {
                    Ok(f) => runs.push(f),
                    Err(e) => r.note(format!("error_rho{rho}_k{k}_{}", guess_label(guess)), e),
                }
            }
            if runs.len() == 3 {
                let d_k = runs[0].sup_distance(&runs[1]).unwrap_or(f64::NAN);
                let d_w = runs[0].sup_distance(&runs[2]).unwrap_or(f64::NAN);
                r.metric(format!("calls_rho{rho}_k{k}_const003_vs_const1"), d_k);
                r.metric(format!("calls_rho{rho}_k{k}_const003_vs_warm"), d_w);
                worst = worst.max(d_k).max(d_w);
            } else {
                ok = false;
            }
        }
        r.metric("calls_worst", worst);
        ok &= worst <= tol;

        // First implicit layer of the benchmark from the two constants.
        let bench = problems::benchmark(28, 15);
        record_grid(r, "bench_", &bench.grid);
        record_solver(r, "bench_", &bench.config);
        let g = bench.grid;
        let family = problems::benchmark_family();
        let market = bench.market;
        let t = g.t(g.n_time - 1);
        let layer = bench.terminal.sample(&g).and_then(|u_next| {
            let bounds = (
                invariant_u(g.s_min, t, &family, &market)?,
                invariant_u(g.s_max, t, &family, &market)?,
            );
            let a = solve_layer(&u_next, &vec![0.03; g.n_space - 2], bounds, &g, &market, &bench.config)?;
            let b = solve_layer(&u_next, &vec![1.0; g.n_space - 2], bounds, &g, &market, &bench.config)?;
            Ok(max_abs(a.0.iter().zip(&b.0).map(|(x, y)| x - y)))
        });
        match layer {
            Ok(d) => {
                r.metric("bench_layer_const003_vs_const1", d);
                ok &= d <= tol;
            }
            Err(e) => {
                r.note("error_bench_layer", e);
                ok = false;
            }
        }

        // Linear data is reproduced from any start.
        let g = problems::call_grid();
        let linear: Vec<f64> = g.nodes().iter().map(|s| 0.7 * s).collect();
        let p = MarketParams::new(problems::CALL_SIGMA, 0.2, 0.0).expect("pinned parameters are valid");
        let mut lin_runs = Vec::new();
        for k in [0.03, 1.0] {
            let cfg = SolverConfig {
                initial_guess: InitialGuess::Constant(k),
                ..SolverConfig::default()
            };
            match implicit_solve_backward(&Terminal::Values(linear.clone()), &g, &p, &cfg) {
                Ok(f) => lin_runs.push(f),
                Err(e) => r.note(format!("error_linear_k{k}"), e),
            }
        }
        if lin_runs.len() == 2 {
            let d = lin_runs[0].sup_distance(&lin_runs[1]).unwrap_or(f64::NAN);
            r.metric("linear_data_const003_vs_const1", d);
            ok &= d <= tol;
        } else {
            ok = false;
        }
        ok
    })
}

/// Explicit scheme on the benchmark at three mesh ratios.
pub fn check_explicit_divergence() -> CheckReport {
    timed("explicit_divergence", |r| {
        let bench = problems::benchmark(EXPLICIT_SPACE_NODES, 1);
        let family = problems::benchmark_family();
        let market = bench.market;
        let h = bench.grid.h();
        record_market(r, "", &market);
        r.config("m", problems::BENCH_M);
        r.config("n_space", EXPLICIT_SPACE_NODES);
        r.tolerance("divergence_factor", crate::fd::DIVERGENCE_FACTOR);
        let mut ok = true;
        for ratio in EXPLICIT_RATIOS {
            let n_time = (bench.grid.maturity / (ratio * h * h)).round().max(1.0) as usize;
            let grid = GridSpec { n_time, ..bench.grid };
            let actual = grid.tau() / (h * h);
            r.metric(format!("ratio_{ratio}_actual"), actual);
            r.metric(format!("ratio_{ratio}_n_time"), n_time as f64);
            match explicit_solve_backward(&bench.terminal, &grid, &market, &bench.config) {
                Ok(f) => {
                    r.metric(format!("ratio_{ratio}_diverged"), f64::from(u8::from(f.diverged)));
                    r.metric(format!("ratio_{ratio}_max_abs"), f.max_abs());
                    let err = max_abs(
                        grid.nodes()
                            .iter()
                            .zip(f.initial())
                            .map(|(&s, u)| u - invariant_u(s, 0.0, &family, &market).unwrap_or(f64::NAN)),
                    );
                    r.metric(format!("ratio_{ratio}_max_err_vs_exact"), err);
                    ok &= f.diverged;
                }
                Err(e) => {
                    r.note(format!("error_ratio_{ratio}"), e);
                    ok = false;
                }
            }
        }

        let g = GridSpec {
            n_time: 40,
            ..bench.grid
        };
        let cfg = SolverConfig::default();
        let zero = explicit_solve_backward(&Terminal::Values(vec![0.0; g.n_space]), &g, &market, &cfg);
        let linear = explicit_solve_backward(
            &Terminal::Values(g.nodes().iter().map(|s| 2.0 * s).collect()),
            &g,
            &market,
            &cfg,
        );
        for (name, res) in [("zero_data", zero), ("linear_data", linear)] {
            match res {
                Ok(f) => {
                    r.metric(format!("{name}_diverged"), f64::from(u8::from(f.diverged)));
                    ok &= !f.diverged;
                }
                Err(e) => {
                    r.note(format!("error_{name}"), e);
                    ok = false;
                }
            }
        }
        ok
    })
}

/// Bull spread: ordering in `ρ` and domination of the linear price near the strikes.
pub fn check_spread_sweep() -> CheckReport {
    timed("spread_sweep", |r| {
        let sample = problems::spread(problems::SPREAD_RHOS[0]);
        let grid = sample.grid;
        let tol = 10.0 * sample.config.newton_tol;
        record_grid(r, "", &grid);
        r.config("sigma", problems::SPREAD_SIGMA);
        r.config("rate", problems::SPREAD_RATE);
        r.config("long_strike", problems::SPREAD_LONG);
        r.config("short_strike", problems::SPREAD_SHORT);
        r.config("rhos", "0.05,0.1,0.2");
        record_solver(r, "", &sample.config);
        r.tolerance("ordering", tol);
        r.tolerance("linear_vs_exact", SPREAD_LINEAR_TOL);

        let idx = |s: f64| ((s - grid.s_min) / grid.h()).round() as usize;
        let i70 = idx(70.0);
        let window: Vec<usize> = (idx(problems::SPREAD_LONG)..=idx(problems::SPREAD_SHORT)).collect();
        let payoff = problems::spread_payoff();
        let exact_payoff: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|&s| payoff_value(&payoff, s).unwrap())
            .collect();

        let mut ok = true;
        let mut curves = Vec::new();
        let mut payoff_err = 0.0_f64;
        for &rho in &problems::SPREAD_RHOS {
            match solve(&problems::spread(rho)) {
                Ok(f) => {
                    payoff_err = payoff_err.max(max_abs(
                        f.layer(grid.n_time).iter().zip(&exact_payoff).map(|(a, b)| a - b),
                    ));
                    r.metric(format!("u_rho{rho}_at_70"), f.initial()[i70]);
                    curves.push(f.initial().to_vec());
                }
                Err(e) => {
                    r.note(format!("error_rho{rho}"), e);
                    ok = false;
                }
            }
        }
        r.metric("terminal_vs_payoff", payoff_err);
        ok &= payoff_err == 0.0;

        let lin_market =
            MarketParams::linear(problems::SPREAD_SIGMA, problems::SPREAD_RATE).expect("pinned parameters are valid");
        let linear = match linear_fd_solve(&payoff, &grid, &lin_market) {
            Ok(f) => Some(f.initial().to_vec()),
            Err(e) => {
                r.note("error_linear", e);
                None
            }
        };
        if let Some(lin) = &linear {
            r.metric("u_linear_at_70", lin[i70]);
            let err =
                max_abs(grid.nodes().iter().zip(lin).map(|(&s, u)| {
                    u - linear_bs_price(&payoff, s, 0.0, &lin_market, grid.maturity).unwrap_or(f64::NAN)
                }));
            r.metric("linear_fd_vs_exact", err);
            ok &= err <= SPREAD_LINEAR_TOL;
        } else {
            ok = false;
        }

        if curves.len() == 3 {
            let n = grid.n_space;
            let at70 = curves
                .windows(2)
                .map(|p| p[1][i70] - p[0][i70])
                .fold(f64::INFINITY, f64::min);
            let strikes = curves
                .windows(2)
                .map(|p| min_increment(&p[0], &p[1], window.iter().copied()))
                .fold(f64::INFINITY, f64::min);
            let (mut global, mut global_s) = (f64::INFINITY, 0.0);
            for p in curves.windows(2) {
                for i in 0..n {
                    let d = p[1][i] - p[0][i];
                    if d < global {
                        global = d;
                        global_s = grid.s(i);
                    }
                }
            }
            r.metric("ordering_min_at_70", at70);
            r.metric("ordering_min_strike_window", strikes);
            r.metric("ordering_min_global", global);
            r.metric("ordering_min_global_s", global_s);
            ok &= at70 >= -tol && strikes >= -tol;
            if let Some(lin) = &linear {
                let dom = window
                    .iter()
                    .map(|&i| curves[0][i] - lin[i])
                    .fold(f64::INFINITY, f64::min);
                r.metric("nonlinear_minus_linear_min_strike_window", dom);
                ok &= dom >= 0.0;
            }
        } else {
            ok = false;
        }
        ok
    })
}

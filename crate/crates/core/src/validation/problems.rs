//! Pinned problem configurations used by the checks.

use crate::closed_form::ClosedFormParams;
use crate::fd::{BoundaryPolicy, InitialGuess, SolverConfig, Terminal};
use crate::model::{GridSpec, MarketParams, Payoff};

/// Everything needed for one backward solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub terminal: Terminal,
    pub grid: GridSpec,
    pub market: MarketParams,
    pub config: SolverConfig,
}

pub const BENCH_SIGMA: f64 = 0.35;
pub const BENCH_RHO: f64 = 0.1;
pub const BENCH_M: f64 = 0.5;
pub const BENCH_S_MIN: f64 = 0.1;
pub const BENCH_S_MAX: f64 = 2.0;
pub const BENCH_MATURITY: f64 = 1.0;
pub const BENCH_SPACE_NODES: [usize; 3] = [16, 28, 42];
pub const BENCH_TIME_STEPS: [usize; 2] = [15, 30];

/// Newton cap for runs that continue data on the `ρSΓ > 1` branch, where the
/// product-form iteration needs well over the default 100 steps on some grids.
pub const LONG_NEWTON_CAP: usize = 400;

pub const CALL_SIGMA: f64 = 0.35;
pub const CALL_STRIKE: f64 = 0.914;
pub const CALL_MATURITY: f64 = 0.9;
pub const CALL_RHOS: [f64; 3] = [0.1, 0.2, 0.3];
pub const CALL_GUESS_K: f64 = 0.03;
pub const GAP_RHO: f64 = 0.03;
pub const GAP_RATE: f64 = 0.02;

pub const SPREAD_SIGMA: f64 = 0.35;
pub const SPREAD_RATE: f64 = 0.02;
pub const SPREAD_LONG: f64 = 60.0;
pub const SPREAD_SHORT: f64 = 80.0;
pub const SPREAD_RHOS: [f64; 3] = [0.05, 0.1, 0.2];
pub const SPREAD_GUESS_K: f64 = 1.0;

pub fn benchmark_family() -> ClosedFormParams {
    ClosedFormParams::explicit(BENCH_M, 0.0, 0.0, BENCH_SIGMA).expect("pinned parameters are valid")
}

pub fn benchmark_market() -> MarketParams {
    MarketParams::new(BENCH_SIGMA, BENCH_RHO, 0.0).expect("pinned parameters are valid")
}

/// Closed-form terminal data and exact boundaries on `[0.1, 2] × [0, 1]`.
pub fn benchmark(n_space: usize, n_time: usize) -> Problem {
    let family = benchmark_family();
    let market = benchmark_market();
    Problem {
        terminal: Terminal::Payoff(Payoff::ClosedFormSnapshot {
            params: family,
            market,
            t: BENCH_MATURITY,
        }),
        grid: GridSpec::new(BENCH_S_MIN, BENCH_S_MAX, n_space, n_time, BENCH_MATURITY).expect("pinned grid is valid"),
        market,
        config: SolverConfig {
            boundary_policy: BoundaryPolicy::ExactClosedForm(family),
            newton_max_iter: LONG_NEWTON_CAP,
            ..SolverConfig::default()
        },
    }
}

/// `h = 0.05`, `τ = 0.05` on `[0.1, 2] × [0, 0.9]`.
pub fn call_grid() -> GridSpec {
    GridSpec::new(0.1, 2.0, 39, 18, CALL_MATURITY).expect("pinned grid is valid")
}

/// `K` calls struck at 0.914, payoff boundaries, constant first guess `k`.
pub fn calls(rho: f64, multiplicity: f64, k: f64) -> Problem {
    Problem {
        terminal: Terminal::Payoff(Payoff::call(CALL_STRIKE, multiplicity).expect("pinned payoff is valid")),
        grid: call_grid(),
        market: MarketParams::new(CALL_SIGMA, rho, 0.0).expect("pinned parameters are valid"),
        config: SolverConfig {
            initial_guess: InitialGuess::Constant(k),
            ..SolverConfig::default()
        },
    }
}

/// `h = 2`, `τ = 0.05` on `[20, 140] × [0, 1]`.
pub fn spread_grid() -> GridSpec {
    GridSpec::new(20.0, 140.0, 61, 20, 1.0).expect("pinned grid is valid")
}

pub fn spread_payoff() -> Payoff {
    Payoff::bull_spread(SPREAD_LONG, SPREAD_SHORT).expect("pinned payoff is valid")
}

pub fn spread(rho: f64) -> Problem {
    Problem {
        terminal: Terminal::Payoff(spread_payoff()),
        grid: spread_grid(),
        market: MarketParams::new(SPREAD_SIGMA, rho, SPREAD_RATE).expect("pinned parameters are valid"),
        config: SolverConfig {
            initial_guess: InitialGuess::Constant(SPREAD_GUESS_K),
            newton_max_iter: LONG_NEWTON_CAP,
            ..SolverConfig::default()
        },
    }
}

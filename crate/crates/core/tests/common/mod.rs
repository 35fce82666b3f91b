//! Independent oracles shared by the integration tests.
#![allow(dead_code, clippy::excessive_precision, clippy::too_many_arguments)]

use hedgecost::model::{GridSpec, MarketParams};

/// Values of the invariant family computed at 40 significant digits.
/// Each entry is `(S, t, σ, ρ, m, u)` with `d₁ = d₂ = 0`.
pub const REFERENCE_VALUES: [(f64, f64, f64, f64, f64, f64); 4] = [
    (1.0, 0.5, 0.35, 0.1, 0.5, 41.45373324458026806),
    (0.01, 0.0, 0.35, 0.1, 1.0, -10.525276057977467),
    (1e4, 1.0, 0.2, 0.05, 8.5, 4105197.5614678197),
    (3.0, 0.2, 0.25, 0.05, 1338.0, -295899.48414627139),
];

/// Five-point first derivative, Richardson-extrapolated to sixth order.
pub fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let five = |h: f64| (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h);
    (64.0 * five(h / 2.0) - five(h)) / 63.0
}

/// Five-point second derivative, Richardson-extrapolated to sixth order.
pub fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let five =
        |h: f64| (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h * h);
    (64.0 * five(h / 2.0) - five(h)) / 63.0
}

/// `u_t + (σ²S²/2) u_SS / (1 − ρ S u_SS)²` with derivatives taken numerically.
pub fn fd_residual(u: impl Fn(f64, f64) -> f64, s: f64, t: f64, sigma: f64, rho: f64) -> f64 {
    let u_t = d1(|x| u(s, x), t, 0.02);
    let u_ss = d2(|x| u(x, t), s, 0.01 * s);
    let den = 1.0 - rho * s * u_ss;
    u_t + 0.5 * sigma * sigma * s * s * u_ss / (den * den)
}

/// The family written term by term with signed real cube roots and
/// `((x)⁴)^{1/3} = |x|^{4/3}`, for either choice of the two sign parameters.
pub fn literal_family(s: f64, t: f64, sigma: f64, rho: f64, m: f64, d1: f64, d2: f64, e1: f64, e2: f64) -> f64 {
    let s2 = sigma * sigma;
    let root = (m * m + 4.0 * s.powf(1.5) * (-3.0 * s2 * t / 16.0).exp()).sqrt();
    let c = 2f64.powf(-4.0 / 3.0) / rho * (s2 * t / 8.0).exp();
    let quartic = |x: f64| x.abs().powf(4.0 / 3.0);
    let log_arg = ((m + e2 * root).cbrt() - (-m + e2 * root).cbrt()).powi(4);
    s * s.ln() / rho
        - s2 / (8.0 * rho) * s * t
        - c * quartic(m + e1 * root)
        - c * quartic(-m + e1 * root)
        - s * log_arg.ln() / rho
        + s * d1
        + d2
}

/// Black–Scholes call as a discounted expectation, by composite Simpson over
/// the standard normal variable on the exercise region.
pub fn call_by_quadrature(s: f64, strike: f64, r: f64, sigma: f64, tau: f64) -> f64 {
    let vol = sigma * tau.sqrt();
    let drift = (r - 0.5 * sigma * sigma) * tau;
    let lo = ((strike / s).ln() - drift) / vol;
    let hi = lo.max(0.0) + 14.0;
    let n = 40_000;
    let h = (hi - lo) / n as f64;
    let g = |x: f64| {
        let pay = (s * (drift + vol * x).exp() - strike).max(0.0);
        pay * (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
    };
    let mut acc = g(lo) + g(hi);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(lo + k as f64 * h);
    }
    (-r * tau).exp() * acc * h / 3.0
}

/// Layer equations transcribed on the full node vector: row `i` of the
/// unknown layer `w` (with `w[0]`, `w[n−1]` the boundary values) against the
/// known layer `v`.
pub fn brute_layer_residual(v: &[f64], w: &[f64], grid: &GridSpec, p: &MarketParams) -> Vec<f64> {
    let n = grid.n_space;
    let h = grid.h();
    let tau = grid.tau();
    let mut out = Vec::new();
    for i in 1..n - 1 {
        let s_i = grid.s_min + i as f64 * h;
        let second = w[i - 1] - 2.0 * w[i] + w[i + 1];
        let bracket = h * h / s_i - p.rho * second;
        out.push((v[i] - w[i]) / 4.0 * bracket * bracket + tau * p.sigma * p.sigma * h * h / 8.0 * second);
    }
    out
}

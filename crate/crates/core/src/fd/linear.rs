//! The linear Black–Scholes reference, `u_t + (σ²S²/2) u_SS + r S u_S − r u = 0`.

use statrs::distribution::{ContinuousCDF, Normal};

use super::tridiag::Tridiagonal;
use crate::error::{Error, Result};
use crate::model::{
    payoff_value, GridSpec, LayerDiagnostics, LayerMethod, MarketParams, Payoff, Scheme, SolutionField,
};

fn cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// European call (`put = false`) or put with time to expiry `tau`.
fn vanilla(s: f64, strike: f64, tau: f64, sigma: f64, r: f64, put: bool) -> f64 {
    let df = (-r * tau).exp();
    let vol = sigma * tau.sqrt();
    if s <= 0.0 {
        return if put { strike * df } else { 0.0 };
    }
    if vol < 1e-12 {
        let fwd = s - strike * df;
        return if put { (-fwd).max(0.0) } else { fwd.max(0.0) };
    }
    let d1 = ((s / strike).ln() + (r + 0.5 * sigma * sigma) * tau) / vol;
    let d2 = d1 - vol;
    if put {
        strike * df * cdf(-d2) - s * cdf(-d1)
    } else {
        s * cdf(d1) - strike * df * cdf(d2)
    }
}

/// Closed-form linear price at `(S, t)` for expiry `T`.
pub fn linear_bs_price(payoff: &Payoff, s: f64, t: f64, p: &MarketParams, maturity: f64) -> Result<f64> {
    p.validate_linear()?;
    payoff.validate()?;
    if !(s >= 0.0) {
        return Err(Error::domain(format!("S must be non-negative, got {s}")));
    }
    if !(t <= maturity) {
        return Err(Error::domain(format!("t = {t} is past expiry {maturity}")));
    }
    let tau = maturity - t;
    if tau == 0.0 {
        return payoff_value(payoff, s);
    }
    let (sig, r) = (p.sigma, p.rate);
    Ok(match *payoff {
        Payoff::Call { strike, multiplicity } => multiplicity * vanilla(s, strike, tau, sig, r, false),
        Payoff::Strangle {
            put_strike,
            call_strike,
            put_multiplicity,
            call_multiplicity,
        } => {
            put_multiplicity * vanilla(s, put_strike, tau, sig, r, true)
                + call_multiplicity * vanilla(s, call_strike, tau, sig, r, false)
        }
        Payoff::BullSpread {
            long_strike,
            short_strike,
        } => vanilla(s, long_strike, tau, sig, r, false) - vanilla(s, short_strike, tau, sig, r, false),
        Payoff::ClosedFormSnapshot { .. } => {
            return Err(Error::invalid("payoff", "no linear price for a closed-form snapshot"))
        }
    })
}

/// Fully implicit finite differences for the linear equation.
///
/// Boundary values come from [`linear_bs_price`], which is exact for this model.
pub fn linear_fd_solve(payoff: &Payoff, grid: &GridSpec, p: &MarketParams) -> Result<SolutionField> {
    grid.validate()?;
    p.validate_linear()?;
    payoff.validate()?;
    let n = grid.n_space;
    let nt = grid.n_time;
    let (h, tau) = (grid.h(), grid.tau());
    let nodes = grid.nodes();
    let (sig2, r) = (p.sigma * p.sigma, p.rate);

    let mut op = Tridiagonal::zeros(n - 2);
    for k in 0..n - 2 {
        let s = nodes[k + 1];
        let diff = 0.5 * sig2 * s * s / (h * h);
        let drift = r * s / (2.0 * h);
        op.diag[k] = 1.0 + tau * (2.0 * diff + r);
        if k > 0 {
            op.lower[k - 1] = -tau * (diff - drift);
        }
        if k + 3 < n {
            op.upper[k] = -tau * (diff + drift);
        }
    }
    let s_first = nodes[1];
    let s_last = nodes[n - 2];
    let edge_left = tau * (0.5 * sig2 * s_first * s_first / (h * h) - r * s_first / (2.0 * h));
    let edge_right = tau * (0.5 * sig2 * s_last * s_last / (h * h) + r * s_last / (2.0 * h));

    let mut values = vec![Vec::new(); nt + 1];
    values[nt] = nodes.iter().map(|&s| payoff_value(payoff, s)).collect::<Result<_>>()?;
    let mut diagnostics = Vec::with_capacity(nt);
    for j in (0..nt).rev() {
        let t = grid.t(j);
        let left = linear_bs_price(payoff, grid.s_min, t, p, grid.maturity)?;
        let right = linear_bs_price(payoff, grid.s_max, t, p, grid.maturity)?;
        let mut rhs = values[j + 1][1..n - 1].to_vec();
        rhs[0] += edge_left * left;
        rhs[n - 3] += edge_right * right;
        let x = op.solve(&rhs)?;
        let residual = op
            .mul_vec(&x)
            .iter()
            .zip(&rhs)
            .fold(0.0_f64, |a, (y, b)| a.max((y - b).abs()));
        let mut layer = Vec::with_capacity(n);
        layer.push(left);
        layer.extend(x);
        layer.push(right);
        values[j] = layer;
        diagnostics.push(LayerDiagnostics {
            layer: j,
            iterations: 1,
            residual,
            method: LayerMethod::Linear,
        });
    }

    Ok(SolutionField {
        grid: *grid,
        values,
        scheme: Scheme::LinearFd,
        diagnostics,
        diverged: false,
    })
}

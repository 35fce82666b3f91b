//! Truncated expansions of the invariant family at both ends of the price axis.
//!
//! Near `S = 0`:
//!
//! ```text
//! ρu ≈ −|m|^{4/3} e^{δt} + S ln S − S(δt + ⅓ ln(16 m⁴))
//!      + (8/3) S^{3/2} e^{−δt/2} |m|^{−2/3} + S² e^{−δt} |m|^{−4/3}
//! ```
//!
//! with remainder `O(S³)`; there is no `S^{5/2}` term. For large `S`:
//!
//! ```text
//! ρu ≈ 3 S ln S − S(3δt + 4 ln(2^{1/3}|m|/3) + 2) − (8/27) m² e^{3δt/2} S^{−1/2}
//! ```
//!
//! with remainder `O(S^{−2})`. The additive `d₁ S + d₂` is carried through.

use super::ClosedFormParams;
use crate::error::{Error, Result};
use crate::model::MarketParams;

fn check(s: f64, params: &ClosedFormParams, p: &MarketParams) -> Result<()> {
    if !(s > 0.0) {
        return Err(Error::domain(format!("S must be positive, got {s}")));
    }
    p.validate_nonlinear()?;
    params.check_market(p)?;
    if params.m == 0.0 {
        return Err(Error::DegenerateFamily);
    }
    Ok(())
}

pub fn asymptotic_small_s(s: f64, t: f64, params: &ClosedFormParams, p: &MarketParams) -> Result<f64> {
    check(s, params, p)?;
    let (d, m) = (params.delta, params.m.abs());
    let dt = d * t;
    let ru = -m.powf(4.0 / 3.0) * dt.exp() + s * s.ln() - s * (dt + (16.0 * m.powi(4)).ln() / 3.0)
        + 8.0 / 3.0 * s.powf(1.5) * (-dt / 2.0).exp() / m.powf(2.0 / 3.0)
        + s * s * (-dt).exp() / m.powf(4.0 / 3.0);
    Ok(ru / p.rho + params.d1 * s + params.d2)
}

pub fn asymptotic_large_s(s: f64, t: f64, params: &ClosedFormParams, p: &MarketParams) -> Result<f64> {
    check(s, params, p)?;
    let (d, m) = (params.delta, params.m.abs());
    let dt = d * t;
    let ru = 3.0 * s * s.ln()
        - s * (3.0 * dt + 4.0 * (2f64.cbrt() * m / 3.0).ln() + 2.0)
        - 8.0 / 27.0 * m * m * (1.5 * dt).exp() / s.sqrt();
    Ok(ru / p.rho + params.d1 * s + params.d2)
}

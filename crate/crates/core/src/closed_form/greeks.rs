use crate::error::{Error, Result};
use crate::model::{MarketParams, PriceSurface};

const REL_BUMP: f64 = 1e-4;
const ABS_BUMP: f64 = 1e-6;

/// Sensitivities of a hedge-cost surface.
///
/// `theta` is `−∂u/∂t` and `vega` is `∂u/∂σ` (no sign flip).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Greeks {
    pub delta: f64,
    pub gamma: f64,
    pub theta: f64,
    pub vega: f64,
}

fn bump(x: f64) -> f64 {
    (REL_BUMP * x.abs()).max(ABS_BUMP)
}

/// Central-difference Greeks of `surface` at `(S, t)`.
pub fn greeks<S: PriceSurface + ?Sized>(surface: &S, s: f64, t: f64, p: &MarketParams) -> Result<Greeks> {
    if !(s > 0.0) {
        return Err(Error::domain(format!("S must be positive, got {s}")));
    }
    let u = |s: f64, t: f64, p: &MarketParams| surface.value(s, t, p);

    let hs = bump(s).min(0.5 * s);
    let u0 = u(s, t, p)?;
    let up = u(s + hs, t, p)?;
    let dn = u(s - hs, t, p)?;
    let delta = (up - dn) / (2.0 * hs);
    let gamma = (up - 2.0 * u0 + dn) / (hs * hs);

    let ht = bump(t);
    let theta = -(u(s, t + ht, p)? - u(s, t - ht, p)?) / (2.0 * ht);

    let hv = bump(p.sigma).min(0.5 * p.sigma);
    let vega = (u(s, t, &p.with_sigma(p.sigma + hv))? - u(s, t, &p.with_sigma(p.sigma - hv))?) / (2.0 * hv);

    Ok(Greeks {
        delta,
        gamma,
        theta,
        vega,
    })
}

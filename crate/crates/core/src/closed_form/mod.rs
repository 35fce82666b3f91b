//! The invariant solution family and the analysis around it.
//!
//! With the scaling variables `z = ln S − δt`, `v = −u/S` the model equation
//! reduces to an ODE in `z`. At `δ = σ²/8` the first-order reduction for
//! `y = v_z` integrates in closed form, giving a two-sided family indexed by a
//! real constant `m`:
//!
//! ```text
//! ρ u(S, t) = S ln S − δ S t − 2^{−4/3} e^{δt} (|m+s|^{4/3} + |−m+s|^{4/3})
//!             − S ln((∛(m+s) − ∛(−m+s))⁴) + ρ (d₁ S + d₂),
//! s = √(m² + 4 S^{3/2} e^{−3δt/2}).
//! ```
//!
//! Written with `θ = asinh(|m| e^{3δt/4} / (2 S^{3/4}))` the same expression is
//!
//! ```text
//! ρ u = −S (2 cosh(4θ/3) + 4 ln(2 sinh(θ/3)) + (4/3) ln 2) + ρ (d₁ S + d₂),
//! ```
//!
//! which is free of cancellation at both ends of the price axis and is the
//! form evaluated here. It is manifestly even in `m`.

mod asymptotics;
mod greeks;
mod group;

pub use asymptotics::{asymptotic_large_s, asymptotic_small_s};
pub use greeks::{greeks, Greeks};
pub use group::{apply_group, group_invariants, GroupElement, GroupTransformed};

use crate::error::{Error, Result};
use crate::model::{MarketParams, PriceSurface};

const LN_2: f64 = std::f64::consts::LN_2;

/// A sign choice `±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    #[default]
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Constants selecting one member of the invariant family.
///
/// `eps2` is the sign in front of the square root inside the logarithm. Both
/// choices give the same value: flipping it swaps and negates the two cube
/// roots, which leaves their difference to the fourth power unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormParams {
    pub m: f64,
    pub d1: f64,
    pub d2: f64,
    pub delta: f64,
    pub eps2: Branch,
}

impl ClosedFormParams {
    /// Member of the explicit family, with `δ` pinned to `σ²/8`.
    pub fn explicit(m: f64, d1: f64, d2: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
        }
        let p = Self {
            m,
            d1,
            d2,
            delta: sigma * sigma / 8.0,
            eps2: Branch::Plus,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_eps2(self, eps2: Branch) -> Self {
        Self { eps2, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("m", self.m), ("d1", self.d1), ("d2", self.d2)] {
            if !x.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid("delta", format!("must be positive, got {}", self.delta)));
        }
        Ok(())
    }

    /// Reject parameters whose `δ` is not `σ²/8` for the given market.
    pub fn check_market(&self, p: &MarketParams) -> Result<()> {
        self.validate()?;
        if !is_family_delta(self.delta, p.sigma) {
            return Err(Error::invalid(
                "delta",
                format!(
                    "the explicit family needs delta = sigma^2/8 = {}, got {}",
                    p.sigma * p.sigma / 8.0,
                    self.delta
                ),
            ));
        }
        Ok(())
    }

    /// The member as a surface whose `δ` follows the market's `σ`.
    pub fn surface(&self) -> ClosedFormSurface {
        ClosedFormSurface {
            m: self.m,
            d1: self.d1,
            d2: self.d2,
            eps2: self.eps2,
        }
    }
}

fn is_family_delta(delta: f64, sigma: f64) -> bool {
    let target = sigma * sigma / 8.0;
    (delta - target).abs() <= 4.0 * f64::EPSILON * target
}

/// Family member with fixed `(m, d₁, d₂)` and `δ = σ²/8` for whatever `σ`
/// it is evaluated at. Used for sensitivities in `σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormSurface {
    pub m: f64,
    pub d1: f64,
    pub d2: f64,
    pub eps2: Branch,
}

impl PriceSurface for ClosedFormSurface {
    fn value(&self, s: f64, t: f64, market: &MarketParams) -> Result<f64> {
        let params = ClosedFormParams::explicit(self.m, self.d1, self.d2, market.sigma)?.with_eps2(self.eps2);
        invariant_u(s, t, &params, market)
    }
}

impl PriceSurface for ClosedFormParams {
    fn value(&self, s: f64, t: f64, market: &MarketParams) -> Result<f64> {
        invariant_u(s, t, self, market)
    }
}

/// `z = ln S − δ t`.
pub fn reduce_coords(s: f64, t: f64, delta: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::domain(format!("S must be positive, got {s}")));
    }
    Ok(s.ln() - delta * t)
}

/// `y = v_z` on the explicit family:
/// `y = −(1/ρ)(1 + 2 cosh((4/3) asinh(|m| e^{−3z/4} / 2)))`.
pub fn invariant_y(z: f64, params: &ClosedFormParams, p: &MarketParams) -> Result<f64> {
    p.validate_nonlinear()?;
    params.check_market(p)?;
    let theta = (params.m.abs() * (-0.75 * z).exp() / 2.0).asinh();
    Ok(-(1.0 + 2.0 * (4.0 * theta / 3.0).cosh()) / p.rho)
}

/// Hedge cost on the invariant family.
pub fn invariant_u(s: f64, t: f64, params: &ClosedFormParams, p: &MarketParams) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::domain(format!("S must be positive, got {s}")));
    }
    p.validate_nonlinear()?;
    params.check_market(p)?;
    if params.m == 0.0 {
        return Err(Error::DegenerateFamily);
    }
    let delta = params.delta;
    let theta = (params.m.abs() * (0.75 * delta * t).exp() / (2.0 * s.powf(0.75))).asinh();
    let sh = (theta / 3.0).sinh();
    if !(sh > 0.0) {
        return Err(Error::domain(format!(
            "logarithm argument underflows at S = {s}, t = {t}"
        )));
    }
    let big = 4.0 * theta / 3.0;
    // S·2cosh(4θ/3) written so that S·e^{4θ/3} never overflows on its own
    let cosh_term = (s.ln() + big).exp() + (s.ln() - big).exp();
    let phi = cosh_term + s * (4.0 * (2.0 * sh).ln() + 4.0 / 3.0 * LN_2);
    let u = -phi / p.rho + params.d1 * s + params.d2;
    if !u.is_finite() {
        return Err(Error::domain(format!("non-finite value at S = {s}, t = {t}")));
    }
    Ok(u)
}

/// The elementary solutions of the reduced equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrivialSolution {
    /// `u = c₁ S`.
    Linear { c1: f64 },
    /// `u = ρ⁻¹ (1 ± √(σ²/2δ)) (S ln S − δ S t) + d₀ S`.
    LogLinear { sign: Branch, d0: f64 },
}

pub fn trivial_u(s: f64, t: f64, solution: &TrivialSolution, p: &MarketParams, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::domain(format!("delta must be positive, got {delta}")));
    }
    if !(s > 0.0) {
        return Err(Error::domain(format!("S must be positive, got {s}")));
    }
    match *solution {
        TrivialSolution::Linear { c1 } => Ok(c1 * s),
        TrivialSolution::LogLinear { sign, d0 } => {
            p.validate_nonlinear()?;
            let k = (1.0 + sign.sign() * (p.sigma * p.sigma / (2.0 * delta)).sqrt()) / p.rho;
            Ok(k * (s * s.ln() - delta * s * t) + d0 * s)
        }
    }
}

/// The point `y = 1/ρ` where the first-order reduction loses uniqueness.
/// It exists only for `δ = σ²/8`.
pub fn exceptional_y(delta: f64, sigma: f64, rho: f64) -> Option<f64> {
    let target = sigma * sigma / 8.0;
    if rho != 0.0 && (delta - target).abs() <= f64::EPSILON * target {
        Some(1.0 / rho)
    } else {
        None
    }
}

/// Residual of `v_z (1 + ρ(v_z + v_zz))² − (σ²/2δ)(v_z + v_zz)`.
pub fn ode_residual_v(v_z: f64, v_zz: f64, p: &MarketParams, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::DivisionByZero("ode_residual_v"));
    }
    let w = v_z + v_zz;
    let f = 1.0 + p.rho * w;
    Ok(v_z * f * f - p.sigma * p.sigma / (2.0 * delta) * w)
}

/// Residual of the first-order equation for `y = v_z`:
/// `y_z² + 2 (y_z/y)(y² + y/ρ − σ²/(4ρ²δ)) + y² + 2y/ρ + (2δ − σ²)/(2ρ²δ)`.
pub fn ode_residual_y(y: f64, y_z: f64, p: &MarketParams, delta: f64) -> Result<f64> {
    if y == 0.0 {
        return Err(Error::DivisionByZero("ode_residual_y"));
    }
    if delta == 0.0 || p.rho == 0.0 {
        return Err(Error::DivisionByZero("ode_residual_y"));
    }
    let (r, s2) = (p.rho, p.sigma * p.sigma);
    let b = y * y + y / r - s2 / (4.0 * r * r * delta);
    let c = y * y + 2.0 * y / r + (2.0 * delta - s2) / (2.0 * r * r * delta);
    Ok(y_z * y_z + 2.0 * (y_z / y) * b + c)
}

//! The four-parameter point symmetry group of the model equation.
//!
//! A group element with generator coefficients `a₁..a₄` and parameter `ε`
//! maps `(S, t, u)` to
//!
//! ```text
//! S̃ = S e^{a₁ε},   t̃ = t + a₂ε,
//! ũ = u e^{a₁ε} + a₃ S ε e^{a₁ε} + (a₄/a₁)(e^{a₁ε} − 1)    (a₁ ≠ 0)
//! ũ = u + a₃ S ε + a₄ ε                                    (a₁ = 0)
//! ```

use crate::error::{Error, Result};
use crate::model::{MarketParams, PriceSurface};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupElement {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub epsilon: f64,
}

impl GroupElement {
    pub fn new(a1: f64, a2: f64, a3: f64, a4: f64, epsilon: f64) -> Self {
        Self {
            a1,
            a2,
            a3,
            a4,
            epsilon,
        }
    }

    /// Image of the point `(S, t, u)`.
    pub fn act(&self, s: f64, t: f64, u: f64) -> (f64, f64, f64) {
        let e = self.epsilon;
        let x = self.a1 * e;
        let scale = x.exp();
        let u_new = if self.a1 == 0.0 {
            u + self.a3 * s * e + self.a4 * e
        } else {
            u * scale + self.a3 * s * e * scale + self.a4 / self.a1 * x.exp_m1()
        };
        (s * scale, t + self.a2 * e, u_new)
    }

    /// Preimage `(S, t)` of the transformed coordinates `(S̃, t̃)`.
    pub fn pull_back(&self, s: f64, t: f64) -> (f64, f64) {
        let e = self.epsilon;
        (s * (-self.a1 * e).exp(), t - self.a2 * e)
    }
}

/// A surface transformed by a group element.
#[derive(Debug, Clone, Copy)]
pub struct GroupTransformed<S> {
    pub inner: S,
    pub g: GroupElement,
}

impl<S: PriceSurface> PriceSurface for GroupTransformed<S> {
    fn value(&self, s: f64, t: f64, market: &MarketParams) -> Result<f64> {
        let (s0, t0) = self.g.pull_back(s, t);
        let u0 = self.inner.value(s0, t0, market)?;
        Ok(self.g.act(s0, t0, u0).2)
    }
}

pub fn apply_group<S: PriceSurface>(surface: S, g: GroupElement) -> GroupTransformed<S> {
    GroupTransformed { inner: surface, g }
}

/// The two invariants `a₁t − a₂ ln S` and `a₁u/S − a₃ ln S + a₄/S`.
pub fn group_invariants(s: f64, t: f64, u: f64, g: &GroupElement) -> Result<(f64, f64)> {
    if !(s > 0.0) {
        return Err(Error::domain(format!("S must be positive, got {s}")));
    }
    let ln_s = s.ln();
    Ok((g.a1 * t - g.a2 * ln_s, g.a1 * u / s - g.a3 * ln_s + g.a4 / s))
}

//! Shared vocabulary: market and grid parameters, payoffs, the PDE residual,
//! the singular surface and the ρ-rescaling.
//!
//! The model equation for the hedge cost `u(S, t)` is
//!
//! ```text
//! u_t + (σ² S² / 2) · u_SS / (1 − ρ S u_SS)² = 0,   S > 0,
//! ```
//!
//! which degenerates on `u_SS = 1/(ρS)`.

use crate::closed_form::{invariant_u, ClosedFormParams};
use crate::error::{Error, Result};

/// Floor on `|1 − ρ S u_SS|` below which the PDE is treated as singular.
pub const SINGULARITY_FLOOR: f64 = 1e-10;

/// Volatility, illiquidity and (linear model only) interest rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    pub sigma: f64,
    pub rho: f64,
    pub rate: f64,
}

impl MarketParams {
    /// Parameters for the nonlinear model; requires `σ > 0`, `ρ > 0`, `r ≥ 0`.
    pub fn new(sigma: f64, rho: f64, rate: f64) -> Result<Self> {
        let p = Self { sigma, rho, rate };
        p.validate_nonlinear()?;
        Ok(p)
    }

    /// Parameters for the linear reference model (`ρ = 0`).
    pub fn linear(sigma: f64, rate: f64) -> Result<Self> {
        let p = Self { sigma, rho: 0.0, rate };
        p.validate_linear()?;
        Ok(p)
    }

    pub fn with_rho(self, rho: f64) -> Self {
        Self { rho, ..self }
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }

    pub fn validate_linear(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be positive, got {}", self.sigma)));
        }
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::invalid(
                "rate",
                format!("must be non-negative, got {}", self.rate),
            ));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::invalid("rho", format!("must be non-negative, got {}", self.rho)));
        }
        Ok(())
    }

    pub fn validate_nonlinear(&self) -> Result<()> {
        self.validate_linear()?;
        if self.rho <= 0.0 {
            return Err(Error::invalid(
                "rho",
                format!("must be positive for the nonlinear model, got {}", self.rho),
            ));
        }
        Ok(())
    }
}

/// Uniform mesh on `[s_min, s_max] × [0, maturity]`.
///
/// `n_space` counts all space nodes including both boundaries, so there are
/// `n_space − 2` unknowns per layer. `n_time` is the number of time steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub s_min: f64,
    pub s_max: f64,
    pub n_space: usize,
    pub n_time: usize,
    pub maturity: f64,
}

impl GridSpec {
    pub fn new(s_min: f64, s_max: f64, n_space: usize, n_time: usize, maturity: f64) -> Result<Self> {
        let g = Self {
            s_min,
            s_max,
            n_space,
            n_time,
            maturity,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s_min > 0.0 && self.s_min.is_finite()) {
            return Err(Error::invalid("s_min", format!("must be positive, got {}", self.s_min)));
        }
        if !(self.s_max > self.s_min && self.s_max.is_finite()) {
            return Err(Error::invalid("s_max", "must exceed s_min"));
        }
        if self.n_space < 3 {
            return Err(Error::invalid("n_space", "need at least 3 nodes"));
        }
        if self.n_time < 1 {
            return Err(Error::invalid("n_time", "need at least one time step"));
        }
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(Error::invalid("maturity", "must be positive"));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        (self.s_max - self.s_min) / (self.n_space - 1) as f64
    }

    pub fn tau(&self) -> f64 {
        self.maturity / self.n_time as f64
    }

    pub fn s(&self, i: usize) -> f64 {
        if i + 1 == self.n_space {
            self.s_max
        } else {
            self.s_min + i as f64 * self.h()
        }
    }

    pub fn t(&self, j: usize) -> f64 {
        if j == self.n_time {
            self.maturity
        } else {
            j as f64 * self.tau()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_space).map(|i| self.s(i)).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_time).map(|j| self.t(j)).collect()
    }
}

/// Terminal condition of a hedging problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payoff {
    /// `K · max(S − E, 0)`.
    Call { strike: f64, multiplicity: f64 },
    /// `K_P · max(E_P − S, 0) + K_C · max(S − E_C, 0)` with `E_P < E_C`.
    Strangle {
        put_strike: f64,
        call_strike: f64,
        put_multiplicity: f64,
        call_multiplicity: f64,
    },
    /// Long call at `E_l`, short call at `E_s > E_l`.
    BullSpread { long_strike: f64, short_strike: f64 },
    /// A member of the invariant family frozen at time `t`.
    ClosedFormSnapshot {
        params: ClosedFormParams,
        market: MarketParams,
        t: f64,
    },
}

impl Payoff {
    pub fn call(strike: f64, multiplicity: f64) -> Result<Self> {
        let p = Payoff::Call { strike, multiplicity };
        p.validate()?;
        Ok(p)
    }

    pub fn strangle(put_strike: f64, call_strike: f64, put_multiplicity: f64, call_multiplicity: f64) -> Result<Self> {
        let p = Payoff::Strangle {
            put_strike,
            call_strike,
            put_multiplicity,
            call_multiplicity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn bull_spread(long_strike: f64, short_strike: f64) -> Result<Self> {
        let p = Payoff::BullSpread {
            long_strike,
            short_strike,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, x: f64) -> Result<()> {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be positive, got {x}")))
            }
        }
        match *self {
            Payoff::Call { strike, multiplicity } => {
                positive("strike", strike)?;
                positive("multiplicity", multiplicity)
            }
            Payoff::Strangle {
                put_strike,
                call_strike,
                put_multiplicity,
                call_multiplicity,
            } => {
                positive("put_strike", put_strike)?;
                positive("call_strike", call_strike)?;
                positive("put_multiplicity", put_multiplicity)?;
                positive("call_multiplicity", call_multiplicity)?;
                if put_strike >= call_strike {
                    return Err(Error::invalid("put_strike", "must be below call_strike"));
                }
                Ok(())
            }
            Payoff::BullSpread {
                long_strike,
                short_strike,
            } => {
                positive("long_strike", long_strike)?;
                positive("short_strike", short_strike)?;
                if long_strike >= short_strike {
                    return Err(Error::invalid("long_strike", "must be below short_strike"));
                }
                Ok(())
            }
            Payoff::ClosedFormSnapshot { params, market, .. } => {
                market.validate_nonlinear()?;
                params.check_market(&market)
            }
        }
    }

    /// Strike prices, ascending. Empty for closed-form snapshots.
    pub fn strikes(&self) -> Vec<f64> {
        match *self {
            Payoff::Call { strike, .. } => vec![strike],
            Payoff::Strangle {
                put_strike,
                call_strike,
                ..
            } => vec![put_strike, call_strike],
            Payoff::BullSpread {
                long_strike,
                short_strike,
            } => vec![long_strike, short_strike],
            Payoff::ClosedFormSnapshot { .. } => Vec::new(),
        }
    }

    pub fn value(&self, s: f64) -> Result<f64> {
        payoff_value(self, s)
    }
}

/// Terminal value of `p` at price `s`.
pub fn payoff_value(p: &Payoff, s: f64) -> Result<f64> {
    let call = |e: f64| (s - e).max(0.0);
    let put = |e: f64| (e - s).max(0.0);
    Ok(match *p {
        Payoff::Call { strike, multiplicity } => multiplicity * call(strike),
        Payoff::Strangle {
            put_strike,
            call_strike,
            put_multiplicity,
            call_multiplicity,
        } => put_multiplicity * put(put_strike) + call_multiplicity * call(call_strike),
        Payoff::BullSpread {
            long_strike,
            short_strike,
        } => call(long_strike) - call(short_strike),
        Payoff::ClosedFormSnapshot { params, market, t } => invariant_u(s, t, &params, &market)?,
    })
}

/// Residual `u_t + (σ²S²/2) u_SS / (1 − ρ S u_SS)²` of the model equation.
pub fn pde_residual(u_t: f64, u_ss: f64, s: f64, p: &MarketParams) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::domain(format!("S must be positive, got {s}")));
    }
    let denom = 1.0 - p.rho * s * u_ss;
    if denom.abs() < SINGULARITY_FLOOR {
        return Err(Error::SingularDenominator { s, denom });
    }
    Ok(u_t + 0.5 * p.sigma * p.sigma * s * s * u_ss / (denom * denom))
}

/// The surface `S ln S / ρ + c₁ S + c₂` on which the PDE denominator vanishes.
pub fn degenerate_surface(s: f64, c1: f64, c2: f64, rho: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::domain(format!("S must be positive, got {s}")));
    }
    if rho == 0.0 {
        return Err(Error::DivisionByZero("degenerate_surface"));
    }
    Ok(s * s.ln() / rho + c1 * s + c2)
}

/// A hedge-cost surface `u(S, t)` that may depend on the market parameters.
///
/// Surfaces that do not depend on the market simply ignore the argument.
pub trait PriceSurface {
    fn value(&self, s: f64, t: f64, market: &MarketParams) -> Result<f64>;
}

impl<F> PriceSurface for F
where
    F: Fn(f64, f64, &MarketParams) -> Result<f64>,
{
    fn value(&self, s: f64, t: f64, market: &MarketParams) -> Result<f64> {
        self(s, t, market)
    }
}

/// `ρ · u` for a surface `u` solving the equation with illiquidity `ρ`.
///
/// The result solves the equation with `ρ = 1`. The inner surface is always
/// evaluated with the stored `ρ`, whatever the caller passes.
#[derive(Debug, Clone, Copy)]
pub struct Rescaled<S> {
    pub inner: S,
    pub rho: f64,
}

impl<S: PriceSurface> PriceSurface for Rescaled<S> {
    fn value(&self, s: f64, t: f64, market: &MarketParams) -> Result<f64> {
        Ok(self.rho * self.inner.value(s, t, &market.with_rho(self.rho))?)
    }
}

pub fn rho_rescale<S: PriceSurface>(surface: S, rho: f64) -> Result<Rescaled<S>> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid("rho", format!("must be positive, got {rho}")));
    }
    Ok(Rescaled { inner: surface, rho })
}

/// Numerical scheme that produced a [`SolutionField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Implicit,
    Explicit,
    LinearFd,
    LinearAnalytic,
    ClosedForm,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Implicit => "implicit",
            Scheme::Explicit => "explicit",
            Scheme::LinearFd => "linear-fd",
            Scheme::LinearAnalytic => "linear-analytic",
            Scheme::ClosedForm => "closed-form",
        }
    }
}

/// How a time layer was solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerMethod {
    /// Newton on the equation solved for `u_SS` on the well-posed branch.
    Resolved,
    /// Newton on the product-form difference equations.
    Product,
    /// Direct tridiagonal solve (linear model).
    Linear,
    /// Explicit update, no solve.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerDiagnostics {
    pub layer: usize,
    pub iterations: usize,
    /// Max-norm of the difference-equation residual at the accepted layer.
    pub residual: f64,
    pub method: LayerMethod,
}

/// Grid-sampled hedge cost. `values[j][i]` is `u(S_i, t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub grid: GridSpec,
    pub values: Vec<Vec<f64>>,
    pub scheme: Scheme,
    pub diagnostics: Vec<LayerDiagnostics>,
    pub diverged: bool,
}

impl SolutionField {
    pub fn layer(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    /// Values at `t = 0`.
    pub fn initial(&self) -> &[f64] {
        &self.values[0]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j][i]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Largest pointwise difference to `other` over the whole field.
    pub fn sup_distance(&self, other: &SolutionField) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                found: other.values.len(),
            });
        }
        let mut d = 0.0_f64;
        for (a, b) in self.values.iter().zip(&other.values) {
            if a.len() != b.len() {
                return Err(Error::DimensionMismatch {
                    expected: a.len(),
                    found: b.len(),
                });
            }
            for (x, y) in a.iter().zip(b) {
                d = d.max((x - y).abs());
            }
        }
        Ok(d)
    }
}

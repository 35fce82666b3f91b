//! Finite-difference solvers on a uniform `(S, t)` mesh.
//!
//! Time runs backwards from the terminal layer `j = N_t` to `j = 0`. The
//! fully implicit scheme solves a nonlinear tridiagonal system per layer by
//! damped Newton; the explicit scheme applies the spatial operator to the
//! known layer; the linear reference solves the Black–Scholes equation with
//! the same mesh.

mod explicit;
mod implicit;
mod layer;
mod linear;
mod newton;
mod tridiag;

pub use explicit::{explicit_solve_backward, DIVERGENCE_FACTOR};
pub use implicit::{implicit_solve_backward, solve_layer};
pub use layer::{assemble_layer_residual, layer_jacobian};
pub use linear::{linear_bs_price, linear_fd_solve};
pub use newton::{
    fd_jacobian, newton_solve, FnSystem, Jacobian, JacobianMode, NewtonOptions, NewtonReport, NonlinearSystem,
};
pub use tridiag::Tridiagonal;

use crate::closed_form::ClosedFormParams;
use crate::error::{Error, Result};
use crate::model::{GridSpec, MarketParams, Payoff, SolutionField};

/// Time-stepping scheme for the nonlinear equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchemeChoice {
    #[default]
    Implicit,
    Explicit,
}

/// Starting point of the Newton iteration on each layer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitialGuess {
    /// Start from the previously computed layer.
    #[default]
    WarmStart,
    /// Start the first solved layer from the constant `k`; later layers warm-start.
    Constant(f64),
}

/// Values imposed at `S_min` and `S_max` on every solved layer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BoundaryPolicy {
    /// Terminal values at both ends, held constant in time.
    #[default]
    PayoffHeld,
    /// The invariant family evaluated at the layer time.
    ExactClosedForm(ClosedFormParams),
    /// Linear Black–Scholes prices at the layer time (needs a payoff terminal).
    LinearBlackScholes,
}

/// Which formulation of the layer equations Newton is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LayerForm {
    /// Well-posed branch first, product form if that fails.
    #[default]
    Auto,
    Product,
    Resolved,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub scheme: SchemeChoice,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub damping_max_halvings: usize,
    pub initial_guess: InitialGuess,
    pub boundary_policy: BoundaryPolicy,
    pub jacobian: JacobianMode,
    pub layer_form: LayerForm,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeChoice::Implicit,
            newton_tol: 1e-12,
            newton_max_iter: 100,
            damping_max_halvings: 40,
            initial_guess: InitialGuess::WarmStart,
            boundary_policy: BoundaryPolicy::PayoffHeld,
            jacobian: JacobianMode::Analytic,
            layer_form: LayerForm::Auto,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(Error::invalid("newton_tol", "must be positive"));
        }
        if self.newton_max_iter < 1 {
            return Err(Error::invalid("newton_max_iter", "must be at least 1"));
        }
        if let InitialGuess::Constant(k) = self.initial_guess {
            if !k.is_finite() {
                return Err(Error::invalid("initial_guess", "must be finite"));
            }
        }
        Ok(())
    }

    pub fn newton_options(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.newton_tol,
            max_iter: self.newton_max_iter,
            max_halvings: self.damping_max_halvings,
            jacobian: self.jacobian,
            ..NewtonOptions::default()
        }
    }
}

/// Terminal data: a payoff or explicit node values.
#[derive(Debug, Clone, PartialEq)]
pub enum Terminal {
    Payoff(Payoff),
    Values(Vec<f64>),
}

impl From<Payoff> for Terminal {
    fn from(p: Payoff) -> Self {
        Terminal::Payoff(p)
    }
}

impl From<Vec<f64>> for Terminal {
    fn from(v: Vec<f64>) -> Self {
        Terminal::Values(v)
    }
}

impl Terminal {
    pub fn sample(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        match self {
            Terminal::Payoff(p) => {
                p.validate()?;
                grid.nodes().into_iter().map(|s| p.value(s)).collect()
            }
            Terminal::Values(v) => {
                if v.len() != grid.n_space {
                    return Err(Error::DimensionMismatch {
                        expected: grid.n_space,
                        found: v.len(),
                    });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::domain("terminal values must be finite"));
                }
                Ok(v.clone())
            }
        }
    }
}

/// Boundary values at time `t` under `policy`.
pub(crate) fn boundary_values(
    policy: &BoundaryPolicy,
    terminal: &Terminal,
    terminal_values: &[f64],
    grid: &GridSpec,
    p: &MarketParams,
    t: f64,
) -> Result<(f64, f64)> {
    match policy {
        BoundaryPolicy::PayoffHeld => Ok((terminal_values[0], terminal_values[grid.n_space - 1])),
        BoundaryPolicy::ExactClosedForm(params) => Ok((
            crate::closed_form::invariant_u(grid.s_min, t, params, p)?,
            crate::closed_form::invariant_u(grid.s_max, t, params, p)?,
        )),
        BoundaryPolicy::LinearBlackScholes => match terminal {
            Terminal::Payoff(payoff) => Ok((
                linear_bs_price(payoff, grid.s_min, t, p, grid.maturity)?,
                linear_bs_price(payoff, grid.s_max, t, p, grid.maturity)?,
            )),
            Terminal::Values(_) => Err(Error::invalid(
                "boundary_policy",
                "linear Black-Scholes boundaries need a payoff terminal",
            )),
        },
    }
}

/// Run the scheme selected in `cfg`.
pub fn solve_backward(
    terminal: &Terminal,
    grid: &GridSpec,
    p: &MarketParams,
    cfg: &SolverConfig,
) -> Result<SolutionField> {
    match cfg.scheme {
        SchemeChoice::Implicit => implicit_solve_backward(terminal, grid, p, cfg),
        SchemeChoice::Explicit => explicit_solve_backward(terminal, grid, p, cfg),
    }
}

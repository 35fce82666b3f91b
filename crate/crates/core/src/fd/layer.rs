//! The nonlinear system for one implicit time layer.
//!
//! With `D_i = u_{i−1} − 2u_i + u_{i+1}` on the unknown layer `j` and `û` the
//! known layer `j+1`, each interior node contributes
//!
//! ```text
//! R_i = (û_i − u_i)/4 · (h²/S_i − ρ D_i)² + (τσ²h²/8) · D_i,
//! ```
//!
//! the implicit discretisation multiplied through by the squared denominator.
//! The boundary values replace `u_0` and `u_{N}`.
//!
//! Solved for the second difference instead, the same layer reads
//! `D_i = h² g((u_i − û_i)/(τ σ² S_i² / 2))`, where `g` inverts
//! `Γ ↦ Γ/(1 − ρSΓ)²` on the branch `ρSΓ < 1`. That branch is the one on which
//! the backward problem is parabolic, and there the system has a unique root.

use super::newton::{Jacobian, NonlinearSystem};
use super::tridiag::Tridiagonal;
use crate::error::{Error, Result};
use crate::model::{GridSpec, MarketParams};

/// Data fixing one layer system. Vectors hold interior nodes only.
#[derive(Debug, Clone)]
pub(crate) struct LayerProblem<'a> {
    pub s: &'a [f64],
    pub u_next: &'a [f64],
    pub left: f64,
    pub right: f64,
    pub h: f64,
    pub tau: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl LayerProblem<'_> {
    fn neighbours(&self, x: &[f64], k: usize) -> (f64, f64) {
        let n = x.len();
        let l = if k == 0 { self.left } else { x[k - 1] };
        let r = if k + 1 == n { self.right } else { x[k + 1] };
        (l, r)
    }

    fn second_difference(&self, x: &[f64], k: usize) -> f64 {
        let (l, r) = self.neighbours(x, k);
        l - 2.0 * x[k] + r
    }

    fn diffusion_weight(&self) -> f64 {
        self.tau * self.sigma * self.sigma * self.h * self.h / 8.0
    }

    pub fn product_residual(&self, x: &[f64], out: &mut [f64]) {
        let c = self.diffusion_weight();
        let h2 = self.h * self.h;
        for k in 0..x.len() {
            let d = self.second_difference(x, k);
            let q = h2 / self.s[k] - self.rho * d;
            out[k] = (self.u_next[k] - x[k]) / 4.0 * q * q + c * d;
        }
    }

    pub fn product_jacobian(&self, x: &[f64]) -> Tridiagonal {
        let n = x.len();
        let c = self.diffusion_weight();
        let h2 = self.h * self.h;
        let mut jac = Tridiagonal::zeros(n);
        for k in 0..n {
            let d = self.second_difference(x, k);
            let q = h2 / self.s[k] - self.rho * d;
            let dq = (self.u_next[k] - x[k]) / 4.0;
            let r_d = -2.0 * self.rho * dq * q + c;
            jac.diag[k] = -q * q / 4.0 - 2.0 * r_d;
            if k > 0 {
                jac.lower[k - 1] = r_d;
            }
            if k + 1 < n {
                jac.upper[k] = r_d;
            }
        }
        jac
    }

    fn amplitude(&self, k: usize) -> f64 {
        0.5 * self.tau * self.sigma * self.sigma * self.s[k] * self.s[k]
    }

    /// Lower limit of `u_i` for the resolved form to be defined.
    pub fn resolved_floor(&self, k: usize) -> f64 {
        self.u_next[k] - self.amplitude(k) / (4.0 * self.rho * self.s[k])
    }

    /// `(g(y), g'(y))` for the branch inverse at node `k`.
    fn branch_inverse(&self, k: usize, y: f64) -> (f64, f64) {
        let rs = self.rho * self.s[k];
        let p = y * rs;
        let root = (1.0 + 4.0 * p).sqrt();
        let gamma = 2.0 * y / ((1.0 + 2.0 * p) + root);
        let x = rs * gamma;
        (gamma, (1.0 - x).powi(3) / (1.0 + x))
    }

    pub fn resolved_residual(&self, x: &[f64], out: &mut [f64]) {
        let h2 = self.h * self.h;
        for k in 0..x.len() {
            let y = (x[k] - self.u_next[k]) / self.amplitude(k);
            out[k] = self.second_difference(x, k) - h2 * self.branch_inverse(k, y).0;
        }
    }

    pub fn resolved_jacobian(&self, x: &[f64]) -> Tridiagonal {
        let n = x.len();
        let h2 = self.h * self.h;
        let mut jac = Tridiagonal::zeros(n);
        for k in 0..n {
            let a = self.amplitude(k);
            let y = (x[k] - self.u_next[k]) / a;
            jac.diag[k] = -2.0 - h2 * self.branch_inverse(k, y).1 / a;
            if k > 0 {
                jac.lower[k - 1] = 1.0;
            }
            if k + 1 < n {
                jac.upper[k] = 1.0;
            }
        }
        jac
    }

    /// Smallest `|1 − ρ S_i D_i / h²|` over the layer, with its node.
    pub fn min_denominator(&self, x: &[f64]) -> (usize, f64) {
        let h2 = self.h * self.h;
        (0..x.len())
            .map(|k| {
                (
                    k,
                    (1.0 - self.rho * self.s[k] * self.second_difference(x, k) / h2).abs(),
                )
            })
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    }
}

pub(crate) struct ProductLayer<'a>(pub LayerProblem<'a>);

impl NonlinearSystem for ProductLayer<'_> {
    fn dim(&self) -> usize {
        self.0.s.len()
    }

    fn residual(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.0.product_residual(x, out);
        Ok(())
    }

    fn jacobian(&self, x: &[f64]) -> Result<Jacobian> {
        Ok(Jacobian::Tridiagonal(self.0.product_jacobian(x)))
    }
}

pub(crate) struct ResolvedLayer<'a>(pub LayerProblem<'a>);

impl NonlinearSystem for ResolvedLayer<'_> {
    fn dim(&self) -> usize {
        self.0.s.len()
    }

    fn residual(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.0.resolved_residual(x, out);
        Ok(())
    }

    fn jacobian(&self, x: &[f64]) -> Result<Jacobian> {
        Ok(Jacobian::Tridiagonal(self.0.resolved_jacobian(x)))
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(k, &v)| v > self.0.resolved_floor(k))
    }
}

fn check_lengths(u_next: &[f64], u_guess: &[f64], grid: &GridSpec) -> Result<()> {
    let n = grid.n_space;
    if u_next.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u_next.len(),
        });
    }
    if u_guess.len() != n - 2 {
        return Err(Error::DimensionMismatch {
            expected: n - 2,
            found: u_guess.len(),
        });
    }
    Ok(())
}

fn with_problem<T>(
    u_next: &[f64],
    u_guess: &[f64],
    boundaries: (f64, f64),
    grid: &GridSpec,
    p: &MarketParams,
    f: impl FnOnce(&LayerProblem) -> T,
) -> Result<T> {
    grid.validate()?;
    check_lengths(u_next, u_guess, grid)?;
    let nodes = grid.nodes();
    let n = grid.n_space;
    let prob = LayerProblem {
        s: &nodes[1..n - 1],
        u_next: &u_next[1..n - 1],
        left: boundaries.0,
        right: boundaries.1,
        h: grid.h(),
        tau: grid.tau(),
        sigma: p.sigma,
        rho: p.rho,
    };
    Ok(f(&prob))
}

/// Residual of the layer equations.
///
/// `u_next` is the full known layer (`n_space` values; its end values are not
/// used). `u_guess` holds the `n_space − 2` interior unknowns; `boundaries`
/// supplies the unknown layer's end values.
pub fn assemble_layer_residual(
    u_next: &[f64],
    u_guess: &[f64],
    boundaries: (f64, f64),
    grid: &GridSpec,
    p: &MarketParams,
) -> Result<Vec<f64>> {
    with_problem(u_next, u_guess, boundaries, grid, p, |prob| {
        let mut out = vec![0.0; u_guess.len()];
        prob.product_residual(u_guess, &mut out);
        out
    })
}

/// Analytic Jacobian of [`assemble_layer_residual`] in the interior unknowns.
pub fn layer_jacobian(
    u_next: &[f64],
    u_guess: &[f64],
    boundaries: (f64, f64),
    grid: &GridSpec,
    p: &MarketParams,
) -> Result<Tridiagonal> {
    with_problem(u_next, u_guess, boundaries, grid, p, |prob| {
        prob.product_jacobian(u_guess)
    })
}

//! Damped Newton iteration for square nonlinear systems.

use nalgebra::{DMatrix, DVector};

use super::tridiag::Tridiagonal;
use crate::error::{Error, Result};

/// Jacobian representation returned by a [`NonlinearSystem`].
#[derive(Debug, Clone, PartialEq)]
pub enum Jacobian {
    Tridiagonal(Tridiagonal),
    Dense(DMatrix<f64>),
}

impl Jacobian {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Jacobian::Tridiagonal(t) => t.solve(rhs),
            Jacobian::Dense(a) => {
                let lu = a.clone().lu();
                let x = lu
                    .solve(&DVector::from_column_slice(rhs))
                    .ok_or(Error::SingularJacobian { row: 0, pivot: 0.0 })?;
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::SingularJacobian { row: 0, pivot: 0.0 });
                }
                Ok(x.as_slice().to_vec())
            }
        }
    }
}

/// Where the Newton step gets its Jacobian from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianMode {
    #[default]
    Analytic,
    /// Dense central differences; for cross-checking only.
    FiniteDifference,
}

pub trait NonlinearSystem {
    fn dim(&self) -> usize;

    fn residual(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    /// Analytic Jacobian. Defaults to finite differences.
    fn jacobian(&self, x: &[f64]) -> Result<Jacobian> {
        fd_jacobian(self, x)
    }

    /// Whether `x` lies in the domain where the residual is defined.
    fn in_domain(&self, _x: &[f64]) -> bool {
        true
    }
}

/// A system given by a residual closure; its Jacobian is by finite differences.
pub struct FnSystem<F> {
    pub dim: usize,
    pub f: F,
}

impl<F> NonlinearSystem for FnSystem<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn residual(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.f)(x, out)
    }
}

/// Dense central-difference Jacobian.
pub fn fd_jacobian<S: NonlinearSystem + ?Sized>(sys: &S, x: &[f64]) -> Result<Jacobian> {
    let n = sys.dim();
    let mut a = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        let h = 6e-6 * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        sys.residual(&xp, &mut fp)?;
        xp[j] = x[j] - h;
        sys.residual(&xp, &mut fm)?;
        xp[j] = x[j];
        for i in 0..n {
            a[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(Jacobian::Dense(a))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Stop once the residual max-norm is at or below this.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Extra full steps taken after convergence while the residual does not grow.
    pub polish: usize,
    pub jacobian: JacobianMode,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100,
            max_halvings: 40,
            polish: 3,
            jacobian: JacobianMode::Analytic,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub x: Vec<f64>,
    /// Steps taken to reach the tolerance; polishing steps are not counted.
    pub iterations: usize,
    pub residual: f64,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter()
        .fold(0.0_f64, |a, x| if x.is_nan() { f64::NAN } else { a.max(x.abs()) })
}

struct Trial {
    x: Vec<f64>,
    f: Vec<f64>,
    norm: f64,
}

fn evaluate<S: NonlinearSystem + ?Sized>(sys: &S, x: Vec<f64>) -> Option<Trial> {
    if !sys.in_domain(&x) {
        return None;
    }
    let mut f = vec![0.0; sys.dim()];
    sys.residual(&x, &mut f).ok()?;
    let norm = max_norm(&f);
    norm.is_finite().then_some(Trial { x, f, norm })
}

fn newton_step<S: NonlinearSystem + ?Sized>(sys: &S, x: &[f64], f: &[f64], mode: JacobianMode) -> Result<Vec<f64>> {
    let jac = match mode {
        JacobianMode::Analytic => sys.jacobian(x)?,
        JacobianMode::FiniteDifference => fd_jacobian(sys, x)?,
    };
    let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
    jac.solve(&rhs)
}

/// Solve `F(x) = 0` from `guess`.
///
/// Each step is halved until the residual max-norm decreases. If no halving
/// decreases it, the largest admissible step is taken anyway; the iteration
/// cap bounds the cost of that.
pub fn newton_solve<S: NonlinearSystem + ?Sized>(sys: &S, guess: &[f64], opts: &NewtonOptions) -> Result<NewtonReport> {
    let n = sys.dim();
    if guess.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: guess.len(),
        });
    }
    let mut cur =
        evaluate(sys, guess.to_vec()).ok_or_else(|| Error::domain("residual is not defined at the initial guess"))?;
    let mut iterations = 0;

    while cur.norm > opts.tol {
        if iterations == opts.max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: cur.norm,
                layer: None,
            });
        }
        let dx = newton_step(sys, &cur.x, &cur.f, opts.jacobian)?;
        let mut lambda = 1.0;
        let mut fallback = None;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let xt: Vec<f64> = cur.x.iter().zip(&dx).map(|(x, d)| x + lambda * d).collect();
            if let Some(trial) = evaluate(sys, xt) {
                if trial.norm < cur.norm {
                    accepted = Some(trial);
                    break;
                }
                if fallback.is_none() {
                    fallback = Some(trial);
                }
            }
            lambda *= 0.5;
        }
        cur = match accepted.or(fallback) {
            Some(t) => t,
            None => {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: cur.norm,
                    layer: None,
                })
            }
        };
        iterations += 1;
    }

    for _ in 0..opts.polish {
        if cur.norm == 0.0 {
            break;
        }
        let Ok(dx) = newton_step(sys, &cur.x, &cur.f, opts.jacobian) else {
            break;
        };
        let xt: Vec<f64> = cur.x.iter().zip(&dx).map(|(x, d)| x + d).collect();
        match evaluate(sys, xt) {
            Some(t) if t.norm <= cur.norm => cur = t,
            _ => break,
        }
    }

    Ok(NewtonReport {
        x: cur.x,
        iterations,
        residual: cur.norm,
    })
}

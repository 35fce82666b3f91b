use super::{boundary_values, SolverConfig, Terminal};
use crate::error::Result;
use crate::model::{GridSpec, LayerDiagnostics, LayerMethod, MarketParams, Scheme, SolutionField};

/// A run is flagged diverged once some `|u|` exceeds this multiple of the
/// largest terminal magnitude, or turns non-finite.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Explicit backward stepping: `u_j = u_{j+1} + τ (σ²S²/2) Γ/(1 − ρSΓ)²` with
/// `Γ` the centred second difference of the known layer.
///
/// Divergence is reported through [`SolutionField::diverged`]; stepping stops
/// there and the remaining earlier layers are filled with NaN.
pub fn explicit_solve_backward(
    terminal: &Terminal,
    grid: &GridSpec,
    p: &MarketParams,
    cfg: &SolverConfig,
) -> Result<SolutionField> {
    grid.validate()?;
    p.validate_nonlinear()?;
    let n = grid.n_space;
    let nt = grid.n_time;
    let (h, tau) = (grid.h(), grid.tau());
    let nodes = grid.nodes();
    let last = terminal.sample(grid)?;
    let limit = DIVERGENCE_FACTOR * last.iter().fold(0.0_f64, |a, v| a.max(v.abs()));

    let mut values = vec![vec![f64::NAN; n]; nt + 1];
    let mut diagnostics = Vec::with_capacity(nt);
    values[nt] = last.clone();
    let mut diverged = false;
    for j in (0..nt).rev() {
        let bounds = boundary_values(&cfg.boundary_policy, terminal, &last, grid, p, grid.t(j))?;
        let prev = &values[j + 1];
        let mut next = vec![0.0; n];
        next[0] = bounds.0;
        next[n - 1] = bounds.1;
        for i in 1..n - 1 {
            let s = nodes[i];
            let gamma = (prev[i - 1] - 2.0 * prev[i] + prev[i + 1]) / (h * h);
            let den = 1.0 - p.rho * s * gamma;
            next[i] = prev[i] + tau * 0.5 * p.sigma * p.sigma * s * s * gamma / (den * den);
        }
        let blown = next.iter().any(|v| !v.is_finite() || v.abs() > limit);
        values[j] = next;
        diagnostics.push(LayerDiagnostics {
            layer: j,
            iterations: 0,
            residual: 0.0,
            method: LayerMethod::Explicit,
        });
        if blown {
            diverged = true;
            break;
        }
    }

    Ok(SolutionField {
        grid: *grid,
        values,
        scheme: Scheme::Explicit,
        diagnostics,
        diverged,
    })
}

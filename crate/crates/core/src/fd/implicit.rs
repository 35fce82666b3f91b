use super::layer::{LayerProblem, ProductLayer, ResolvedLayer};
use super::newton::{newton_solve, NewtonOptions};
use super::{boundary_values, InitialGuess, LayerForm, SolverConfig, Terminal};
use crate::error::{Error, Result};
use crate::model::{GridSpec, LayerDiagnostics, LayerMethod, MarketParams, Scheme, SolutionField, SINGULARITY_FLOOR};

struct LayerSolution {
    x: Vec<f64>,
    iterations: usize,
    method: LayerMethod,
}

fn solve_resolved(prob: &LayerProblem, guess: &[f64], opts: &NewtonOptions) -> Result<LayerSolution> {
    // Move the guess inside the domain of the branch inverse.
    let start: Vec<f64> = guess
        .iter()
        .enumerate()
        .map(|(k, &g)| {
            let floor = prob.resolved_floor(k);
            let halfway = prob.u_next[k] - 0.5 * (prob.u_next[k] - floor);
            if g > floor {
                g
            } else {
                halfway
            }
        })
        .collect();
    let rep = newton_solve(&ResolvedLayer(prob.clone()), &start, opts)?;
    Ok(LayerSolution {
        x: rep.x,
        iterations: rep.iterations,
        method: LayerMethod::Resolved,
    })
}

fn solve_product(prob: &LayerProblem, guess: &[f64], opts: &NewtonOptions) -> Result<LayerSolution> {
    let rep = newton_solve(&ProductLayer(prob.clone()), guess, opts)?;
    Ok(LayerSolution {
        x: rep.x,
        iterations: rep.iterations,
        method: LayerMethod::Product,
    })
}

fn solve_interior(
    prob: &LayerProblem,
    guess: &[f64],
    known_well_posed: bool,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, LayerDiagnostics)> {
    let opts = cfg.newton_options();
    let mut sol = match cfg.layer_form {
        LayerForm::Product => solve_product(prob, guess, &opts)?,
        LayerForm::Resolved => solve_resolved(prob, guess, &opts)?,
        LayerForm::Auto if known_well_posed => match solve_resolved(prob, guess, &opts) {
            Ok(s) => s,
            Err(_) => solve_product(prob, guess, &opts)?,
        },
        LayerForm::Auto => match solve_product(prob, guess, &opts) {
            Ok(s) => s,
            Err(e) => solve_resolved(prob, guess, &opts).map_err(|_| e)?,
        },
    };

    // Certify on the difference equations themselves.
    let mut r = vec![0.0; sol.x.len()];
    prob.product_residual(&sol.x, &mut r);
    let mut residual = r.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if residual > cfg.newton_tol {
        let rep = newton_solve(&ProductLayer(prob.clone()), &sol.x, &opts)?;
        sol.iterations += rep.iterations;
        sol.x = rep.x;
        residual = rep.residual;
    }

    let (k, denom) = prob.min_denominator(&sol.x);
    if denom < SINGULARITY_FLOOR {
        return Err(Error::SingularDenominator { s: prob.s[k], denom });
    }
    let diag = LayerDiagnostics {
        layer: 0,
        iterations: sol.iterations,
        residual,
        method: sol.method,
    };
    Ok((sol.x, diag))
}

/// Whether at least half of the interior nodes of `layer` have `ρ S Γ < 1`.
fn mostly_well_posed(layer: &[f64], grid: &GridSpec, p: &MarketParams) -> bool {
    let n = layer.len();
    let h2 = grid.h() * grid.h();
    let on_branch = (1..n - 1)
        .filter(|&i| {
            let d = layer[i - 1] - 2.0 * layer[i] + layer[i + 1];
            p.rho * grid.s(i) * d / h2 < 1.0
        })
        .count();
    2 * on_branch >= n - 2
}

fn check_layer_lengths(u_next: &[f64], guess: &[f64], grid: &GridSpec) -> Result<()> {
    let n = grid.n_space;
    if u_next.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u_next.len(),
        });
    }
    if guess.len() != n - 2 {
        return Err(Error::DimensionMismatch {
            expected: n - 2,
            found: guess.len(),
        });
    }
    Ok(())
}

fn layer_step(
    u_next: &[f64],
    guess: &[f64],
    boundaries: (f64, f64),
    grid: &GridSpec,
    p: &MarketParams,
    cfg: &SolverConfig,
    well_posed: bool,
) -> Result<(Vec<f64>, LayerDiagnostics)> {
    let n = grid.n_space;
    let nodes = grid.nodes();
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
    let (x, diag) = solve_interior(&prob, guess, well_posed, cfg)?;
    let mut layer = Vec::with_capacity(n);
    layer.push(boundaries.0);
    layer.extend_from_slice(&x);
    layer.push(boundaries.1);
    Ok((layer, diag))
}

/// Solve one implicit layer. `u_next` is the full known layer, `guess` the
/// interior starting values; returns the full unknown layer.
///
/// With [`LayerForm::Auto`] the branch is taken from `u_next`: the resolved
/// form goes first if at least half of its interior nodes have `ρ S Γ < 1`,
/// the product form otherwise. Either falls back to the other on failure.
pub fn solve_layer(
    u_next: &[f64],
    guess: &[f64],
    boundaries: (f64, f64),
    grid: &GridSpec,
    p: &MarketParams,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, LayerDiagnostics)> {
    grid.validate()?;
    p.validate_nonlinear()?;
    cfg.validate()?;
    check_layer_lengths(u_next, guess, grid)?;
    let well_posed = mostly_well_posed(u_next, grid, p);
    layer_step(u_next, guess, boundaries, grid, p, cfg, well_posed)
}

/// Fully implicit backward solve from the terminal layer to `t = 0`.
///
/// Under [`LayerForm::Auto`] the branch is chosen once, from the terminal
/// data, by the same majority rule as [`solve_layer`].
pub fn implicit_solve_backward(
    terminal: &Terminal,
    grid: &GridSpec,
    p: &MarketParams,
    cfg: &SolverConfig,
) -> Result<SolutionField> {
    grid.validate()?;
    p.validate_nonlinear()?;
    cfg.validate()?;
    let n = grid.n_space;
    let nt = grid.n_time;
    let last = terminal.sample(grid)?;

    let mut values = vec![Vec::new(); nt + 1];
    let mut diagnostics = Vec::with_capacity(nt);
    values[nt] = last.clone();
    let well_posed = mostly_well_posed(&last, grid, p);
    for j in (0..nt).rev() {
        let bounds = boundary_values(&cfg.boundary_policy, terminal, &last, grid, p, grid.t(j))?;
        let guess: Vec<f64> = match cfg.initial_guess {
            InitialGuess::Constant(k) if j + 1 == nt => vec![k; n - 2],
            _ => values[j + 1][1..n - 1].to_vec(),
        };
        let (layer, mut diag) =
            layer_step(&values[j + 1], &guess, bounds, grid, p, cfg, well_posed).map_err(|e| e.at_layer(j))?;
        diag.layer = j;
        diagnostics.push(diag);
        values[j] = layer;
    }

    Ok(SolutionField {
        grid: *grid,
        values,
        scheme: Scheme::Implicit,
        diagnostics,
        diverged: false,
    })
}

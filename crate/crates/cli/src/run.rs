//! Scenario dispatch: solve, derive the requested series and write them.

use std::path::{Path, PathBuf};

use hedgecost::closed_form::{greeks, invariant_u, ClosedFormParams};
use hedgecost::fd::{linear_bs_price, linear_fd_solve, solve_backward, BoundaryPolicy, InitialGuess, Terminal};
use hedgecost::model::{GridSpec, MarketParams, Payoff};
use hedgecost::validation::{run_all, Selection};

use crate::error::{CliError, Result};
use crate::output::{write_csv, Table};
use crate::scenario::{LinearReference, Method, OutputKind, Scenario};

/// Relative bump in `σ` for grid-based vega.
const VEGA_BUMP: f64 = 1e-4;

/// A sampled surface `values[j][i] = u(S_i, t_j)`.
#[derive(Debug, Clone)]
pub struct Field {
    pub grid: GridSpec,
    pub values: Vec<Vec<f64>>,
    pub diverged: bool,
    pub max_newton_iterations: usize,
}

impl Field {
    fn from_closed_form(params: &ClosedFormParams, grid: &GridSpec, market: &MarketParams) -> Result<Self> {
        let nodes = grid.nodes();
        let values = grid
            .times()
            .into_iter()
            .map(|t| nodes.iter().map(|&s| invariant_u(s, t, params, market)).collect())
            .collect::<hedgecost::Result<_>>()?;
        Ok(Self {
            grid: *grid,
            values,
            diverged: false,
            max_newton_iterations: 0,
        })
    }

    fn from_linear_prices(payoff: &Payoff, grid: &GridSpec, market: &MarketParams) -> Result<Self> {
        let nodes = grid.nodes();
        let values = grid
            .times()
            .into_iter()
            .map(|t| {
                nodes
                    .iter()
                    .map(|&s| linear_bs_price(payoff, s, t, market, grid.maturity))
                    .collect()
            })
            .collect::<hedgecost::Result<_>>()?;
        Ok(Self {
            grid: *grid,
            values,
            diverged: false,
            max_newton_iterations: 0,
        })
    }

    fn from_solution(f: hedgecost::model::SolutionField) -> Self {
        let max_newton_iterations = f.diagnostics.iter().map(|d| d.iterations).max().unwrap_or(0);
        Self {
            grid: f.grid,
            values: f.values,
            diverged: f.diverged,
            max_newton_iterations,
        }
    }
}

/// The closed-form member, with `δ` matched to `market.sigma`.
fn family(s: &Scenario, market: &MarketParams) -> Result<ClosedFormParams> {
    let cf = s
        .closed_form
        .ok_or_else(|| CliError::field("closed_form.m", "required for closed-form evaluation"))?;
    Ok(ClosedFormParams::explicit(cf.m, cf.d1, cf.d2, market.sigma)?.with_eps2(cf.eps2))
}

fn linear_market(market: &MarketParams) -> Result<MarketParams> {
    Ok(MarketParams::linear(market.sigma, market.rate)?)
}

/// Solve `s` with the given market parameters and method.
pub fn solve(s: &Scenario, method: Method, market: &MarketParams) -> Result<Field> {
    match method {
        Method::ClosedForm => Field::from_closed_form(&family(s, market)?, &s.grid, market),
        Method::LinearAnalytic => Field::from_linear_prices(&s.payoff, &s.grid, &linear_market(market)?),
        Method::LinearFd => Ok(Field::from_solution(linear_fd_solve(
            &s.payoff,
            &s.grid,
            &linear_market(market)?,
        )?)),
        Method::Implicit | Method::Explicit => {
            let mut cfg = s.solver;
            if let BoundaryPolicy::ExactClosedForm(_) = cfg.boundary_policy {
                cfg.boundary_policy = BoundaryPolicy::ExactClosedForm(family(s, market)?);
            }
            let payoff = match s.payoff {
                Payoff::ClosedFormSnapshot { t, .. } => Payoff::ClosedFormSnapshot {
                    params: family(s, market)?,
                    market: *market,
                    t,
                },
                other => other,
            };
            let field = solve_backward(&Terminal::Payoff(payoff), &s.grid, market, &cfg)?;
            Ok(Field::from_solution(field))
        }
    }
}

fn rho_tag(rho: f64) -> String {
    format!("rho{rho}")
}

fn in_window(s: &Scenario, x: f64) -> bool {
    s.window.is_none_or(|(lo, hi)| x >= lo && x <= hi)
}

fn payoff_meta(p: &Payoff) -> Vec<(String, String)> {
    let kv = |k: &str, v: f64| (format!("payoff.{k}"), v.to_string());
    let kind = |k: &str| ("payoff.kind".to_string(), k.to_string());
    match *p {
        Payoff::Call { strike, multiplicity } => {
            vec![kind("call"), kv("strike", strike), kv("multiplicity", multiplicity)]
        }
        Payoff::Strangle {
            put_strike,
            call_strike,
            put_multiplicity,
            call_multiplicity,
        } => vec![
            kind("strangle"),
            kv("put_strike", put_strike),
            kv("call_strike", call_strike),
            kv("put_multiplicity", put_multiplicity),
            kv("call_multiplicity", call_multiplicity),
        ],
        Payoff::BullSpread {
            long_strike,
            short_strike,
        } => vec![
            kind("bull-spread"),
            kv("long_strike", long_strike),
            kv("short_strike", short_strike),
        ],
        Payoff::ClosedFormSnapshot { t, .. } => vec![kind("closed-form"), kv("snapshot_t", t)],
    }
}

/// Metadata shared by every file of a run.
fn base_meta(s: &Scenario, command: &str, method: Method, rhos: &[f64]) -> Vec<(String, String)> {
    let mut m: Vec<(String, String)> = vec![
        ("generator".into(), format!("hedgecost {}", env!("CARGO_PKG_VERSION"))),
        ("scenario".into(), s.name.clone()),
        ("command".into(), command.into()),
        ("method".into(), method.name().into()),
        ("market.sigma".into(), s.market.sigma.to_string()),
        (
            "market.rho".into(),
            rhos.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","),
        ),
        ("market.rate".into(), s.market.rate.to_string()),
        ("grid.s_min".into(), s.grid.s_min.to_string()),
        ("grid.s_max".into(), s.grid.s_max.to_string()),
        ("grid.n_space".into(), s.grid.n_space.to_string()),
        ("grid.n_time".into(), s.grid.n_time.to_string()),
        ("grid.maturity".into(), s.grid.maturity.to_string()),
    ];
    m.extend(payoff_meta(&s.payoff));
    if let Some(cf) = s.closed_form {
        m.push(("closed_form.m".into(), cf.m.to_string()));
        m.push(("closed_form.d1".into(), cf.d1.to_string()));
        m.push(("closed_form.d2".into(), cf.d2.to_string()));
    }
    if matches!(method, Method::Implicit | Method::Explicit) {
        let c = &s.solver;
        m.push(("solver.newton_tol".into(), c.newton_tol.to_string()));
        m.push(("solver.newton_max_iter".into(), c.newton_max_iter.to_string()));
        m.push(("solver.damping_max_halvings".into(), c.damping_max_halvings.to_string()));
        let guess = match c.initial_guess {
            InitialGuess::WarmStart => "warm".to_string(),
            InitialGuess::Constant(k) => k.to_string(),
        };
        m.push(("solver.initial_guess".into(), guess));
        let boundary = match c.boundary_policy {
            BoundaryPolicy::PayoffHeld => "payoff-held",
            BoundaryPolicy::ExactClosedForm(_) => "closed-form",
            BoundaryPolicy::LinearBlackScholes => "linear-bs",
        };
        m.push(("solver.boundary".into(), boundary.into()));
        m.push(("solver.layer_form".into(), format!("{:?}", c.layer_form).to_lowercase()));
    }
    m
}

fn run_meta(base: &[(String, String)], field: &Field) -> Vec<(String, String)> {
    let mut m = base.to_vec();
    m.push(("diverged".into(), field.diverged.to_string()));
    m.push(("newton.max_iterations".into(), field.max_newton_iterations.to_string()));
    m
}

fn surface_table(s: &Scenario, field: &Field, meta: Vec<(String, String)>) -> Table {
    let mut table = Table::new(meta, &["S", "t", "u"]);
    let nodes = field.grid.nodes();
    for (j, t) in field.grid.times().into_iter().enumerate() {
        for (i, &x) in nodes.iter().enumerate() {
            if in_window(s, x) {
                table.rows.push(vec![x, t, field.values[j][i]]);
            }
        }
    }
    table
}

fn greeks_table(
    s: &Scenario,
    method: Method,
    market: &MarketParams,
    field: &Field,
    meta: Vec<(String, String)>,
) -> Result<Table> {
    let mut meta = meta;
    meta.push(("greeks.theta".into(), "-du/dt".into()));
    meta.push(("greeks.rho_scaled".into(), s.greeks_style.rho_scaled.to_string()));
    meta.push(("greeks.vega_sign".into(), s.greeks_style.vega_sign.to_string()));
    let mut table = Table::new(meta, &["S", "t", "delta", "gamma", "theta", "vega"]);
    let scale = if s.greeks_style.rho_scaled { market.rho } else { 1.0 };
    let vega_sign = s.greeks_style.vega_sign;
    let grid = &field.grid;
    let nodes = grid.nodes();
    let times = grid.times();

    if method == Method::ClosedForm {
        let surface = family(s, market)?.surface();
        for &t in &times {
            for &x in nodes.iter().filter(|&&x| in_window(s, x)) {
                let g = greeks(&surface, x, t, market)?;
                table.rows.push(vec![
                    x,
                    t,
                    scale * g.delta,
                    scale * g.gamma,
                    scale * g.theta,
                    scale * vega_sign * g.vega,
                ]);
            }
        }
        return Ok(table);
    }

    // Grid differences, with vega from two re-solves at bumped σ.
    let hv = VEGA_BUMP * market.sigma;
    let up = solve(s, method, &market.with_sigma(market.sigma + hv))?;
    let dn = solve(s, method, &market.with_sigma(market.sigma - hv))?;
    let (h, tau) = (grid.h(), grid.tau());
    let u = &field.values;
    let nt = grid.n_time;
    for (j, &t) in times.iter().enumerate() {
        for i in 1..grid.n_space - 1 {
            let x = nodes[i];
            if !in_window(s, x) {
                continue;
            }
            let delta = (u[j][i + 1] - u[j][i - 1]) / (2.0 * h);
            let gamma = (u[j][i + 1] - 2.0 * u[j][i] + u[j][i - 1]) / (h * h);
            let du_dt = if j == 0 {
                (u[1][i] - u[0][i]) / tau
            } else if j == nt {
                (u[nt][i] - u[nt - 1][i]) / tau
            } else {
                (u[j + 1][i] - u[j - 1][i]) / (2.0 * tau)
            };
            let vega = (up.values[j][i] - dn.values[j][i]) / (2.0 * hv);
            table.rows.push(vec![
                x,
                t,
                scale * delta,
                scale * gamma,
                -scale * du_dt,
                scale * vega_sign * vega,
            ]);
        }
    }
    Ok(table)
}

fn file_name(s: &Scenario, tag: Option<&str>, kind: &str) -> String {
    match tag {
        Some(tag) => format!("{}_{tag}_{kind}.csv", s.name),
        None => format!("{}_{kind}.csv", s.name),
    }
}

/// Run the outputs listed in the scenario with the given method.
pub fn run_scenario(s: &Scenario, method: Method, command: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let rhos = if method.is_linear() { vec![0.0] } else { s.rhos() };
    let base = base_meta(s, command, method, &rhos);
    let swept = rhos.len() > 1;
    let mut files = Vec::new();
    let mut slices: Vec<(f64, Field)> = Vec::new();

    let needs_solve = s.outputs.iter().any(|o| *o != OutputKind::Validation);
    if needs_solve {
        for &rho in &rhos {
            let market = s.market.with_rho(rho);
            let field = solve(s, method, &market)?;
            let tag = swept.then(|| rho_tag(rho));
            let meta = {
                let mut m = run_meta(&base, &field);
                if swept {
                    m.push(("run.rho".into(), rho.to_string()));
                }
                m
            };
            for out in &s.outputs {
                match out {
                    OutputKind::Surface => {
                        let table = surface_table(s, &field, meta.clone());
                        files.push(write_csv(out_dir, &file_name(s, tag.as_deref(), "surface"), &table)?);
                    }
                    OutputKind::Greeks => {
                        let table = greeks_table(s, method, &market, &field, meta.clone())?;
                        files.push(write_csv(out_dir, &file_name(s, tag.as_deref(), "greeks"), &table)?);
                    }
                    OutputKind::Slice | OutputKind::Validation => {}
                }
            }
            slices.push((rho, field));
        }
    }

    if s.outputs.contains(&OutputKind::Slice) {
        let mut meta = base.clone();
        let diverged = slices.iter().any(|(_, f)| f.diverged);
        meta.push(("diverged".into(), diverged.to_string()));
        meta.push(("t".into(), "0".into()));
        let columns: Vec<String> = if swept {
            rhos.iter().map(|r| format!("u_{}", rho_tag(*r))).collect()
        } else {
            vec!["u".into()]
        };
        let mut header = vec!["S"];
        header.extend(columns.iter().map(String::as_str));
        let mut table = Table::new(meta, &header);
        for (i, x) in s.grid.nodes().into_iter().enumerate() {
            if in_window(s, x) {
                let mut row = vec![x];
                row.extend(slices.iter().map(|(_, f)| f.values[0][i]));
                table.rows.push(row);
            }
        }
        files.push(write_csv(out_dir, &file_name(s, None, "slice"), &table)?);
    }

    if s.outputs.contains(&OutputKind::Validation) {
        files.push(run_validation(
            &s.checks,
            &out_dir.join(format!("{}_validation.txt", s.name)),
        )?);
    }
    Ok(files)
}

/// Run the named checks and write the report. Fails with
/// [`CliError::ChecksFailed`] after writing if any check did not pass.
pub fn run_validation(checks: &str, report: &Path) -> Result<PathBuf> {
    if let Some(dir) = report.parent() {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let reports = run_all(&Selection::parse(checks), Some(report))?;
    for r in &reports {
        println!("{}", r.to_record());
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(report.to_path_buf())
}

/// Nonlinear series against the linear model on the same grid at `t = 0`,
/// with the differences and, if requested, the sum of separately solved parts.
pub fn run_compare(s: &Scenario, out_dir: &Path) -> Result<PathBuf> {
    if s.method.is_linear() {
        return Err(CliError::field("method", "compare needs a nonlinear method"));
    }
    if matches!(s.payoff, Payoff::ClosedFormSnapshot { .. }) {
        return Err(CliError::field(
            "payoff.kind",
            "compare needs a payoff with a linear price",
        ));
    }
    let rhos = s.rhos();
    let swept = rhos.len() > 1;
    let lin_market = linear_market(&s.market)?;
    let linear = match s.linear_reference {
        LinearReference::Analytic => Field::from_linear_prices(&s.payoff, &s.grid, &lin_market)?,
        LinearReference::Fd => Field::from_solution(linear_fd_solve(&s.payoff, &s.grid, &lin_market)?),
    };

    let mut meta = base_meta(s, "compare", s.method, &rhos);
    meta.push((
        "compare.linear".into(),
        match s.linear_reference {
            LinearReference::Analytic => "analytic",
            LinearReference::Fd => "fd",
        }
        .into(),
    ));
    if !s.decompose.is_empty() {
        let parts: Vec<String> = s.decompose.iter().map(|k| k.to_string()).collect();
        meta.push(("compare.decompose".into(), parts.join(",")));
    }

    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    let mut diverged = false;
    for &rho in &rhos {
        let market = s.market.with_rho(rho);
        let suffix = if swept {
            format!("_{}", rho_tag(rho))
        } else {
            String::new()
        };
        let field = solve(s, s.method, &market)?;
        diverged |= field.diverged;
        let u = field.values[0].clone();
        let diff: Vec<f64> = u.iter().zip(&linear.values[0]).map(|(a, b)| a - b).collect();
        columns.push((format!("u{suffix}"), u.clone()));
        columns.push((format!("diff{suffix}"), diff));
        if let Payoff::Call { strike, .. } = s.payoff {
            if !s.decompose.is_empty() {
                let mut sum = vec![0.0; u.len()];
                for &k in &s.decompose {
                    let part = Scenario {
                        payoff: Payoff::call(strike, k)?,
                        ..s.clone()
                    };
                    let f = solve(&part, s.method, &market)?;
                    diverged |= f.diverged;
                    for (acc, v) in sum.iter_mut().zip(&f.values[0]) {
                        *acc += v;
                    }
                }
                let gap: Vec<f64> = u.iter().zip(&sum).map(|(a, b)| a - b).collect();
                columns.push((format!("u_parts{suffix}"), sum));
                columns.push((format!("parts_gap{suffix}"), gap));
            }
        }
    }
    columns.push(("u_linear".into(), linear.values[0].clone()));
    meta.push(("diverged".into(), diverged.to_string()));
    meta.push(("t".into(), "0".into()));

    let mut header = vec!["S"];
    header.extend(columns.iter().map(|(n, _)| n.as_str()));
    let mut table = Table::new(meta, &header);
    for (i, x) in s.grid.nodes().into_iter().enumerate() {
        if in_window(s, x) {
            let mut row = vec![x];
            row.extend(columns.iter().map(|(_, c)| c[i]));
            table.rows.push(row);
        }
    }
    write_csv(out_dir, &file_name(s, None, "compare"), &table)
}

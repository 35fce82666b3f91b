//! Scenario files: flat `key = value` lines, `#` comments, dotted section
//! prefixes. See [`SCENARIO_HELP`] for the keys and their defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use hedgecost::closed_form::{Branch, ClosedFormParams};
use hedgecost::fd::{BoundaryPolicy, InitialGuess, JacobianMode, LayerForm, SchemeChoice, SolverConfig};
use hedgecost::model::{GridSpec, MarketParams, Payoff};

use crate::error::{CliError, Result};

pub const SCENARIO_HELP: &str = "\
SCENARIO FILE KEYS (default in brackets, * = required)

  name                     output file prefix [file stem]
  method                   closed-form | implicit | explicit | linear-analytic | linear-fd *
  market.sigma             volatility *
  market.rho               illiquidity, > 0 for nonlinear methods [0]
  market.rate              interest rate, linear model only [0]
  grid.s_min, grid.s_max   price range, s_min > 0 *
  grid.n_space             space nodes including both ends *
  grid.n_time              time steps *
  grid.maturity            expiry T *
  payoff.kind              call | strangle | bull-spread | closed-form [closed-form for method=closed-form]
  payoff.strike            call strike
  payoff.multiplicity      number of calls [1]
  payoff.put_strike, payoff.call_strike, payoff.put_multiplicity [1], payoff.call_multiplicity [1]
  payoff.long_strike, payoff.short_strike
  closed_form.m            family parameter, nonzero
  closed_form.d1, closed_form.d2   additive terms d1*S + d2 [0]
  closed_form.eps2         + | - (does not change the value) [+]
  solver.newton_tol        [1e-12]
  solver.newton_max_iter   [100]
  solver.damping_max_halvings [40]
  solver.initial_guess     warm | <constant for the first layer> [warm]
  solver.boundary          payoff-held | closed-form | linear-bs [payoff-held]
  solver.jacobian          analytic | fd [analytic]
  solver.layer_form        auto | product | resolved [auto]
  outputs                  comma list of surface, greeks, slice, validation [surface]
  output.s_from, output.s_to   restrict written rows to this price window [whole grid]
  greeks.rho_scaled        multiply Greeks by rho [false]
  greeks.vega_sign         1 or -1 [1]
  sweep.rho                comma list; the run is repeated for each value [market.rho]
  compare.linear           analytic | fd reference for `compare` [analytic]
  compare.decompose        comma list of call multiplicities summed as a separate series []
  validation.checks        all | comma list of check names [all]
";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Implicit,
    Explicit,
    LinearAnalytic,
    LinearFd,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::Implicit => "implicit",
            Method::Explicit => "explicit",
            Method::LinearAnalytic => "linear-analytic",
            Method::LinearFd => "linear-fd",
        }
    }

    pub fn is_linear(self) -> bool {
        matches!(self, Method::LinearAnalytic | Method::LinearFd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    Surface,
    Greeks,
    Slice,
    Validation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearReference {
    Analytic,
    Fd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreeksStyle {
    pub rho_scaled: bool,
    pub vega_sign: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub market: MarketParams,
    pub grid: GridSpec,
    pub payoff: Payoff,
    pub method: Method,
    pub solver: SolverConfig,
    pub closed_form: Option<ClosedFormParams>,
    pub outputs: Vec<OutputKind>,
    pub window: Option<(f64, f64)>,
    pub greeks_style: GreeksStyle,
    pub sweep_rho: Vec<f64>,
    pub linear_reference: LinearReference,
    pub decompose: Vec<f64>,
    pub checks: String,
}

impl Scenario {
    /// Values of `ρ` to run: the sweep if given, else the market's own.
    pub fn rhos(&self) -> Vec<f64> {
        if self.sweep_rho.is_empty() {
            vec![self.market.rho]
        } else {
            self.sweep_rho.clone()
        }
    }
}

pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    parse_str(&text, &path.display().to_string(), stem)
}

struct Entry {
    line: usize,
    value: String,
}

struct Fields<'a> {
    source: &'a str,
    entries: BTreeMap<String, Entry>,
    used: BTreeSet<String>,
}

impl<'a> Fields<'a> {
    fn parse(text: &str, source: &'a str) -> Result<Self> {
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |msg: String| CliError::Parse {
                path: source.to_string(),
                line,
                msg,
            };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim();
            let value = value.trim();
            let valid = |c: char| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '.';
            if key.is_empty() || !key.chars().all(valid) || key.starts_with('.') || key.ends_with('.') {
                return Err(err(format!("invalid key `{key}`")));
            }
            if value.is_empty() {
                return Err(err(format!("empty value for `{key}`")));
            }
            if let Some(prev) = entries.get(key) {
                return Err(err(format!("duplicate key `{key}` (first set on line {})", prev.line)));
            }
            entries.insert(
                key.to_string(),
                Entry {
                    line,
                    value: value.to_string(),
                },
            );
        }
        Ok(Self {
            source,
            entries,
            used: BTreeSet::new(),
        })
    }

    fn parse_error(&self, key: &str, msg: String) -> CliError {
        CliError::Parse {
            path: self.source.to_string(),
            line: self.entries[key].line,
            msg,
        }
    }

    fn has_prefix(&self, prefix: &str) -> bool {
        self.entries.keys().any(|k| k.starts_with(prefix))
    }

    fn str(&mut self, key: &str) -> Option<String> {
        let v = self.entries.get(key)?.value.clone();
        self.used.insert(key.to_string());
        Some(v)
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.str(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| self.parse_error(key, format!("`{key}` expects a number, got `{v}`"))),
        }
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.str(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| self.parse_error(key, format!("`{key}` expects a non-negative integer, got `{v}`"))),
        }
    }

    fn bool(&mut self, key: &str) -> Result<Option<bool>> {
        match self.str(key).as_deref() {
            None => Ok(None),
            Some("true") => Ok(Some(true)),
            Some("false") => Ok(Some(false)),
            Some(v) => Err(self.parse_error(key, format!("`{key}` expects true or false, got `{v}`"))),
        }
    }

    fn list(&mut self, key: &str) -> Result<Vec<f64>> {
        let Some(v) = self.str(key) else {
            return Ok(Vec::new());
        };
        v.split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| self.parse_error(key, format!("`{key}` expects numbers, got `{}`", x.trim())))
            })
            .collect()
    }

    fn required_f64(&mut self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| CliError::field(key, "required"))
    }

    fn choice<T: Copy>(&mut self, key: &str, options: &[(&str, T)], default: T) -> Result<T> {
        let Some(v) = self.str(key) else {
            return Ok(default);
        };
        options
            .iter()
            .find(|(name, _)| *name == v)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.parse_error(key, format!("`{key}` must be one of {}, got `{v}`", names.join(", ")))
            })
    }

    fn finish(self) -> Result<()> {
        for (key, e) in &self.entries {
            if !self.used.contains(key) {
                return Err(CliError::Parse {
                    path: self.source.to_string(),
                    line: e.line,
                    msg: format!("unknown key `{key}`"),
                });
            }
        }
        Ok(())
    }
}

/// Rename a library parameter error to the scenario key it came from.
fn in_section(section: &str, e: hedgecost::Error) -> CliError {
    match e {
        hedgecost::Error::InvalidParameter { name, reason } => CliError::field(format!("{section}.{name}"), reason),
        other => CliError::Solver(other),
    }
}

pub fn parse_str(text: &str, source: &str, default_name: &str) -> Result<Scenario> {
    let mut f = Fields::parse(text, source)?;
    let name = f.str("name").unwrap_or_else(|| default_name.to_string());

    let method = match f.str("method") {
        None => return Err(CliError::field("method", "required")),
        Some(_) => f.choice(
            "method",
            &[
                ("closed-form", Method::ClosedForm),
                ("implicit", Method::Implicit),
                ("explicit", Method::Explicit),
                ("linear-analytic", Method::LinearAnalytic),
                ("linear-fd", Method::LinearFd),
            ],
            Method::Implicit,
        )?,
    };

    let sweep_rho = f.list("sweep.rho")?;
    for &r in &sweep_rho {
        if !(r > 0.0 && r.is_finite()) {
            return Err(CliError::field(
                "sweep.rho",
                format!("values must be positive, got {r}"),
            ));
        }
    }
    let sigma = f.required_f64("market.sigma")?;
    let rate = f.f64("market.rate")?.unwrap_or(0.0);
    let rho = match f.f64("market.rho")? {
        Some(r) => r,
        None => sweep_rho.first().copied().unwrap_or(0.0),
    };
    let market = if method.is_linear() {
        MarketParams::linear(sigma, rate)
    } else {
        MarketParams::new(sigma, rho, rate)
    }
    .map_err(|e| in_section("market", e))?;

    let grid = GridSpec::new(
        f.required_f64("grid.s_min")?,
        f.required_f64("grid.s_max")?,
        f.usize("grid.n_space")?
            .ok_or_else(|| CliError::field("grid.n_space", "required"))?,
        f.usize("grid.n_time")?
            .ok_or_else(|| CliError::field("grid.n_time", "required"))?,
        f.required_f64("grid.maturity")?,
    )
    .map_err(|e| in_section("grid", e))?;

    let closed_form = if f.has_prefix("closed_form.") || method == Method::ClosedForm {
        let m = f.required_f64("closed_form.m")?;
        let d1 = f.f64("closed_form.d1")?.unwrap_or(0.0);
        let d2 = f.f64("closed_form.d2")?.unwrap_or(0.0);
        let eps2 = f.choice(
            "closed_form.eps2",
            &[("+", Branch::Plus), ("-", Branch::Minus)],
            Branch::Plus,
        )?;
        if m == 0.0 {
            return Err(CliError::field("closed_form.m", "must be nonzero"));
        }
        Some(
            ClosedFormParams::explicit(m, d1, d2, sigma)
                .map_err(|e| in_section("closed_form", e))?
                .with_eps2(eps2),
        )
    } else {
        None
    };

    let snapshot = |key: &str| {
        let params = closed_form.ok_or_else(|| CliError::field(key, "closed-form payoff needs closed_form.m"))?;
        let market = MarketParams::new(sigma, rho, 0.0).map_err(|e| in_section("market", e))?;
        Ok::<_, CliError>(Payoff::ClosedFormSnapshot {
            params,
            market,
            t: grid.maturity,
        })
    };
    let kind = f.str("payoff.kind");
    let payoff = match kind.as_deref() {
        None if method == Method::ClosedForm => snapshot("payoff.kind")?,
        None => return Err(CliError::field("payoff.kind", "required")),
        Some("call") => Payoff::call(
            f.required_f64("payoff.strike")?,
            f.f64("payoff.multiplicity")?.unwrap_or(1.0),
        )
        .map_err(|e| in_section("payoff", e))?,
        Some("strangle") => Payoff::strangle(
            f.required_f64("payoff.put_strike")?,
            f.required_f64("payoff.call_strike")?,
            f.f64("payoff.put_multiplicity")?.unwrap_or(1.0),
            f.f64("payoff.call_multiplicity")?.unwrap_or(1.0),
        )
        .map_err(|e| in_section("payoff", e))?,
        Some("bull-spread") => Payoff::bull_spread(
            f.required_f64("payoff.long_strike")?,
            f.required_f64("payoff.short_strike")?,
        )
        .map_err(|e| in_section("payoff", e))?,
        Some("closed-form") => snapshot("payoff.kind")?,
        Some(other) => {
            return Err(f.parse_error(
                "payoff.kind",
                format!("`payoff.kind` must be one of call, strangle, bull-spread, closed-form, got `{other}`"),
            ))
        }
    };

    let defaults = SolverConfig::default();
    let initial_guess = match f.str("solver.initial_guess").as_deref() {
        None | Some("warm") => InitialGuess::WarmStart,
        Some(v) => InitialGuess::Constant(v.parse::<f64>().map_err(|_| {
            f.parse_error(
                "solver.initial_guess",
                format!("`solver.initial_guess` expects warm or a number, got `{v}`"),
            )
        })?),
    };
    #[derive(Clone, Copy)]
    enum Bound {
        Held,
        Closed,
        Linear,
    }
    let boundary = f.choice(
        "solver.boundary",
        &[
            ("payoff-held", Bound::Held),
            ("closed-form", Bound::Closed),
            ("linear-bs", Bound::Linear),
        ],
        Bound::Held,
    )?;
    let boundary_policy = match boundary {
        Bound::Held => BoundaryPolicy::PayoffHeld,
        Bound::Linear => BoundaryPolicy::LinearBlackScholes,
        Bound::Closed => BoundaryPolicy::ExactClosedForm(
            closed_form
                .ok_or_else(|| CliError::field("solver.boundary", "closed-form boundaries need closed_form.m"))?,
        ),
    };
    let solver = SolverConfig {
        scheme: if method == Method::Explicit {
            SchemeChoice::Explicit
        } else {
            SchemeChoice::Implicit
        },
        newton_tol: f.f64("solver.newton_tol")?.unwrap_or(defaults.newton_tol),
        newton_max_iter: f.usize("solver.newton_max_iter")?.unwrap_or(defaults.newton_max_iter),
        damping_max_halvings: f
            .usize("solver.damping_max_halvings")?
            .unwrap_or(defaults.damping_max_halvings),
        initial_guess,
        boundary_policy,
        jacobian: f.choice(
            "solver.jacobian",
            &[
                ("analytic", JacobianMode::Analytic),
                ("fd", JacobianMode::FiniteDifference),
            ],
            defaults.jacobian,
        )?,
        layer_form: f.choice(
            "solver.layer_form",
            &[
                ("auto", LayerForm::Auto),
                ("product", LayerForm::Product),
                ("resolved", LayerForm::Resolved),
            ],
            defaults.layer_form,
        )?,
    };
    solver.validate().map_err(|e| in_section("solver", e))?;

    let outputs = match f.str("outputs") {
        None => vec![OutputKind::Surface],
        Some(v) => {
            let mut out = Vec::new();
            for item in v.split(',').map(str::trim) {
                let kind = match item {
                    "surface" => OutputKind::Surface,
                    "greeks" => OutputKind::Greeks,
                    "slice" => OutputKind::Slice,
                    "validation" => OutputKind::Validation,
                    other => return Err(f.parse_error("outputs", format!("unknown output `{other}`"))),
                };
                if !out.contains(&kind) {
                    out.push(kind);
                }
            }
            out
        }
    };

    let window = match (f.f64("output.s_from")?, f.f64("output.s_to")?) {
        (None, None) => None,
        (a, b) => {
            let (lo, hi) = (a.unwrap_or(grid.s_min), b.unwrap_or(grid.s_max));
            if !(lo < hi) {
                return Err(CliError::field("output.s_from", "must be below output.s_to"));
            }
            Some((lo, hi))
        }
    };

    let greeks_style = GreeksStyle {
        rho_scaled: f.bool("greeks.rho_scaled")?.unwrap_or(false),
        vega_sign: match f.f64("greeks.vega_sign")? {
            None => 1.0,
            Some(s) if s == 1.0 || s == -1.0 => s,
            Some(s) => return Err(CliError::field("greeks.vega_sign", format!("must be 1 or -1, got {s}"))),
        },
    };
    if greeks_style.rho_scaled && method.is_linear() {
        return Err(CliError::field("greeks.rho_scaled", "the linear model has rho = 0"));
    }

    let linear_reference = f.choice(
        "compare.linear",
        &[("analytic", LinearReference::Analytic), ("fd", LinearReference::Fd)],
        LinearReference::Analytic,
    )?;
    let decompose = f.list("compare.decompose")?;
    if !decompose.is_empty() && !matches!(payoff, Payoff::Call { .. }) {
        return Err(CliError::field("compare.decompose", "needs a call payoff"));
    }
    for &k in &decompose {
        if !(k > 0.0 && k.is_finite()) {
            return Err(CliError::field(
                "compare.decompose",
                format!("multiplicities must be positive, got {k}"),
            ));
        }
    }
    if !sweep_rho.is_empty() && method.is_linear() {
        return Err(CliError::field("sweep.rho", "the linear model has no rho to sweep"));
    }
    let checks = f.str("validation.checks").unwrap_or_else(|| "all".to_string());

    f.finish()?;
    Ok(Scenario {
        name,
        market,
        grid,
        payoff,
        method,
        solver,
        closed_form,
        outputs,
        window,
        greeks_style,
        sweep_rho,
        linear_reference,
        decompose,
        checks,
    })
}

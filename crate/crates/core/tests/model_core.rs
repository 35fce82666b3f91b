mod common;

use approx::assert_relative_eq;
use hedgecost::closed_form::{trivial_u, Branch, ClosedFormParams, TrivialSolution};
use hedgecost::model::{
    degenerate_surface, payoff_value, pde_residual, rho_rescale, GridSpec, MarketParams, Payoff, PriceSurface,
};
use hedgecost::Error;
use proptest::prelude::*;

fn market() -> MarketParams {
    MarketParams::new(0.35, 0.1, 0.0).unwrap()
}

#[test]
fn linear_surface_has_zero_residual() {
    for s in [0.01, 0.5, 1.0, 40.0] {
        assert_eq!(pde_residual(0.0, 0.0, s, &market()).unwrap(), 0.0);
    }
}

#[test]
fn degenerate_curvature_is_singular() {
    let p = market();
    let s = 1.3;
    let err = pde_residual(0.0, 1.0 / (p.rho * s), s, &p).unwrap_err();
    assert!(matches!(err, Error::SingularDenominator { .. }));
}

#[test]
fn closed_form_member_residual_from_numerical_derivatives() {
    let p = market();
    let fam = ClosedFormParams::explicit(0.5, 0.0, 0.0, p.sigma).unwrap();
    let u = |s: f64, t: f64| fam.value(s, t, &p).unwrap();
    let u_t = common::d1(|t| u(1.0, t), 0.5, 0.02);
    let u_ss = common::d2(|s| u(s, 0.5), 1.0, 0.01);
    let r = pde_residual(u_t, u_ss, 1.0, &p).unwrap();
    assert!(r.abs() < 1e-8, "residual {r}");
}

#[test]
fn residual_rejects_non_positive_price() {
    assert!(matches!(pde_residual(0.0, 0.0, 0.0, &market()), Err(Error::Domain(_))));
}

#[test]
fn payoff_examples() {
    let call = Payoff::call(0.914, 1.0).unwrap();
    assert_relative_eq!(payoff_value(&call, 1.0).unwrap(), 0.086, epsilon = 1e-15);
    let strangle = Payoff::strangle(15.0, 20.0, 1.0, 1.0).unwrap();
    assert_eq!(payoff_value(&strangle, 10.0).unwrap(), 5.0);
    let spread = Payoff::bull_spread(60.0, 80.0).unwrap();
    assert_eq!(payoff_value(&spread, 100.0).unwrap(), 20.0);
    assert_eq!(payoff_value(&spread, 0.0).unwrap(), 0.0);
}

#[test]
fn payoff_constructors_enforce_invariants() {
    assert!(Payoff::call(0.0, 1.0).is_err());
    assert!(Payoff::call(1.0, -1.0).is_err());
    assert!(Payoff::strangle(20.0, 15.0, 1.0, 1.0).is_err());
    assert!(Payoff::strangle(15.0, 20.0, 0.0, 1.0).is_err());
    assert!(Payoff::bull_spread(80.0, 60.0).is_err());
    assert!(Payoff::bull_spread(60.0, 60.0).is_err());
}

#[test]
fn degenerate_surface_examples() {
    assert_eq!(degenerate_surface(1.0, 0.0, 0.0, 1.0).unwrap(), 0.0);
    let e = std::f64::consts::E;
    assert_relative_eq!(degenerate_surface(e, 0.0, 0.0, 1.0).unwrap(), e, max_relative = 1e-15);
    assert!(matches!(degenerate_surface(0.0, 0.0, 0.0, 1.0), Err(Error::Domain(_))));
    assert!(matches!(degenerate_surface(-1.0, 0.0, 0.0, 1.0), Err(Error::Domain(_))));
    assert!(degenerate_surface(1.0, 0.0, 0.0, 0.0).is_err());
}

#[test]
fn degenerate_surface_curvature_matches_one_over_rho_s() {
    for (s, rho) in [(0.3, 0.1), (1.0, 1.0), (7.0, 0.05), (55.0, 0.3)] {
        let num = common::d2(|x| degenerate_surface(x, 0.4, -2.0, rho).unwrap(), s, 0.01 * s);
        assert_relative_eq!(num, 1.0 / (rho * s), max_relative = 1e-8);
    }
}

#[test]
fn rescale_examples() {
    let p = market();
    let fam = ClosedFormParams::explicit(0.5, 0.0, 0.0, p.sigma).unwrap();

    let same = rho_rescale(fam, 1.0).unwrap();
    let p1 = p.with_rho(1.0);
    let fam1 = ClosedFormParams::explicit(0.5, 0.0, 0.0, p.sigma).unwrap();
    assert_eq!(same.value(0.7, 0.3, &p1).unwrap(), fam1.value(0.7, 0.3, &p1).unwrap());

    let scaled = rho_rescale(fam, 0.1).unwrap();
    let unit = p.with_rho(1.0);
    for (s, t) in [(0.2, 0.0), (0.9, 0.4), (1.7, 1.0)] {
        let w = |s: f64, t: f64| scaled.value(s, t, &unit).unwrap();
        let r = common::fd_residual(w, s, t, unit.sigma, 1.0);
        assert!(r.abs() < 1e-8 * w(s, t).abs().max(1.0), "residual {r} at ({s}, {t})");
    }

    let c1 = 2.5;
    let lin = |s: f64, _t: f64, _p: &MarketParams| Ok(c1 * s);
    let r = rho_rescale(lin, 0.1).unwrap();
    assert_relative_eq!(r.value(3.0, 0.0, &unit).unwrap(), 0.1 * c1 * 3.0, max_relative = 1e-15);
    assert_eq!(pde_residual(0.0, 0.0, 3.0, &unit).unwrap(), 0.0);

    assert!(rho_rescale(fam, 0.0).is_err());
    assert!(rho_rescale(fam, -0.2).is_err());
}

#[test]
fn grid_and_market_validation() {
    assert!(GridSpec::new(0.0, 2.0, 10, 10, 1.0).is_err());
    assert!(GridSpec::new(1.0, 1.0, 10, 10, 1.0).is_err());
    assert!(GridSpec::new(0.1, 2.0, 2, 10, 1.0).is_err());
    assert!(GridSpec::new(0.1, 2.0, 10, 0, 1.0).is_err());
    assert!(GridSpec::new(0.1, 2.0, 10, 10, 0.0).is_err());
    let g = GridSpec::new(0.1, 2.0, 39, 18, 0.9).unwrap();
    assert_relative_eq!(g.h(), 0.05, max_relative = 1e-14);
    assert_relative_eq!(g.tau(), 0.05, max_relative = 1e-14);
    assert_eq!(g.s(38), 2.0);
    assert_eq!(g.t(18), 0.9);

    assert!(MarketParams::new(0.35, 0.0, 0.0).is_err());
    assert!(MarketParams::new(0.35, -0.1, 0.0).is_err());
    assert!(MarketParams::new(0.0, 0.1, 0.0).is_err());
    assert!(MarketParams::new(0.35, 0.1, -0.01).is_err());
    assert!(MarketParams::linear(0.35, 0.02).is_ok());
}

proptest! {
    #[test]
    fn linear_solutions_are_exact(s in 1e-3..1e3f64, sigma in 0.05..1.0f64, rho in 1e-3..2.0f64) {
        // u = c₁S has u_t = u_SS = 0 whatever c₁ is.
        let p = MarketParams::new(sigma, rho, 0.0).unwrap();
        prop_assert_eq!(pde_residual(0.0, 0.0, s, &p).unwrap(), 0.0);
    }

    #[test]
    fn log_linear_solutions_have_zero_residual(
        s in 1e-2..1e2f64,
        t in 0.0..2.0f64,
        delta in 0.01..0.5f64,
        upper in any::<bool>(),
        d0 in -3.0..3.0f64,
    ) {
        let p = MarketParams::new(0.35, 0.1, 0.0).unwrap();
        let sign = if upper { Branch::Plus } else { Branch::Minus };
        // u = k (S ln S − δ S t) + d₀ S, so u_t = −kδS and u_SS = k/S.
        let k = (1.0 + sign.sign() * (p.sigma * p.sigma / (2.0 * delta)).sqrt()) / p.rho;
        let sol = TrivialSolution::LogLinear { sign, d0 };
        let u = trivial_u(s, t, &sol, &p, delta).unwrap();
        prop_assert!((u - (k * (s * s.ln() - delta * s * t) + d0 * s)).abs() <= 1e-12 * u.abs().max(1.0));
        let r = pde_residual(-k * delta * s, k / s, s, &p).unwrap();
        prop_assert!(r.abs() <= 1e-12 * (k * delta * s).abs().max(1.0), "residual {}", r);
    }

    #[test]
    fn degenerate_surface_is_always_singular(s in 1e-3..1e3f64, rho in 1e-3..5.0f64, sigma in 0.05..1.0f64) {
        let p = MarketParams::new(sigma, rho, 0.0).unwrap();
        // u₀_SS = 1/(ρS) exactly.
        let err = pde_residual(0.0, 1.0 / (rho * s), s, &p).unwrap_err();
        let is_singular = matches!(err, Error::SingularDenominator { .. });
        prop_assert!(is_singular);
    }

    #[test]
    fn rescale_round_trip(s in 0.05..5.0f64, t in 0.0..1.0f64, rho in 0.01..1.0f64) {
        let p = MarketParams::new(0.35, rho, 0.0).unwrap();
        let fam = ClosedFormParams::explicit(0.8, 0.3, -1.0, p.sigma).unwrap();
        let u = fam.value(s, t, &p).unwrap();
        let back = rho_rescale(fam, rho).unwrap().value(s, t, &p.with_rho(1.0)).unwrap() / rho;
        prop_assert!((back - u).abs() <= f64::EPSILON * u.abs(), "{} vs {}", back, u);
    }

    #[test]
    fn payoffs_are_piecewise_linear(
        e1 in 0.5..50.0f64,
        gap in 0.5..50.0f64,
        k1 in 0.1..10.0f64,
        k2 in 0.1..10.0f64,
        which in 0usize..3,
    ) {
        let e2 = e1 + gap;
        let payoff = match which {
            0 => Payoff::call(e1, k1).unwrap(),
            1 => Payoff::strangle(e1, e2, k1, k2).unwrap(),
            _ => Payoff::bull_spread(e1, e2).unwrap(),
        };
        let strikes = payoff.strikes();
        let h = 1e-3;
        let mut s = h;
        while s < e2 * 2.0 {
            let kink = strikes.iter().any(|&k| (s - k).abs() <= 2.0 * h);
            let f = |x: f64| payoff_value(&payoff, x).unwrap();
            let second = f(s - h) - 2.0 * f(s) + f(s + h);
            if !kink {
                prop_assert!(second.abs() <= 1e-9 * f(s).abs().max(1.0), "curvature {} at {}", second, s);
            }
            s += 0.37;
        }
    }
}

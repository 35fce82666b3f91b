mod common;

use approx::assert_relative_eq;
use hedgecost::closed_form::{
    apply_group, asymptotic_large_s, asymptotic_small_s, exceptional_y, greeks, group_invariants, invariant_u,
    invariant_y, ode_residual_v, ode_residual_y, reduce_coords, trivial_u, Branch, ClosedFormParams, GroupElement,
    TrivialSolution,
};
use hedgecost::model::{degenerate_surface, MarketParams, PriceSurface};
use hedgecost::Error;
use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

fn market(sigma: f64, rho: f64) -> MarketParams {
    MarketParams::new(sigma, rho, 0.0).unwrap()
}

fn member(m: f64, sigma: f64) -> ClosedFormParams {
    ClosedFormParams::explicit(m, 0.0, 0.0, sigma).unwrap()
}

#[test]
fn reduced_coordinates() {
    assert_eq!(reduce_coords(1.0, 0.0, 0.3).unwrap(), 0.0);
    assert_relative_eq!(
        reduce_coords(std::f64::consts::E, 0.0, 7.0).unwrap(),
        1.0,
        max_relative = 1e-15
    );
    let delta = 0.35 * 0.35 / 8.0;
    assert_relative_eq!(
        reduce_coords(2.0, 1.0, delta).unwrap(),
        2f64.ln() - 0.0153125,
        max_relative = 1e-14
    );
    assert!(matches!(reduce_coords(0.0, 0.0, 0.1), Err(Error::Domain(_))));
}

#[test]
fn matches_high_precision_values() {
    for (s, t, sigma, rho, m, expected) in common::REFERENCE_VALUES {
        let u = invariant_u(s, t, &member(m, sigma), &market(sigma, rho)).unwrap();
        assert_relative_eq!(u, expected, max_relative = 1e-12);
    }
}

#[test]
fn agrees_with_term_by_term_formula_for_all_sign_choices() {
    // The literal form loses digits to cancellation, so compare at moderate S.
    let (sigma, rho) = (0.35, 0.1);
    let p = market(sigma, rho);
    for m in [-2.0, -0.5, 0.5, 1.0, 8.5] {
        let fam = ClosedFormParams::explicit(m, 0.4, -1.5, sigma).unwrap();
        for (s, t) in [(0.1, 0.0), (0.6, 0.3), (1.0, 0.5), (2.0, 1.0), (5.0, 0.2)] {
            let u = invariant_u(s, t, &fam, &p).unwrap();
            for e1 in [1.0, -1.0] {
                for e2 in [1.0, -1.0] {
                    let lit = common::literal_family(s, t, sigma, rho, m, 0.4, -1.5, e1, e2);
                    assert_relative_eq!(u, lit, max_relative = 1e-9, epsilon = 1e-9);
                }
            }
        }
    }
}

#[test]
fn sign_of_logarithm_root_does_not_matter() {
    let p = market(0.35, 0.1);
    let fam = member(0.5, 0.35);
    for s in [0.05, 0.5, 1.5, 40.0] {
        let a = invariant_u(s, 0.2, &fam, &p).unwrap();
        let b = invariant_u(s, 0.2, &fam.with_eps2(Branch::Minus), &p).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn zero_m_is_redirected() {
    let p = market(0.35, 0.1);
    assert!(matches!(
        invariant_u(1.0, 0.0, &member(0.0, 0.35), &p),
        Err(Error::DegenerateFamily)
    ));
}

#[test]
fn rejects_mismatched_delta_and_bad_inputs() {
    let fam = member(0.5, 0.35);
    assert!(matches!(
        invariant_u(1.0, 0.0, &fam, &market(0.2, 0.1)),
        Err(Error::InvalidParameter { .. })
    ));
    assert!(matches!(
        invariant_u(0.0, 0.0, &fam, &market(0.35, 0.1)),
        Err(Error::Domain(_))
    ));
    assert!(ClosedFormParams::explicit(f64::NAN, 0.0, 0.0, 0.35).is_err());
    assert!(ClosedFormParams::explicit(1.0, 0.0, 0.0, 0.0).is_err());
}

#[test]
fn residual_on_random_points() {
    let p = market(0.35, 0.1);
    let fam = member(0.5, 0.35);
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..200 {
        let s = rng.gen_range(0.1..2.0) + 1e-9;
        let t = rng.gen_range(0.0..1.0);
        let u = |s: f64, t: f64| invariant_u(s, t, &fam, &p).unwrap();
        let r = common::fd_residual(u, s, t, p.sigma, p.rho);
        assert!(r.abs() < 1e-8 * u(s, t).abs().max(1.0), "residual {r} at ({s}, {t})");
    }
}

#[test]
fn small_price_shape() {
    // Convex with ρ S u_SS > 1, and negative near the origin where
    // u → −|m|^{4/3} e^{δt} / ρ.
    let p = market(0.35, 0.1);
    let fam = member(0.5, 0.35);
    let u = |s: f64, t: f64| invariant_u(s, t, &fam, &p).unwrap();
    for t in [0.0, 0.5, 1.0] {
        let mut s = 0.02;
        while s <= 2.0 {
            let u_ss = common::d2(|x| u(x, t), s, 0.01 * s);
            assert!(p.rho * s * u_ss > 1.0, "ρSΓ = {} at S = {s}", p.rho * s * u_ss);
            s += 0.02;
        }
        let limit = -(0.5f64).powf(4.0 / 3.0) * (fam.delta * t).exp() / p.rho;
        assert_relative_eq!(u(1e-12, t), limit, max_relative = 1e-6);
        assert!(u(1.0, t) > 0.0 && u(2.0, t) > u(1.0, t));
    }
}

#[test]
fn strangle_member_has_strangle_shape() {
    let (sigma, rho) = (0.25, 0.05);
    let p = market(sigma, rho);
    let fam = ClosedFormParams::explicit(1338.0, 140.0, 295139.0, sigma).unwrap();
    let u = |s: f64| invariant_u(s, 0.0, &fam, &p).unwrap();
    let nodes: Vec<f64> = (1..=400).map(|k| 0.1 * k as f64).collect();
    let (s_min, _) = nodes
        .iter()
        .map(|&s| (s, u(s)))
        .fold((0.0, f64::INFINITY), |a, (s, v)| if v < a.1 { (s, v) } else { a });
    assert!(s_min > 5.0 && s_min < 15.0, "minimum at {s_min}");
    assert!(u(0.1) > u(5.0) && u(5.0) > u(s_min));
    assert!(u(40.0) > u(20.0) && u(20.0) > u(s_min));
}

#[test]
fn trivial_solutions() {
    let p = market(0.35, 0.1);
    assert_eq!(
        trivial_u(3.0, 0.7, &TrivialSolution::Linear { c1: 2.0 }, &p, 0.1).unwrap(),
        6.0
    );

    // δ = σ²/2 makes the upper coefficient 2/ρ.
    let delta = p.sigma * p.sigma / 2.0;
    let sol = TrivialSolution::LogLinear {
        sign: Branch::Plus,
        d0: 0.0,
    };
    let (s, t): (f64, f64) = (1.7, 0.4);
    let expected = 2.0 / p.rho * (s * s.ln() - delta * s * t);
    assert_relative_eq!(
        trivial_u(s, t, &sol, &p, delta).unwrap(),
        expected,
        max_relative = 1e-14
    );

    for delta in [0.01, 0.0153125, 0.2] {
        for sign in [Branch::Plus, Branch::Minus] {
            let sol = TrivialSolution::LogLinear { sign, d0: 0.3 };
            for (s, t) in [(0.3, 0.0), (1.1, 0.5), (4.0, 1.0)] {
                let u = |s: f64, t: f64| trivial_u(s, t, &sol, &p, delta).unwrap();
                let r = common::fd_residual(u, s, t, p.sigma, p.rho);
                assert!(r.abs() < 1e-8 * u(s, t).abs().max(1.0), "residual {r}");
            }
        }
    }

    assert!(matches!(trivial_u(1.0, 0.0, &sol, &p, 0.0), Err(Error::Domain(_))));
    assert!(matches!(trivial_u(1.0, 0.0, &sol, &p, -1.0), Err(Error::Domain(_))));
}

#[test]
fn exceptional_point() {
    let sigma = 0.35;
    assert_eq!(exceptional_y(sigma * sigma / 8.0, sigma, 0.1), Some(10.0));
    assert_eq!(exceptional_y(sigma * sigma / 4.0, sigma, 0.1), None);

    // At δ = σ²/8 the lower log-linear solution has v = −u/S = z/ρ + const.
    let p = market(sigma, 0.1);
    let delta = sigma * sigma / 8.0;
    let sol = TrivialSolution::LogLinear {
        sign: Branch::Minus,
        d0: 0.7,
    };
    for (s, t) in [(0.5, 0.0), (1.3, 0.4), (3.0, 0.9)] {
        let v = -trivial_u(s, t, &sol, &p, delta).unwrap() / s;
        let z = reduce_coords(s, t, delta).unwrap();
        assert_relative_eq!(v, z / p.rho - 0.7, max_relative = 1e-12, epsilon = 1e-12);
    }
}

#[test]
fn y_values_and_symmetry() {
    let p = market(0.35, 0.1);
    for z in [-3.0, 0.0, 2.0] {
        let y = invariant_y(z, &member(0.0, 0.35), &p).unwrap();
        assert_eq!(y, -3.0 / p.rho);
        assert_relative_eq!(y, -30.0, max_relative = f64::EPSILON);
    }
    let delta = member(0.5, 0.35).delta;
    let y = |z: f64| invariant_y(z, &member(0.5, 0.35), &p).unwrap();
    let y_z = common::d1(y, 0.0, 0.01);
    let r = ode_residual_y(y(0.0), y_z, &p, delta).unwrap();
    assert!(r.abs() < 1e-8, "residual {r}");
}

#[test]
fn reduced_equation_residuals() {
    let p = market(0.35, 0.1);
    let delta = 0.05;
    assert_eq!(ode_residual_v(0.0, 0.0, &p, delta).unwrap(), 0.0);
    for sign in [1.0, -1.0] {
        let c = (p.sigma * p.sigma / (2.0 * delta)).sqrt();
        let v_z = -(1.0 + sign * c) / p.rho;
        assert!(ode_residual_v(v_z, 0.0, &p, delta).unwrap().abs() < 1e-12);
        let y = (-1.0 + sign * c) / p.rho;
        assert!(ode_residual_y(y, 0.0, &p, delta).unwrap().abs() < 1e-11);
    }
    assert!(matches!(
        ode_residual_y(0.0, 1.0, &p, delta),
        Err(Error::DivisionByZero(_))
    ));
    assert!(matches!(
        ode_residual_v(1.0, 1.0, &p, 0.0),
        Err(Error::DivisionByZero(_))
    ));

    // Discriminant point: the equation and its y_z-derivative both vanish.
    let d8 = p.sigma * p.sigma / 8.0;
    let y = 1.0 / p.rho;
    let f = |yz: f64| ode_residual_y(y, yz, &p, d8).unwrap();
    assert!(f(0.0).abs() < 1e-12);
    assert!(common::d1(f, 0.0, 1e-3).abs() < 1e-10);
}

#[test]
fn pushed_through_reduction() {
    let p = market(0.35, 0.1);
    let fam = member(0.5, 0.35);
    let delta = fam.delta;
    for t in [0.0, 0.6] {
        // v(z) = −u/S at S = e^{z + δt}; the same function for every t.
        let v = |z: f64| {
            let s = (z + delta * t).exp();
            -invariant_u(s, t, &fam, &p).unwrap() / s
        };
        for z in [-1.5, -0.2, 0.0, 0.7] {
            let v_z = common::d1(v, z, 0.01);
            let v_zz = common::d2(v, z, 0.01);
            let r = ode_residual_v(v_z, v_zz, &p, delta).unwrap();
            // Relative to the size of the two terms being balanced.
            let w = v_z + v_zz;
            let scale = (v_z * (1.0 + p.rho * w).powi(2)).abs() + (p.sigma * p.sigma / (2.0 * delta) * w).abs();
            assert!(r.abs() < 1e-8 * scale, "v residual {r} (scale {scale}) at z = {z}");
            let y = invariant_y(z, &fam, &p).unwrap();
            assert_relative_eq!(v_z, y, max_relative = 1e-8);
        }
    }
}

#[test]
fn group_action_examples() {
    let p = market(0.35, 0.1);
    let fam = member(0.5, 0.35);
    let id = apply_group(fam, GroupElement::new(0.3, -0.2, 1.1, 0.5, 0.0));
    for (s, t) in [(0.4, 0.1), (1.2, 0.8)] {
        assert_eq!(id.value(s, t, &p).unwrap(), fam.value(s, t, &p).unwrap());
    }

    let zero = |_s: f64, _t: f64, _p: &MarketParams| Ok(0.0);
    let shifted = apply_group(zero, GroupElement::new(0.0, 0.0, 1.0, 2.0, 1.0));
    for s in [0.5, 1.0, 3.0] {
        assert_relative_eq!(shifted.value(s, 0.3, &p).unwrap(), s + 2.0, max_relative = 1e-15);
    }

    let g = GroupElement::new(0.4, 0.3, -0.7, 1.2, 0.8);
    let moved = apply_group(fam, g);
    for (s, t) in [(0.3, 0.2), (0.9, 0.5), (1.8, 1.0)] {
        let u = |s: f64, t: f64| moved.value(s, t, &p).unwrap();
        let r = common::fd_residual(u, s, t, p.sigma, p.rho);
        assert!(r.abs() < 1e-8 * u(s, t).abs().max(1.0), "residual {r}");
    }
}

#[test]
fn invariants_examples() {
    let g = GroupElement::new(1.0, 0.0, 0.0, 0.0, 0.0);
    assert_eq!(group_invariants(3.7, 5.0, 1.0, &g).unwrap().0, 5.0);
    let g = GroupElement::new(1.0, 0.4, 7.0, 0.0, 0.0);
    assert_eq!(group_invariants(1.0, 2.0, -4.5, &g).unwrap().1, -4.5);
    assert!(matches!(group_invariants(0.0, 0.0, 0.0, &g), Err(Error::Domain(_))));

    let g0 = GroupElement::new(0.6, -0.3, 0.9, 1.4, 0.0);
    let (s, t, u) = (1.3, 0.4, 2.2);
    let base = group_invariants(s, t, u, &g0).unwrap();
    for k in 0..=20 {
        let g = GroupElement {
            epsilon: -2.0 + 0.2 * k as f64,
            ..g0
        };
        let (s1, t1, u1) = g.act(s, t, u);
        let inv = group_invariants(s1, t1, u1, &g).unwrap();
        assert_relative_eq!(inv.0, base.0, epsilon = 1e-12);
        assert_relative_eq!(inv.1, base.1, epsilon = 1e-12);
    }
}

#[test]
fn small_price_expansion() {
    let p = market(0.35, 0.1);
    let fam = member(1.0, 0.35);
    assert_relative_eq!(
        asymptotic_small_s(1e-300, 0.0, &fam, &p).unwrap(),
        -1.0 / p.rho,
        max_relative = 1e-12
    );
    let fam = member(0.5, 0.35);
    let t = 0.7;
    let lead = -(0.5f64).powf(4.0 / 3.0) * (fam.delta * t).exp() / p.rho;
    assert_relative_eq!(
        asymptotic_small_s(1e-300, t, &fam, &p).unwrap(),
        lead,
        max_relative = 1e-12
    );

    let mut s = 1e-2;
    while s >= 1e-5 {
        let rem = invariant_u(s, t, &fam, &p).unwrap() - asymptotic_small_s(s, t, &fam, &p).unwrap();
        assert!(
            (rem / s.powf(2.5)).abs() <= 5.0,
            "scaled remainder {} at {s}",
            rem / s.powf(2.5)
        );
        s /= 2.0;
    }
}

#[test]
fn large_price_expansion() {
    let p = market(0.35, 0.1);
    let fam = member(0.5, 0.35);
    let mut s = 1e3;
    while s <= 1e6 {
        let rem = invariant_u(s, 0.4, &fam, &p).unwrap() - asymptotic_large_s(s, 0.4, &fam, &p).unwrap();
        assert!(
            (rem * s.powf(1.25)).abs() <= 1.0,
            "scaled remainder {} at {s}",
            rem * s.powf(1.25)
        );
        s *= 2.0;
    }

    let ratio = |s: f64, m: f64| invariant_u(s, 0.0, &member(m, 0.35), &p).unwrap() / (3.0 * s * s.ln() / p.rho);
    let mut last = f64::INFINITY;
    for s in [1e6, 1e12, 1e24, 1e48] {
        let dev = (ratio(s, 1.0) / ratio(s, 10.0) - 1.0).abs();
        assert!(dev < last);
        last = dev;
        assert!((ratio(s, 1.0) - 1.0).abs() < 0.5);
    }
    assert!(last < 0.05);
}

#[test]
fn greeks_of_simple_surfaces() {
    let p = market(0.35, 0.1);
    let lin = |s: f64, _t: f64, _p: &MarketParams| Ok(2.5 * s);
    let g = greeks(&lin, 1.3, 0.4, &p).unwrap();
    assert_relative_eq!(g.delta, 2.5, max_relative = 1e-10);
    assert!(g.gamma.abs() < 1e-6);
    assert_eq!(g.theta, 0.0);
    assert_eq!(g.vega, 0.0);

    let deg = |s: f64, _t: f64, p: &MarketParams| degenerate_surface(s, 0.3, 1.0, p.rho);
    for s in [0.5, 2.0, 30.0] {
        let g = greeks(&deg, s, 0.0, &p).unwrap();
        assert_relative_eq!(g.gamma, 1.0 / (p.rho * s), max_relative = 1e-6);
    }
}

#[test]
fn greeks_of_family_member() {
    let p = market(0.35, 0.1);
    let surf = member(0.5, 0.35).surface();
    let (s, t) = (1.1, 0.3);
    let g = greeks(&surf, s, t, &p).unwrap();
    let u = |s: f64, t: f64, sigma: f64| surf.value(s, t, &p.with_sigma(sigma)).unwrap();
    assert_relative_eq!(g.delta, common::d1(|x| u(x, t, 0.35), s, 0.01), max_relative = 1e-7);
    assert_relative_eq!(g.gamma, common::d2(|x| u(x, t, 0.35), s, 0.01), max_relative = 1e-5);
    assert_relative_eq!(g.theta, -common::d1(|x| u(s, x, 0.35), t, 0.01), max_relative = 1e-7);
    assert_relative_eq!(g.vega, common::d1(|x| u(s, t, x), 0.35, 0.01), max_relative = 1e-7);
}

#[test]
fn scaled_delta_is_monotone() {
    let p = market(0.28, 1.0);
    let surf = ClosedFormParams::explicit(8.5, 0.0, 0.0, 0.28).unwrap().surface();
    for t in [0.0, 0.5, 1.0] {
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=200 {
            let s = 0.5 * k as f64;
            let d = p.rho * greeks(&surf, s, t, &p).unwrap().delta;
            assert!(d > prev, "ρΔ not increasing at S = {s}");
            prev = d;
        }
    }
}

proptest! {
    #[test]
    fn even_in_m(m in 0.01..50.0f64, s in 0.01..20.0f64, t in 0.0..2.0f64) {
        let p = market(0.3, 0.2);
        let a = invariant_u(s, t, &member(m, 0.3), &p).unwrap();
        let b = invariant_u(s, t, &member(-m, 0.3), &p).unwrap();
        prop_assert_eq!(a, b);
        let ya = invariant_y(s.ln(), &member(m, 0.3), &p).unwrap();
        let yb = invariant_y(s.ln(), &member(-m, 0.3), &p).unwrap();
        prop_assert_eq!(ya, yb);
    }

    #[test]
    fn additive_constants_pass_through(m in 0.1..10.0f64, d1 in -5.0..5.0f64, d2 in -5.0..5.0f64, s in 0.05..5.0f64) {
        let p = market(0.35, 0.1);
        let base = invariant_u(s, 0.3, &member(m, 0.35), &p).unwrap();
        let shifted = invariant_u(s, 0.3, &ClosedFormParams::explicit(m, d1, d2, 0.35).unwrap(), &p).unwrap();
        prop_assert!((shifted - base - d1 * s - d2).abs() <= 1e-12 * (base.abs() + 10.0));
    }
}

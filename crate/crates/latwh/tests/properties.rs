//! Property-style invariants of the series algebra plus a few derived
//! identities that need the full kernel context.

use latwh::contour::{ContourGrid, LaurentSeries};
use latwh::field::Solution;
use latwh::scenario::incident_field;
use latwh::{C64, DefectKind, Numerics, Problem, ScatteringScenario};
use proptest::prelude::*;

fn series_strategy() -> impl Strategy<Value = LaurentSeries> {
    (
        -6i64..6,
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..12),
    )
        .prop_map(|(lo, parts)| {
            LaurentSeries::from_coeffs(
                lo,
                parts.into_iter().map(|(re, im)| C64::new(re, im)).collect(),
            )
        })
}

proptest! {
    #[test]
    fn additive_split_is_exact(f in series_strategy()) {
        let (plus, minus) = f.split_additive();
        if let Some((lo, hi)) = f.support() {
            for m in lo..=hi {
                prop_assert_eq!(plus.coeff(m) + minus.coeff(m), f.coeff(m));
            }
        }
        if let Some((lo, _)) = plus.support() {
            prop_assert!(lo >= 0);
        }
        if let Some((_, hi)) = minus.support() {
            prop_assert!(hi < 0);
        }
    }

    #[test]
    fn projection_is_idempotent_and_linear(
        f in series_strategy(),
        g in series_strategy(),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        lo in -5i64..2,
        len in 0i64..6,
    ) {
        let hi = lo + len;
        let pf = f.project(lo, hi);
        prop_assert_eq!(pf.project(lo, hi), pf.clone());
        let combo = f.scaled(C64::new(a, 0.0)).add(&g.scaled(C64::new(b, 0.0)));
        let lhs = combo.project(lo, hi);
        let rhs = pf.scaled(C64::new(a, 0.0)).add(&g.project(lo, hi).scaled(C64::new(b, 0.0)));
        for m in lo..=hi {
            prop_assert!((lhs.coeff(m) - rhs.coeff(m)).norm() < 1e-14);
        }
    }

    #[test]
    fn coefficients_round_trip_through_samples(
        terms in prop::collection::vec(((-8i64..8), (-1.0f64..1.0, -1.0f64..1.0)), 1..10)
    ) {
        let grid = ContourGrid::new(1.05, 64).unwrap();
        let mut coeffs = vec![C64::new(0.0, 0.0); 17];
        for (m, (re, im)) in terms {
            coeffs[(m + 8) as usize] += C64::new(re, im);
        }
        let f = LaurentSeries::from_coeffs(-8, coeffs);
        let samples = grid.synthesize(&f);
        let back = grid.to_series(&samples);
        let scale = samples.iter().map(|v| v.norm()).fold(1e-12, f64::max);
        for m in -8..=8i64 {
            prop_assert!((back.coeff(m) - f.coeff(m)).norm() < 1e-10 * scale);
        }
    }

    #[test]
    fn incident_row_ratio_is_geometric(x in -20i64..20, y in -20i64..20) {
        let s = ScatteringScenario::new(
            C64::new(0.9, 0.07),
            0.4,
            C64::new(0.8, 0.3),
            DefectKind::CrackPair,
            4,
            2,
        ).unwrap();
        let w = latwh::scenario::solve_dispersion(s.omega, s.theta).unwrap();
        let ratio = incident_field(&s, &w, x + 1, y).norm() / incident_field(&s, &w, x, y).norm();
        prop_assert!((ratio - (-w.kx.im).exp()).abs() < 1e-9);
    }
}

/// The windowed coefficients of the incident "+" transform of the
/// adjacent-row sum coincide with the segment polynomial built from the
/// plane wave, so their difference projects to zero.
#[test]
fn incident_window_projection_vanishes() {
    let theta = 25.0f64.to_radians();
    let s = ScatteringScenario::new(
        C64::new(0.9, 0.1),
        theta,
        C64::new(1.0, 0.0),
        DefectKind::ConstraintPair,
        5,
        3,
    )
    .unwrap();
    let p = Problem::new(s, Numerics::default()).unwrap();
    let w = &p.wave;
    let two_cos = (C64::i() * w.ky).exp() + (-C64::i() * w.ky).exp();
    let w_inc_0n = two_cos * incident_field(&p.scenario, w, 0, p.scenario.n_sep);
    // closed form of the "+" transform, minus the segment polynomial
    let nodes = p
        .grid
        .sample(|z| {
            let plus = w_inc_0n * z / (z - w.z_p);
            let mut seg = C64::new(0.0, 0.0);
            for x in 0..p.scenario.m_offset {
                seg += two_cos
                    * incident_field(&p.scenario, w, x, p.scenario.n_sep)
                    * z.powi(-x as i32);
            }
            seg - plus
        })
        .unwrap();
    let series = p.grid.to_series(&nodes);
    let window = series.project(0, p.scenario.m_offset - 1);
    let mass: f64 = window.iter().map(|(_, c)| c.norm()).sum();
    assert!(mass < 1e-10, "windowed incident mass {mass}");
}

/// Coefficients of the single-defect kernel decay geometrically on the
/// contour (analyticity of h/r on the factor annulus).
#[test]
fn kernel_coefficients_decay() {
    let theta = 25.0f64.to_radians();
    let s = ScatteringScenario::new(
        C64::new(0.9, 0.05),
        theta,
        C64::new(1.0, 0.0),
        DefectKind::CrackPair,
        5,
        2,
    )
    .unwrap();
    let p = Problem::new(s, Numerics::default()).unwrap();
    let lk: Vec<C64> = (0..p.grid.len()).map(|k| p.bundle.kernels_at(k).0).collect();
    let series = p.grid.to_series(&lk);
    let mag = |m: i64| series.coeff(m).norm();
    assert!(mag(40) < mag(10) * 0.05);
    assert!(mag(-40) < mag(-10) * 0.05);
    assert!(mag(80) < mag(10) * 1e-2);
    assert!(mag(-80) < mag(-10) * 1e-2);
    // the far tail is negligible against the head
    assert!(series.tail_mass_fraction((p.grid.len() / 4) as i64) < 1e-10);
}

/// The two boundary scalars of a constraint solve must agree with the
/// synthesized field at those sites (the contour-integral definitions are
/// the inverse transform of the anchor rows).
#[test]
fn constraint_scalars_match_field() {
    let theta = 25.0f64.to_radians();
    for m in [3i64, 0, -3] {
        let s = ScatteringScenario::new(
            C64::new(0.9, 0.1),
            theta,
            C64::new(1.0, 0.0),
            DefectKind::ConstraintPair,
            5,
            m,
        )
        .unwrap();
        let p = Problem::new(s, Numerics::default()).unwrap();
        let sol = latwh::constraint::solve_constraint(&p).unwrap();
        let (d1, d2) = latwh::constraint::verify_scalars_via_field(&p, &sol).unwrap();
        assert!(d1 < 1e-8, "u(-1,0) deviates by {d1:e} at M = {m}");
        assert!(d2 < 1e-8, "u(M-1,N) deviates by {d2:e} at M = {m}");
    }
}

/// Crack stagger perturbation decays away from the tips.
#[test]
fn crack_perturbation_decays() {
    let theta = 25.0f64.to_radians();
    let s = ScatteringScenario::new(
        C64::new(0.9, 0.1),
        theta,
        C64::new(1.0, 0.0),
        DefectKind::CrackPair,
        5,
        3,
    )
    .unwrap();
    let p = Problem::new(s, Numerics::default()).unwrap();
    let sol = latwh::field::solve(&p).unwrap();
    let window = latwh::field::Window {
        x_lo: -50,
        x_hi: 50,
        y_lo: 2,
        y_hi: 2,
    };
    let split = latwh::field::stagger_split(&p, &sol, window).unwrap();
    let near: f64 = (-10..=10)
        .map(|x| split.perturbation.get(x, 2).norm())
        .fold(0.0, f64::max);
    let far: f64 = ((-50..=-40).chain(40..=50))
        .map(|x| split.perturbation.get(x, 2).norm())
        .fold(0.0, f64::max);
    assert!(near > 0.0);
    assert!(far < 0.05 * near, "far {far:e} vs near {near:e}");
}

/// The auxiliary upper-row transform entering synthesis is consistent
/// between its solved-scalar form and the boundary-value bookkeeping.
#[test]
fn constraint_row_aux_identity() {
    // -z^{-M} u^t_{M-1,N} + u^inc_{-1,N} - z u^inc_{0,N} must coincide with
    // z^{-M}(what is left of the boundary pair after the pinned value is
    // substituted) minus the incident tilde term, for any trial scalar.
    let theta = 25.0f64.to_radians();
    let s = ScatteringScenario::new(
        C64::new(0.9, 0.1),
        theta,
        C64::new(1.3, -0.2),
        DefectKind::ConstraintPair,
        4,
        2,
    )
    .unwrap();
    let w = latwh::scenario::solve_dispersion(s.omega, s.theta).unwrap();
    let m = s.m_offset;
    let n = s.n_sep;
    let u_t_mm1n = C64::new(0.37, -0.81); // arbitrary trial value
    let u_inc = |x: i64, y: i64| incident_field(&s, &w, x, y);
    for zr in [(1.01, 0.3), (0.95, 2.0)] {
        let z = C64::from_polar(zr.0, zr.1);
        let direct = -z.powi(-m as i32) * u_t_mm1n + u_inc(-1, n) - z * u_inc(0, n);
        // boundary-pair form: scattered part of u_{M-1,N} plus pinned u_{M,N}
        let hat = -(u_t_mm1n - u_inc(m - 1, n)) - z * u_inc(m, n);
        let hat_inc = -u_inc(m - 1, n) + z * u_inc(m, n);
        let tilde_inc = -u_inc(-1, n) + z * u_inc(0, n);
        let built = z.powi(-m as i32) * (hat + hat_inc) - tilde_inc;
        assert!((direct - built).norm() < 1e-10);
    }
    let _ = Solution::Constraint; // silence unused-import-style lint paths
}

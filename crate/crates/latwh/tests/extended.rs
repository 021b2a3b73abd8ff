//! Wider parameter sweeps against the grid oracle: edge separations,
//! unit stagger, steep and reflected incidence. Tolerances here are looser
//! than the headline acceptance numbers because the truncated oracle (small
//! Ng to keep the suite fast) contributes most of the deviation.

use latwh::field::{
    incident_lattice_field, synthesize_field, FieldKind, Solution, Window,
};
use latwh::oracle::{extract_traces, solve_grid};
use latwh::scenario::solve_dispersion;
use latwh::{C64, DefectKind, Error, Numerics, Problem, ScatteringScenario};

fn scen(kind: DefectKind, n: i64, m: i64, theta_deg: f64) -> ScatteringScenario {
    ScatteringScenario::new(
        C64::new(0.9, 0.1),
        theta_deg.to_radians(),
        C64::new(1.0, 0.0),
        kind,
        n,
        m,
    )
    .unwrap()
}

/// Max per-component relative deviation of the reduced segment (and the
/// boundary scalars for constraints) from the grid oracle.
fn deviation(s: &ScatteringScenario, ng: i64) -> f64 {
    let p = Problem::new(s.clone(), Numerics::default()).unwrap();
    let sol = latwh::field::solve(&p).unwrap();
    let w = solve_dispersion(s.omega, s.theta).unwrap();
    let gs = solve_grid(s, &w, ng).unwrap();
    let tr = extract_traces(&gs, s, &w).unwrap();
    let mut worst = 0.0f64;
    for (a, b) in sol.segment_values().iter().zip(&tr.segment) {
        worst = worst.max((a - b).norm() / b.norm().max(1e-12));
    }
    if let Solution::Constraint(cs) = &sol {
        worst = worst.max((cs.u_m10 - tr.u_m10).norm() / tr.u_m10.norm().max(1e-12));
        worst = worst.max((cs.u_mm1n - tr.u_mm1n).norm() / tr.u_mm1n.norm().max(1e-12));
    }
    worst
}

#[test]
fn tight_separation_crack() {
    for m in [2i64, -2] {
        let d = deviation(&scen(DefectKind::CrackPair, 2, m, 25.0), 40);
        assert!(d < 0.02, "N=2 M={m}: {d:e}");
    }
}

#[test]
fn adjacent_rows_constraint() {
    // N = 1 puts the two constrained rows on adjacent lattice lines.
    for m in [2i64, -2] {
        let d = deviation(&scen(DefectKind::ConstraintPair, 1, m, 25.0), 40);
        assert!(d < 0.02, "N=1 M={m}: {d:e}");
    }
    // and the synthesized total field still vanishes on both rows
    let s = scen(DefectKind::ConstraintPair, 1, 2, 25.0);
    let p = Problem::new(s, Numerics::default()).unwrap();
    let sol = latwh::field::solve(&p).unwrap();
    let window = Window::centered(8, 8);
    let (scat, _) = synthesize_field(&p, &sol, window).unwrap();
    let inc = incident_lattice_field(&p.scenario, &p.wave, window);
    let total = scat.add(&inc, FieldKind::Total);
    let scale = total.max_abs();
    for (x, y, v) in total.iter() {
        if latwh::field::is_defect_site(&p.scenario, x, y) {
            assert!(v.norm() < 1e-6 * scale, "pinned ({x},{y}): {:e}", v.norm());
        }
    }
}

#[test]
fn adjacent_rows_crack_solves_but_does_not_synthesize() {
    // For N = 1 the crack faces share row 0; the reduced solve still agrees
    // with the oracle, while the interior-row interpolation used by the
    // synthesis degenerates and is rejected.
    let s = scen(DefectKind::CrackPair, 1, 2, 25.0);
    let d = deviation(&s, 40);
    assert!(d < 0.02, "N=1 crack: {d:e}");
    let p = Problem::new(s, Numerics::default()).unwrap();
    let sol = latwh::field::solve(&p).unwrap();
    assert!(matches!(
        synthesize_field(&p, &sol, Window::centered(4, 4)),
        Err(Error::InvalidScenario(_))
    ));
}

#[test]
fn unit_stagger() {
    for kind in [DefectKind::CrackPair, DefectKind::ConstraintPair] {
        for m in [1i64, -1] {
            let d = deviation(&scen(kind, 5, m, 25.0), 40);
            assert!(d < 0.02, "{kind:?} M={m}: {d:e}");
        }
    }
}

#[test]
fn reflected_incidence() {
    for kind in [DefectKind::CrackPair, DefectKind::ConstraintPair] {
        let d = deviation(&scen(kind, 5, 3, -40.0), 40);
        assert!(d < 0.02, "{kind:?} theta=-40: {d:e}");
    }
}

#[test]
fn wide_separation() {
    // large N exercises the bounded-power row formulas
    let d = deviation(&scen(DefectKind::CrackPair, 12, 2, 25.0), 40);
    assert!(d < 0.02, "N=12 crack: {d:e}");
    let d = deviation(&scen(DefectKind::ConstraintPair, 12, -2, 25.0), 40);
    assert!(d < 0.02, "N=12 constraint: {d:e}");
}

#[test]
fn randomized_scenarios_match_the_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    for trial in 0..5 {
        let kind = if rng.gen_bool(0.5) {
            DefectKind::CrackPair
        } else {
            DefectKind::ConstraintPair
        };
        let n = rng.gen_range(1..=8i64);
        let mut m = rng.gen_range(-5..=5i64);
        if m == 0 {
            m = 1;
        }
        let s = ScatteringScenario::new(
            C64::new(rng.gen_range(0.7..1.1), rng.gen_range(0.09..0.15)),
            rng.gen_range(-60.0f64..60.0).to_radians(),
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            kind,
            n,
            m,
        )
        .unwrap();
        let d = deviation(&s, 40);
        assert!(
            d < 0.03,
            "trial {trial}: {kind:?} N={n} M={m} theta={:.1}deg omega={}: {d:e}",
            s.theta.to_degrees(),
            s.omega
        );
    }
}

#[test]
fn wide_stagger() {
    let d = deviation(&scen(DefectKind::CrackPair, 4, 8, 25.0), 45);
    assert!(d < 0.02, "M=8 crack: {d:e}");
    let d = deviation(&scen(DefectKind::ConstraintPair, 4, -8, 25.0), 45);
    assert!(d < 0.02, "M=-8 constraint: {d:e}");
}

/// Figure-scale geometry: thirty unknowns against a 243 x 243 grid solve.
/// Heavy (the oracle dominates); run with `cargo test --release -- --ignored`.
#[test]
#[ignore = "large oracle grid; run with --release -- --ignored"]
fn figure_scale_geometry() {
    let s = scen(DefectKind::CrackPair, 25, 30, 25.0);
    let p = Problem::new(s.clone(), Numerics::default()).unwrap();
    let sol = latwh::field::solve(&p).unwrap();
    let w = solve_dispersion(s.omega, s.theta).unwrap();
    let gs = solve_grid(&s, &w, 121).unwrap();
    let tr = extract_traces(&gs, &s, &w).unwrap();
    assert_eq!(tr.segment.len(), 30);
    let mut worst = 0.0f64;
    for (a, b) in sol.segment_values().iter().zip(&tr.segment) {
        worst = worst.max((a - b).norm() / b.norm().max(1e-12));
    }
    assert!(worst < 1e-4, "segment deviation {worst:e}");
}

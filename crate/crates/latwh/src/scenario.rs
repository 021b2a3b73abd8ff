//! Physical parameters of a scattering run: complex frequency, incidence
//! angle, defect geometry, and the incident lattice wave.
//!
//! The incident wave is `u^inc_{x,y} = A exp(i kx x + i ky y)` with the time
//! factor suppressed. Frequency and wave vector are tied by the square
//! lattice dispersion relation
//!
//! ```text
//! omega^2 = 4 (sin^2(kx/2) + sin^2(ky/2)),   kx = kappa cos(theta), ky = kappa sin(theta).
//! ```
//!
//! A positive imaginary part of `omega` keeps all wavefronts decaying, which
//! is what opens the annulus of analyticity the whole transform machinery
//! lives on.

use crate::{C64, Error, Result};

/// Residual demanded of an accepted dispersion root.
pub const DISPERSION_TOL: f64 = 1e-12;

/// Which pair of semi-infinite defects is present.
///
/// `CrackPair`: broken vertical bonds between rows (0, -1) for x >= 0 and
/// between rows (N, N-1) for x >= M. `ConstraintPair`: zero total
/// displacement at (x, 0) for x >= 0 and at (x, N) for x >= M.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefectKind {
    CrackPair,
    ConstraintPair,
}

/// Single source of truth for one scattering run.
#[derive(Debug, Clone)]
pub struct ScatteringScenario {
    /// Nondimensional complex frequency, `Im omega > 0`.
    pub omega: C64,
    /// Incidence angle in radians, in (-pi, pi].
    pub theta: f64,
    /// Incident amplitude.
    pub amplitude: C64,
    pub kind: DefectKind,
    /// Vertical separation between the defect rows, `N >= 1`.
    pub n_sep: i64,
    /// Horizontal stagger of the upper defect edge, any sign, 0 allowed.
    pub m_offset: i64,
}

impl ScatteringScenario {
    pub fn new(
        omega: C64,
        theta: f64,
        amplitude: C64,
        kind: DefectKind,
        n_sep: i64,
        m_offset: i64,
    ) -> Result<Self> {
        if !(omega.im > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "Im omega must be positive, got {}",
                omega.im
            )));
        }
        if !omega.is_finite() || !theta.is_finite() || !amplitude.is_finite() {
            return Err(Error::InvalidScenario("non-finite parameter".into()));
        }
        if !(theta > -std::f64::consts::PI && theta <= std::f64::consts::PI) {
            return Err(Error::InvalidScenario(format!(
                "theta must lie in (-pi, pi], got {theta}"
            )));
        }
        if n_sep < 1 {
            return Err(Error::InvalidScenario(format!(
                "n_sep must be >= 1, got {n_sep}"
            )));
        }
        Ok(Self {
            omega,
            theta,
            amplitude,
            kind,
            n_sep,
            m_offset,
        })
    }

    /// Indices of the stagger segment `D`: `[0, M-1]` for `M > 0`,
    /// `[M, -1]` for `M < 0`, empty for `M = 0`.
    pub fn segment_indices(&self) -> Vec<i64> {
        let m = self.m_offset;
        if m > 0 {
            (0..m).collect()
        } else if m < 0 {
            (m..0).collect()
        } else {
            Vec::new()
        }
    }
}

/// Accepted root of the dispersion relation together with derived quantities.
#[derive(Debug, Clone, Copy)]
pub struct WaveVector {
    pub kappa: C64,
    pub kx: C64,
    pub ky: C64,
    /// Transform pole of the incident wave, `z_P = exp(i kx)`. Its modulus is
    /// computed numerically here rather than assumed equal to either annulus
    /// radius.
    pub z_p: C64,
}

/// Left-hand side of the dispersion relation minus `omega^2`.
fn dispersion_gap(kappa: C64, theta: f64, omega: C64) -> C64 {
    let (s, c) = theta.sin_cos();
    let sx = (kappa * c / 2.0).sin();
    let sy = (kappa * s / 2.0).sin();
    4.0 * (sx * sx + sy * sy) - omega * omega
}

fn dispersion_gap_deriv(kappa: C64, theta: f64) -> C64 {
    let (s, c) = theta.sin_cos();
    2.0 * (c * (kappa * c).sin() + s * (kappa * s).sin())
}

/// Solves the dispersion relation for the lattice wave number by Newton
/// iteration seeded at the continuum value `kappa = omega`.
///
/// The root is normalized so `Re kappa >= 0` (the relation is even in
/// `kappa`). Real `omega` in the pass band is accepted for validation use;
/// production scenarios enforce `Im omega > 0` at construction.
pub fn solve_dispersion(omega: C64, theta: f64) -> Result<WaveVector> {
    let max_iter = 100;
    let mut kappa = omega;
    let mut converged = false;
    for _ in 0..max_iter {
        let g = dispersion_gap(kappa, theta, omega);
        if g.norm() < DISPERSION_TOL * 1e-2 {
            converged = true;
            break;
        }
        let dg = dispersion_gap_deriv(kappa, theta);
        if dg.norm() < 1e-14 {
            return Err(Error::DegenerateAngle);
        }
        let step = g / dg;
        kappa -= step;
        if step.norm() < 1e-16 * kappa.norm().max(1.0) {
            converged = true;
            break;
        }
    }
    let g = dispersion_gap(kappa, theta, omega);
    if !converged && g.norm() >= DISPERSION_TOL {
        return Err(Error::NoConvergence(max_iter));
    }
    if dispersion_gap_deriv(kappa, theta).norm() < 1e-12 {
        return Err(Error::DegenerateAngle);
    }
    if kappa.re < 0.0 {
        kappa = -kappa;
    }
    if dispersion_gap(kappa, theta, omega).norm() >= DISPERSION_TOL {
        return Err(Error::NoConvergence(max_iter));
    }
    let (s, c) = theta.sin_cos();
    let kx = kappa * c;
    let ky = kappa * s;
    Ok(WaveVector {
        kappa,
        kx,
        ky,
        z_p: (C64::i() * kx).exp(),
    })
}

/// Incident displacement `A exp(i kx x + i ky y)` at a lattice site.
pub fn incident_field(s: &ScatteringScenario, w: &WaveVector, x: i64, y: i64) -> C64 {
    s.amplitude * (C64::i() * (w.kx * x as f64 + w.ky * y as f64)).exp()
}

/// Radii of the annulus on which the half-range transforms of the scattered
/// field are jointly analytic: `R+ = exp(-Im kappa)`, `R- = exp(Im kappa * cos theta)`.
pub fn annulus_radii(w: &WaveVector, theta: f64) -> Result<(f64, f64)> {
    let k2 = w.kappa.im;
    if !(k2 > 0.0) {
        return Err(Error::EmptyAnnulus(format!(
            "Im kappa = {k2} must be positive"
        )));
    }
    let r_plus = (-k2).exp();
    let r_minus = (k2 * theta.cos()).exp();
    if r_plus >= r_minus {
        return Err(Error::EmptyAnnulus(format!(
            "R+ = {r_plus} >= R- = {r_minus}"
        )));
    }
    Ok((r_plus, r_minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const THETA_25: f64 = 25.0 * std::f64::consts::PI / 180.0;

    #[test]
    fn real_axis_root_matches_arcsine() {
        // theta = 0 collapses the relation to omega = 2 sin(kappa/2).
        let w = solve_dispersion(C64::new(1.0, 0.0), 0.0).unwrap();
        assert_relative_eq!(w.kappa.re, std::f64::consts::FRAC_PI_3, epsilon = 1e-12);
        assert!(w.kappa.im.abs() < 1e-12);
    }

    #[test]
    fn newton_agrees_with_bisection_on_real_axis() {
        let omega = C64::new(0.9, 0.0);
        let gap = |k: f64| dispersion_gap(C64::new(k, 0.0), THETA_25, omega).re;
        let (mut lo, mut hi) = (1e-6, 4.0);
        assert!(gap(lo) < 0.0 && gap(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = solve_dispersion(omega, THETA_25).unwrap();
        assert!((w.kappa.re - lo).abs() < 1e-10);
        assert!(dispersion_gap(w.kappa, THETA_25, omega).norm() < 1e-12);
    }

    #[test]
    fn complex_frequency_gives_decaying_root() {
        let omega = C64::new(0.9, 0.05);
        let w = solve_dispersion(omega, THETA_25).unwrap();
        assert!(w.kappa.im > 0.0);
        assert!(w.kappa.re >= 0.0);
        assert!(dispersion_gap(w.kappa, THETA_25, omega).norm() < 1e-12);
    }

    #[test]
    fn incident_values_and_decay() {
        let s = ScatteringScenario::new(
            C64::new(0.9, 0.05),
            THETA_25,
            C64::new(1.3, -0.4),
            DefectKind::CrackPair,
            5,
            3,
        )
        .unwrap();
        let w = solve_dispersion(s.omega, s.theta).unwrap();
        assert_eq!(incident_field(&s, &w, 0, 0), s.amplitude);
        let step = incident_field(&s, &w, 1, 0);
        assert_relative_eq!((step / s.amplitude).re, w.z_p.re, epsilon = 1e-14);
        assert_relative_eq!((step / s.amplitude).im, w.z_p.im, epsilon = 1e-14);
        assert!(incident_field(&s, &w, 10, 0).norm() < s.amplitude.norm());
        // Geometric decay ratio along a row.
        let ratio = incident_field(&s, &w, 7, 2).norm() / incident_field(&s, &w, 6, 2).norm();
        assert_relative_eq!(ratio, (-w.kx.im).exp(), epsilon = 1e-12);
    }

    #[test]
    fn annulus_radii_cases() {
        // Direct substitution at a synthetic wave vector.
        let w = WaveVector {
            kappa: C64::new(1.0, 0.1),
            kx: C64::new(0.0, 0.0),
            ky: C64::new(0.0, 0.0),
            z_p: C64::new(1.0, 0.0),
        };
        let (rp, rm) = annulus_radii(&w, 0.0).unwrap();
        assert_relative_eq!(rp, (-0.1f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(rm, 0.1f64.exp(), epsilon = 1e-15);
        let (rp, rm) = annulus_radii(&w, std::f64::consts::FRAC_PI_2).unwrap();
        assert_relative_eq!(rp, (-0.1f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(rm, 1.0, epsilon = 1e-15);
        // After an actual dispersion solve the annulus brackets the unit circle.
        let w = solve_dispersion(C64::new(0.9, 0.05), THETA_25).unwrap();
        let (rp, rm) = annulus_radii(&w, THETA_25).unwrap();
        assert!(rp < 1.0 && 1.0 < rm);
        assert!(rp < rm);
    }

    #[test]
    fn scenario_validation() {
        assert!(ScatteringScenario::new(
            C64::new(0.9, 0.0),
            0.1,
            C64::new(1.0, 0.0),
            DefectKind::CrackPair,
            5,
            0
        )
        .is_err());
        assert!(ScatteringScenario::new(
            C64::new(0.9, 0.1),
            0.1,
            C64::new(1.0, 0.0),
            DefectKind::ConstraintPair,
            0,
            2
        )
        .is_err());
    }

    #[test]
    fn segment_indices_by_sign() {
        let mk = |m| {
            ScatteringScenario::new(
                C64::new(0.9, 0.1),
                0.2,
                C64::new(1.0, 0.0),
                DefectKind::CrackPair,
                4,
                m,
            )
            .unwrap()
            .segment_indices()
        };
        assert_eq!(mk(3), vec![0, 1, 2]);
        assert_eq!(mk(-3), vec![-3, -2, -1]);
        assert!(mk(0).is_empty());
    }
}

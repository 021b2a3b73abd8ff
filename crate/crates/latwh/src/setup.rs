//! Per-run assembly: contour placement, kernel bundle, factor suite.

use crate::contour::ContourGrid;
use crate::factor::{build_factor_suite, FactorSuite};
use crate::kernel::KernelBundle;
use crate::scenario::{annulus_radii, solve_dispersion, ScatteringScenario, WaveVector};
use crate::{C64, Error, Result};

/// Clearance kept between the contour and the transform pole `z_P`.
const POLE_MARGIN: f64 = 1e-3;

/// Numerical knobs, all with working defaults.
#[derive(Debug, Clone)]
pub struct Numerics {
    /// Contour sample count; rounded up to a power of two, floored at 256,
    /// and doubled automatically until the factor coefficient tails are
    /// negligible.
    pub samples: usize,
    /// Explicit contour radius; `None` picks the geometric mean of the
    /// admissible bounds.
    pub contour_radius: Option<f64>,
    /// Half-width of the oracle grid; `None` picks `91 + |M|`.
    pub oracle_ng: Option<i64>,
    /// Max-norm tolerance on the Wiener-Hopf residual of a synthesized
    /// solution.
    pub wh_residual_tol: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            samples: 4096,
            contour_radius: None,
            oracle_ng: None,
            wh_residual_tol: 1e-8,
        }
    }
}

impl Numerics {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 4 {
            return Err(Error::InvalidNumerics(format!(
                "samples must be >= 4, got {}",
                self.samples
            )));
        }
        if let Some(r) = self.contour_radius {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::InvalidNumerics(format!(
                    "contour radius must be positive, got {r}"
                )));
            }
        }
        if let Some(ng) = self.oracle_ng {
            if ng < 8 {
                return Err(Error::InvalidNumerics(format!(
                    "oracle half-width must be >= 8, got {ng}"
                )));
            }
        }
        if !(self.wh_residual_tol > 0.0) {
            return Err(Error::InvalidNumerics(
                "tolerances must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn oracle_ng_for(&self, scenario: &ScatteringScenario) -> i64 {
        self.oracle_ng.unwrap_or(91 + scenario.m_offset.abs())
    }
}

/// Everything a reduced solve and the field synthesis need: the wave vector,
/// the main contour with kernel and factor data, and (for negative stagger)
/// an auxiliary contour strictly inside `|z_P|` on which the window
/// coefficients of the reduced system are extracted.
#[derive(Debug, Clone)]
pub struct Problem {
    pub scenario: ScatteringScenario,
    pub numerics: Numerics,
    pub wave: WaveVector,
    pub r_plus: f64,
    pub r_minus: f64,
    pub r_l: f64,
    pub grid: ContourGrid,
    pub bundle: KernelBundle,
    pub suite: FactorSuite,
}

impl Problem {
    pub fn new(scenario: ScatteringScenario, numerics: Numerics) -> Result<Self> {
        numerics.validate()?;
        let wave = solve_dispersion(scenario.omega, scenario.theta)?;
        let (r_plus, r_minus) = annulus_radii(&wave, scenario.theta)?;
        let zeros = crate::kernel::distinguished_zeros(scenario.omega)?;
        let r_l = zeros.z_h.norm().max(zeros.z_r.norm());
        let zp_abs = wave.z_p.norm();
        let lo = r_plus.max(r_l).max(zp_abs + POLE_MARGIN);
        let hi = r_minus.min(1.0 / r_l);
        if lo >= hi {
            return Err(Error::EmptyAnnulus(format!(
                "usable contour band [{lo:.6}, {hi:.6}] is empty \
                 (R+ = {r_plus:.6}, R- = {r_minus:.6}, R_L = {r_l:.6}, |z_P| = {zp_abs:.6})"
            )));
        }
        let radius = match numerics.contour_radius {
            Some(r) => {
                if r <= lo || r >= hi {
                    return Err(Error::PoleOnContour(zp_abs));
                }
                r
            }
            None => (lo * hi).sqrt(),
        };
        if (zp_abs - radius).abs() < POLE_MARGIN {
            return Err(Error::PoleOnContour(zp_abs));
        }
        if (zeros.z_q.norm() - radius).abs() < POLE_MARGIN {
            return Err(Error::ZqOnContour(zeros.z_q.norm(), radius));
        }
        if scenario.kind == crate::scenario::DefectKind::ConstraintPair
            && (zeros.z_q - wave.z_p).norm() < 1e-6
        {
            return Err(Error::ResonantIncidence);
        }

        let mut k = numerics
            .samples
            .next_power_of_two()
            .max(256)
            .max((16 * scenario.m_offset.unsigned_abs() as usize).next_power_of_two());
        let (grid, bundle, suite) = loop {
            let grid = ContourGrid::new(radius, k)?;
            let bundle = KernelBundle::build(&grid, scenario.omega)?;
            let suite =
                build_factor_suite(&grid, &bundle, scenario.n_sep, scenario.kind, wave.z_p)?;
            let quarter = (k / 4) as i64;
            let tail = suite
                .alpha
                .plus
                .tail_mass_fraction(quarter)
                .max(suite.alpha.minus.tail_mass_fraction(quarter))
                .max(suite.beta.plus.tail_mass_fraction(quarter))
                .max(suite.beta.minus.tail_mass_fraction(quarter));
            if tail < 1e-10 || k >= 65536 {
                break (grid, bundle, suite);
            }
            k *= 2;
        };

        Ok(Self {
            scenario,
            numerics,
            wave,
            r_plus,
            r_minus,
            r_l,
            grid,
            bundle,
            suite,
        })
    }

    /// `Q(z_P)`.
    pub fn q_at_zp(&self) -> C64 {
        let z = self.wave.z_p;
        4.0 - z - 1.0 / z - self.scenario.omega * self.scenario.omega
    }

    /// `exp(i ky N)`.
    pub fn phase_ky_n(&self) -> C64 {
        (C64::i() * self.wave.ky * self.scenario.n_sep as f64).exp()
    }
}

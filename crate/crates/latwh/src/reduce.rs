//! Shared machinery for assembling the reduced systems.
//!
//! Both defect kinds lead to the same column structure: for positive stagger
//! the column attached to segment site `x` is
//!
//! ```text
//! A_x(z) = phi_x^+(z) / alpha_+(z) + psi_x^+(z) / beta_+(z),
//! ```
//!
//! with `phi_x^+`, `psi_x^+` the finite halves of `(1/alpha_-) z^{-x}` and
//! `(1/beta_-) z^{-x}`; for negative stagger the roles of the factor sides
//! swap and the column becomes `Phi_x^-(z) alpha_-(z) + Psi_x^-(z) beta_-(z)`
//! built from the finite halves of `alpha_+ z^{-x}`.
//!
//! Window coefficients for positive stagger are read on the main contour.
//! For negative stagger they are Laurent coefficients *about the origin*:
//! the cancellation that removes the known incident coefficients from the
//! window holds for the expansion inside `|z_P|`, where the incident plus
//! transform continues to `-sum_{x<0} u^inc_x z^{-x}`. Those coefficients
//! are computed exactly as finite convolutions — a shift-split polynomial
//! against the head of a minus-factor series, or a minus-factor series
//! against the geometric pole series — rather than by sampling a second
//! contour, which would sit in an arbitrarily thin annulus near the band
//! edge.

use crate::contour::{ContourGrid, LaurentSeries};
use crate::factor::FactorSuite;
use crate::{C64, Result};

/// `delta_D^+(z / z_P) = z / (z - z_P)`, the incident transform pole factor.
pub(crate) fn pole_factor(z: C64, z_p: C64) -> C64 {
    z / (z - z_p)
}

/// Finite shift-split halves for every segment site, ascending in `x`.
pub(crate) struct SegmentBasis {
    pub xs: Vec<i64>,
    /// alpha-channel finite half per site (`phi_x^+` or `Phi_x^-`).
    pub a_fin: Vec<LaurentSeries>,
    /// beta-channel finite half per site.
    pub b_fin: Vec<LaurentSeries>,
}

pub(crate) fn segment_basis(suite: &FactorSuite, m_offset: i64) -> Result<SegmentBasis> {
    let mut basis = SegmentBasis {
        xs: Vec::new(),
        a_fin: Vec::new(),
        b_fin: Vec::new(),
    };
    if m_offset > 0 {
        for x in 0..m_offset {
            let (pa, _) = suite.inv_alpha_minus.shift_split_minus(x as u32)?;
            let (pb, _) = suite.inv_beta_minus.shift_split_minus(x as u32)?;
            basis.xs.push(x);
            basis.a_fin.push(pa);
            basis.b_fin.push(pb);
        }
    } else if m_offset < 0 {
        for x in m_offset..0 {
            let (_, ma) = suite.alpha.plus.shift_split_plus((-x) as u32)?;
            let (_, mb) = suite.beta.plus.shift_split_plus((-x) as u32)?;
            basis.xs.push(x);
            basis.a_fin.push(ma);
            basis.b_fin.push(mb);
        }
    }
    Ok(basis)
}

/// The finite halves at shift `|M|` itself (used by the constraint pair for
/// the extra unknown's column and for the auxiliary split of the transform
/// right-hand side).
pub(crate) fn offset_split(
    suite: &FactorSuite,
    m_offset: i64,
) -> Result<(LaurentSeries, LaurentSeries)> {
    if m_offset >= 0 {
        let (pa, _) = suite.inv_alpha_minus.shift_split_minus(m_offset as u32)?;
        let (pb, _) = suite.inv_beta_minus.shift_split_minus(m_offset as u32)?;
        Ok((pa, pb))
    } else {
        let (_, ma) = suite.alpha.plus.shift_split_plus((-m_offset) as u32)?;
        let (_, mb) = suite.beta.plus.shift_split_plus((-m_offset) as u32)?;
        Ok((ma, mb))
    }
}

/// Channel node arrays entering the columns and the incident right-hand
/// side on the main contour: `1/alpha_+`, `1/beta_+`.
pub(crate) struct Channels {
    pub a: Vec<C64>,
    pub b: Vec<C64>,
}

pub(crate) fn channels_mpos(suite: &FactorSuite) -> Channels {
    Channels {
        a: suite.inv_alpha_plus_nodes.clone(),
        b: suite.inv_beta_plus_nodes.clone(),
    }
}

/// Laurent coefficients of `fin * minus` at the window indices, where `fin`
/// is finitely supported and `minus` has support m <= 0. Each coefficient is
/// an exact finite sum touching only the head of the factor series.
pub(crate) fn conv_window(
    fin: &LaurentSeries,
    minus: &LaurentSeries,
    xs: &[i64],
) -> Vec<C64> {
    xs.iter()
        .map(|&m| {
            fin.iter()
                .map(|(a, c)| c * minus.coeff(m - a))
                .sum()
        })
        .collect()
}

/// Column values `A_x` on the extraction grid.
pub(crate) fn column_nodes(
    grid: &ContourGrid,
    channels: &Channels,
    fin_a: &LaurentSeries,
    fin_b: &LaurentSeries,
) -> Vec<C64> {
    grid.nodes()
        .iter()
        .enumerate()
        .map(|(k, &z)| fin_a.eval(z) * channels.a[k] + fin_b.eval(z) * channels.b[k])
        .collect()
}

/// Incident right-hand-side function
/// `sign (-(1 - e) A-(z_P)^{-1} chan_a(z) + (1 + e) B-(z_P)^{-1} chan_b(z)) e^{-i ky N} inc+(z)`
/// where `e = exp(i ky N)` and `inc+` is the relevant incident plus
/// transform continued as the rational pole factor.
pub(crate) struct IncFactors {
    /// `-(1 - e^{i ky N}) / alpha_-(z_P)` (and the beta analogue with `+`),
    /// already including the overall sign of the stagger case.
    pub coef_a: C64,
    pub coef_b: C64,
    /// `e^{-i ky N}` times the incident plus-transform coefficient.
    pub inc_scale: C64,
    pub z_p: C64,
}

impl IncFactors {
    /// `inc0` is the x = 0 value of the incident plus transform being used
    /// (`v^inc_{0,N}`-style jump for the crack, `u^inc_{0,N}` for the
    /// constraint). `sign` is +1 for positive stagger, -1 for negative.
    pub fn new(suite: &FactorSuite, z_p: C64, phase_ky_n: C64, inc0: C64, sign: f64) -> Self {
        let e = phase_ky_n;
        IncFactors {
            coef_a: sign * -(1.0 - e) / suite.alpha_minus_at_zp,
            coef_b: sign * (1.0 + e) / suite.beta_minus_at_zp,
            inc_scale: inc0 / e,
            z_p,
        }
    }

    pub fn eval(&self, z: C64, chan_a: C64, chan_b: C64) -> C64 {
        (self.coef_a * chan_a + self.coef_b * chan_b) * self.inc_scale * pole_factor(z, self.z_p)
    }

    /// Negative-stagger window coefficients of the incident right-hand side
    /// taken about the origin: with `E = coef_a alpha_- + coef_b beta_-` and
    /// the pole factor continued inside as `-sum_{m<0} z_P^m z^{-m}`, the
    /// coefficient at window index `x < 0` is the exact finite sum
    /// `-scale sum_{k=0}^{-x-1} E_{-k} z_P^{x+k}`.
    pub fn window_coeffs_inner(
        &self,
        alpha_minus: &LaurentSeries,
        beta_minus: &LaurentSeries,
        xs: &[i64],
    ) -> Vec<C64> {
        xs.iter()
            .map(|&x| {
                debug_assert!(x < 0);
                let mut acc = C64::new(0.0, 0.0);
                let mut zp_pow = self.z_p.powi(x as i32);
                for k in 0..(-x) {
                    let e_k = self.coef_a * alpha_minus.coeff(-k) + self.coef_b * beta_minus.coeff(-k);
                    acc += e_k * zp_pow;
                    zp_pow *= self.z_p;
                }
                -self.inc_scale * acc
            })
            .collect()
    }
}

pub(crate) fn f_inc_nodes(grid: &ContourGrid, channels: &Channels, inc: &IncFactors) -> Vec<C64> {
    grid.nodes()
        .iter()
        .enumerate()
        .map(|(k, &z)| inc.eval(z, channels.a[k], channels.b[k]))
        .collect()
}

/// Laurent coefficients of the sampled values at the window indices `xs`.
pub(crate) fn window_coeffs(grid: &ContourGrid, nodes: &[C64], xs: &[i64]) -> Vec<C64> {
    let series = grid.to_series(nodes);
    xs.iter().map(|&m| series.coeff(m)).collect()
}

//! Laurent-series algebra on a sampled circular contour.
//!
//! Every transform in this crate is a series in *negative* powers,
//!
//! ```text
//! f(z) = sum_m c_m z^{-m},
//! ```
//!
//! so a "+" function (analytic outside a disk) has support m >= 0 and a "-"
//! function (analytic inside) has support m < 0; multiplicative factors admit
//! m = 0 on both sides. Coefficients are recovered from equispaced samples on
//! a circle |z| = rho by the FFT and are stored with the radius weight
//! removed, so series obtained on different contours are directly comparable
//! and can be resampled onto any other circle inside their annulus of
//! convergence.

use crate::{C64, Error, Result};
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Relative floor below which FFT output is treated as rounding noise.
/// Keeping such bins would amplify them by `rho^m` when the radius weight is
/// removed on contours away from |z| = 1.
const COEFF_NOISE_FLOOR: f64 = 1e-14;

/// Equispaced nodes `z_k = rho exp(2 pi i k / K)` with cached FFT plans.
#[derive(Clone)]
pub struct ContourGrid {
    radius: f64,
    nodes: Vec<C64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ContourGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ContourGrid")
            .field("radius", &self.radius)
            .field("len", &self.nodes.len())
            .finish()
    }
}

impl ContourGrid {
    /// `samples` must be a power of two, at least 4. Production pipelines use
    /// 256 or more; tiny grids are allowed for unit tests.
    pub fn new(radius: f64, samples: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidNumerics(format!(
                "contour radius must be positive, got {radius}"
            )));
        }
        if samples < 4 || !samples.is_power_of_two() {
            return Err(Error::InvalidNumerics(format!(
                "sample count must be a power of two >= 4, got {samples}"
            )));
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(samples);
        let inv = planner.plan_fft_inverse(samples);
        let nodes = (0..samples)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
                C64::from_polar(radius, th)
            })
            .collect();
        Ok(Self {
            radius,
            nodes,
            fwd,
            inv,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[C64] {
        &self.nodes
    }

    /// Evaluates `f` at every node, rejecting non-finite values.
    pub fn sample(&self, f: impl Fn(C64) -> C64) -> Result<Vec<C64>> {
        let mut out = Vec::with_capacity(self.len());
        for (k, &z) in self.nodes.iter().enumerate() {
            let v = f(z);
            if !v.is_finite() {
                return Err(Error::NonFiniteSample(k));
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Laurent coefficients of the sampled values, indices in `[-K/2, K/2)`.
    pub fn to_series(&self, samples: &[C64]) -> LaurentSeries {
        let k = self.len();
        assert_eq!(samples.len(), k, "sample count does not match the grid");
        let mut buf = samples.to_vec();
        self.inv.process(&mut buf);
        let scale = 1.0 / k as f64;
        let dmax = buf.iter().map(|d| d.norm()).fold(0.0, f64::max) * scale;
        let floor = dmax * COEFF_NOISE_FLOOR;
        let half = (k / 2) as i64;
        let mut coeffs = vec![C64::new(0.0, 0.0); k];
        for (j, d) in buf.iter().enumerate() {
            let m = if (j as i64) < half {
                j as i64
            } else {
                j as i64 - k as i64
            };
            let d = d * scale;
            if d.norm() > floor {
                coeffs[(m + half) as usize] = d * self.radius.powi(m as i32);
            }
        }
        LaurentSeries::from_coeffs(-half, coeffs)
    }

    /// Convenience: sample then transform.
    pub fn series_of(&self, f: impl Fn(C64) -> C64) -> Result<LaurentSeries> {
        Ok(self.to_series(&self.sample(f)?))
    }

    /// Values of a series at every node of this grid (which need not be the
    /// grid the series was computed on). Coefficients outside `[-K/2, K/2)`
    /// are ignored.
    pub fn synthesize(&self, series: &LaurentSeries) -> Vec<C64> {
        let k = self.len();
        let half = (k / 2) as i64;
        let mut buf = vec![C64::new(0.0, 0.0); k];
        if let Some((lo, hi)) = series.support() {
            for m in lo.max(-half)..=hi.min(half - 1) {
                let j = if m >= 0 { m as usize } else { (m + k as i64) as usize };
                buf[j] = series.coeff(m) * self.radius.powi(-m as i32);
            }
        }
        self.fwd.process(&mut buf);
        buf
    }

    /// Laurent coefficient extraction by the trapezoid rule:
    /// `(1/2 pi i) \oint v(z) z^{x-1} dz = (1/K) sum_k v_k z_k^x`.
    ///
    /// For node values of a transform `u^F` this returns the lattice value at
    /// abscissa `x`.
    pub fn inverse_transform(&self, node_values: &[C64], x: i64) -> C64 {
        assert_eq!(node_values.len(), self.len());
        let mut acc = C64::new(0.0, 0.0);
        for (v, z) in node_values.iter().zip(&self.nodes) {
            acc += v * z.powi(x as i32);
        }
        acc / self.len() as f64
    }

    /// `inverse_transform` over a contiguous range of abscissae.
    pub fn inverse_transform_range(
        &self,
        node_values: &[C64],
        x_lo: i64,
        x_hi: i64,
    ) -> Vec<C64> {
        assert!(x_lo <= x_hi);
        assert_eq!(node_values.len(), self.len());
        let k = self.len();
        let mut powers: Vec<C64> = self.nodes.iter().map(|z| z.powi(x_lo as i32)).collect();
        let mut out = Vec::with_capacity((x_hi - x_lo + 1) as usize);
        for step in 0..=(x_hi - x_lo) {
            let mut acc = C64::new(0.0, 0.0);
            for (v, p) in node_values.iter().zip(&powers) {
                acc += v * p;
            }
            out.push(acc / k as f64);
            if step < x_hi - x_lo {
                for (p, z) in powers.iter_mut().zip(&self.nodes) {
                    *p *= z;
                }
            }
        }
        out
    }
}

/// Finitely supported Laurent coefficients `c_m` of `f(z) = sum c_m z^{-m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentSeries {
    m_lo: i64,
    coeffs: Vec<C64>,
}

impl LaurentSeries {
    pub fn zero() -> Self {
        Self {
            m_lo: 0,
            coeffs: Vec::new(),
        }
    }

    /// Builds a series from a dense coefficient slab starting at index `m_lo`,
    /// trimming zero tails.
    pub fn from_coeffs(m_lo: i64, coeffs: Vec<C64>) -> Self {
        let mut s = Self { m_lo, coeffs };
        s.trim();
        s
    }

    /// A single term `c z^{-m}`.
    pub fn monomial(m: i64, c: C64) -> Self {
        Self::from_coeffs(m, vec![c])
    }

    fn trim(&mut self) {
        while self.coeffs.last().map_or(false, |c| c.norm() == 0.0) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| c.norm() == 0.0).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.m_lo += lead as i64;
        }
    }

    /// Inclusive index range of the stored (nonzero) coefficients.
    pub fn support(&self) -> Option<(i64, i64)> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some((self.m_lo, self.m_lo + self.coeffs.len() as i64 - 1))
        }
    }

    /// Coefficient of `z^{-m}`, zero outside the stored range.
    pub fn coeff(&self, m: i64) -> C64 {
        let i = m - self.m_lo;
        if i < 0 || i as usize >= self.coeffs.len() {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[i as usize]
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Horner evaluation, split between the two power directions.
    pub fn eval(&self, z: C64) -> C64 {
        let Some((lo, hi)) = self.support() else {
            return C64::new(0.0, 0.0);
        };
        let mut acc = C64::new(0.0, 0.0);
        if hi >= 0 {
            // sum_{m=0..hi} c_m z^{-m}, highest power innermost
            let zinv = 1.0 / z;
            let start = lo.max(0);
            let mut plus = C64::new(0.0, 0.0);
            for m in (start..=hi).rev() {
                plus = plus * zinv + self.coeff(m);
            }
            plus *= zinv.powi(start as i32);
            acc += plus;
        }
        if lo < 0 {
            // sum_{m=lo..-1} c_m z^{-m} = sum_{j} c_{-j} z^{j}
            let end = hi.min(-1);
            let mut minus = C64::new(0.0, 0.0);
            for m in lo..=end {
                minus = minus * z + self.coeff(m);
            }
            minus *= z.powi(-end as i32);
            acc += minus;
        }
        acc
    }

    /// Additive split at the index origin: (support m >= 0, support m < 0).
    /// The halves sum back to `self` coefficientwise, exactly.
    pub fn split_additive(&self) -> (LaurentSeries, LaurentSeries) {
        let plus: Vec<(i64, C64)> = self.iter().filter(|(m, _)| *m >= 0).collect();
        let minus: Vec<(i64, C64)> = self.iter().filter(|(m, _)| *m < 0).collect();
        (Self::from_terms(&plus), Self::from_terms(&minus))
    }

    /// Keeps exactly the coefficients with index in `[lo, hi]`.
    pub fn project(&self, lo: i64, hi: i64) -> LaurentSeries {
        let kept: Vec<(i64, C64)> = self.iter().filter(|(m, _)| *m >= lo && *m <= hi).collect();
        Self::from_terms(&kept)
    }

    /// Splits `self * z^{-shift}` (for a series with support m <= 0) into its
    /// "+" and "-" halves. The "+" half is the finite polynomial carrying the
    /// coefficients `c_0, c_{-1}, ..., c_{-shift}` at powers
    /// `z^{-shift}, ..., z^0`; e.g. shift 0 gives the constant `c_0` and
    /// shift 1 gives `c_0 z^{-1} + c_{-1}`.
    pub fn shift_split_minus(&self, shift: u32) -> Result<(LaurentSeries, LaurentSeries)> {
        if let Some((_, hi)) = self.support() {
            if hi > 0 {
                return Err(Error::BadSupport(format!(
                    "shift_split_minus needs support m <= 0, found index {hi}"
                )));
            }
        }
        let s = shift as i64;
        let shifted: Vec<(i64, C64)> = self.iter().map(|(m, c)| (m + s, c)).collect();
        let plus: Vec<(i64, C64)> = shifted.iter().copied().filter(|(m, _)| *m >= 0).collect();
        let minus: Vec<(i64, C64)> = shifted.into_iter().filter(|(m, _)| *m < 0).collect();
        Ok((Self::from_terms(&plus), Self::from_terms(&minus)))
    }

    /// Splits `self * z^{+shift}` (for a series with support m >= 0) into its
    /// "+" and "-" halves. The "-" half is the finite polynomial
    /// `c_0 z^{shift} + c_1 z^{shift-1} + ... + c_{shift-1} z`; shift 0 gives
    /// zero.
    pub fn shift_split_plus(&self, shift: u32) -> Result<(LaurentSeries, LaurentSeries)> {
        if let Some((lo, _)) = self.support() {
            if lo < 0 {
                return Err(Error::BadSupport(format!(
                    "shift_split_plus needs support m >= 0, found index {lo}"
                )));
            }
        }
        let s = shift as i64;
        let shifted: Vec<(i64, C64)> = self.iter().map(|(m, c)| (m - s, c)).collect();
        let plus: Vec<(i64, C64)> = shifted.iter().copied().filter(|(m, _)| *m >= 0).collect();
        let minus: Vec<(i64, C64)> = shifted.into_iter().filter(|(m, _)| *m < 0).collect();
        Ok((Self::from_terms(&plus), Self::from_terms(&minus)))
    }

    /// Zeroes every coefficient with index outside `[lo, hi]` of the
    /// complement, i.e. forces one-sided support; used after a factorization
    /// to discard cross-talk below the noise floor.
    pub(crate) fn restrict_support(&mut self, lo: i64, hi: i64) {
        let kept: Vec<(i64, C64)> = self.iter().filter(|(m, _)| *m >= lo && *m <= hi).collect();
        *self = Self::from_terms(&kept);
    }

    pub fn scaled(&self, a: C64) -> LaurentSeries {
        let terms: Vec<(i64, C64)> = self.iter().map(|(m, c)| (m, c * a)).collect();
        Self::from_terms(&terms)
    }

    pub fn add(&self, other: &LaurentSeries) -> LaurentSeries {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let lo = self.m_lo.min(other.m_lo);
        let hi = (self.m_lo + self.coeffs.len() as i64).max(other.m_lo + other.coeffs.len() as i64);
        let mut coeffs = vec![C64::new(0.0, 0.0); (hi - lo) as usize];
        for (m, c) in self.iter().chain(other.iter()) {
            coeffs[(m - lo) as usize] += c;
        }
        Self::from_coeffs(lo, coeffs)
    }

    /// Fraction of the total |c| mass carried by indices with |m| >= `from`.
    pub fn tail_mass_fraction(&self, from: i64) -> f64 {
        let total: f64 = self.coeffs.iter().map(|c| c.norm()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let tail: f64 = self
            .iter()
            .filter(|(m, _)| m.abs() >= from)
            .map(|(_, c)| c.norm())
            .sum();
        tail / total
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (self.m_lo + i as i64, *c))
    }

    fn from_terms(terms: &[(i64, C64)]) -> LaurentSeries {
        if terms.is_empty() {
            return Self::zero();
        }
        let lo = terms.iter().map(|(m, _)| *m).min().unwrap();
        let hi = terms.iter().map(|(m, _)| *m).max().unwrap();
        let mut coeffs = vec![C64::new(0.0, 0.0); (hi - lo + 1) as usize];
        for (m, c) in terms {
            coeffs[(m - lo) as usize] += c;
        }
        Self::from_coeffs(lo, coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn nodes_are_roots_of_unity() {
        let g = ContourGrid::new(1.0, 4).unwrap();
        let v = g.sample(|z| z).unwrap();
        assert_relative_eq!(v[0].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(v[1].im, 1.0, epsilon = 1e-15);
        assert_relative_eq!(v[2].re, -1.0, epsilon = 1e-15);
        assert_relative_eq!(v[3].im, -1.0, epsilon = 1e-15);
        let ones = g.sample(|_| c(1.0, 0.0)).unwrap();
        assert!(ones.iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn sampling_rejects_poles() {
        let g = ContourGrid::new(1.0, 8).unwrap();
        assert!(matches!(
            g.sample(|z| 1.0 / (z - g.nodes()[3])),
            Err(Error::NonFiniteSample(3))
        ));
    }

    #[test]
    fn coefficients_of_simple_functions() {
        let g = ContourGrid::new(1.3, 64).unwrap();
        let s = g.series_of(|z| 3.0 + 2.0 / z).unwrap();
        assert_relative_eq!(s.coeff(0).re, 3.0, epsilon = 1e-12);
        assert_relative_eq!(s.coeff(1).re, 2.0, epsilon = 1e-12);
        for m in -16..=16i64 {
            if m != 0 && m != 1 {
                assert!(s.coeff(m).norm() < 1e-12, "stray coefficient at {m}");
            }
        }
        let s = g.series_of(|z| z).unwrap();
        assert_relative_eq!(s.coeff(-1).re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn round_trip_reconstruction() {
        let g = ContourGrid::new(0.97, 256).unwrap();
        let f = |z: C64| (z * 0.4).exp() + 1.0 / (1.0 - 0.5 / z);
        let samples = g.sample(f).unwrap();
        let series = g.to_series(&samples);
        let back = g.synthesize(&series);
        let scale = samples.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (a, b) in samples.iter().zip(&back) {
            assert!((a - b).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn resampling_onto_another_radius() {
        let g1 = ContourGrid::new(1.05, 256).unwrap();
        let g2 = ContourGrid::new(0.85, 256).unwrap();
        let f = |z: C64| (z * 0.3).exp() * (1.0 + 0.25 / z);
        let series = g1.series_of(f).unwrap();
        let resampled = g2.synthesize(&series);
        let direct = g2.sample(f).unwrap();
        for (a, b) in resampled.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn split_additive_is_exact_and_idempotent() {
        let g = ContourGrid::new(1.0, 32).unwrap();
        let f = g.series_of(|z| z + 3.0 + 2.0 / z).unwrap();
        let (p, m) = f.split_additive();
        assert_relative_eq!(p.coeff(0).re, 3.0, epsilon = 1e-12);
        assert_relative_eq!(p.coeff(1).re, 2.0, epsilon = 1e-12);
        assert_relative_eq!(m.coeff(-1).re, 1.0, epsilon = 1e-12);
        let back = p.add(&m);
        for mm in -4..=4i64 {
            assert_eq!(back.coeff(mm), f.coeff(mm));
        }
        let (pp, pm) = p.split_additive();
        assert_eq!(pp, p);
        assert!(pm.is_zero());
    }

    #[test]
    fn projection_window() {
        let f = LaurentSeries::from_terms(&[(0, c(3.0, 0.0)), (1, c(2.0, 0.0)), (2, c(5.0, 0.0))]);
        let w = f.project(0, 1);
        assert_eq!(w.coeff(0), c(3.0, 0.0));
        assert_eq!(w.coeff(1), c(2.0, 0.0));
        assert_eq!(w.coeff(2), c(0.0, 0.0));
        assert!(f.project(5, 9).is_zero());
        // idempotent
        assert_eq!(w.project(0, 1), w);
    }

    #[test]
    fn shift_split_minus_small_orders() {
        // f = f_0 + f_{-1} z + f_{-2} z^2
        let f = LaurentSeries::from_terms(&[
            (0, c(1.5, 0.0)),
            (-1, c(0.5, -0.25)),
            (-2, c(-0.125, 0.0)),
        ]);
        let (p0, _) = f.shift_split_minus(0).unwrap();
        assert_eq!(p0.coeff(0), f.coeff(0));
        assert_eq!(p0.support(), Some((0, 0)));
        let (p1, _) = f.shift_split_minus(1).unwrap();
        // f_0 z^{-1} + f_{-1}
        assert_eq!(p1.coeff(1), f.coeff(0));
        assert_eq!(p1.coeff(0), f.coeff(-1));
    }

    #[test]
    fn shift_split_plus_small_orders() {
        let f = LaurentSeries::from_terms(&[(0, c(2.0, 1.0)), (1, c(-1.0, 0.5)), (2, c(0.25, 0.0))]);
        let (_, m0) = f.shift_split_plus(0).unwrap();
        assert!(m0.is_zero());
        let (_, m2) = f.shift_split_plus(2).unwrap();
        // F_0 z^2 + F_1 z
        assert_eq!(m2.coeff(-2), f.coeff(0));
        assert_eq!(m2.coeff(-1), f.coeff(1));
    }

    #[test]
    fn shift_splits_reproduce_products_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = ContourGrid::new(1.1, 64).unwrap();
        // random decaying minus-type factor, 8 coefficients
        let terms: Vec<(i64, C64)> = (0..8)
            .map(|j| {
                (
                    -j,
                    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 0.5f64.powi(j as i32),
                )
            })
            .collect();
        let f = LaurentSeries::from_terms(&terms);
        let (p, m) = f.shift_split_minus(3).unwrap();
        for &z in g.nodes() {
            let direct = f.eval(z) * z.powi(-3);
            let split = p.eval(z) + m.eval(z);
            assert!((direct - split).norm() < 1e-12);
        }
        let terms: Vec<(i64, C64)> = (0..8)
            .map(|j| {
                (
                    j,
                    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 0.6f64.powi(j as i32),
                )
            })
            .collect();
        let big_f = LaurentSeries::from_terms(&terms);
        let (p, m) = big_f.shift_split_plus(4).unwrap();
        for &z in g.nodes() {
            let direct = big_f.eval(z) * z.powi(4);
            let split = p.eval(z) + m.eval(z);
            assert!((direct - split).norm() < 1e-12);
        }
    }

    #[test]
    fn shift_split_support_requirements() {
        let plusish = LaurentSeries::from_terms(&[(1, c(1.0, 0.0))]);
        assert!(plusish.shift_split_minus(1).is_err());
        let minusish = LaurentSeries::from_terms(&[(-1, c(1.0, 0.0))]);
        assert!(minusish.shift_split_plus(1).is_err());
    }

    #[test]
    fn inverse_transform_orthogonality() {
        let g = ContourGrid::new(1.02, 128).unwrap();
        let v = g.sample(|z| z.powi(-3)).unwrap();
        for x in -5..=5i64 {
            let u = g.inverse_transform(&v, x);
            let expect = if x == 3 { 1.0 } else { 0.0 };
            assert!((u - c(expect, 0.0)).norm() < 1e-12);
        }
        let constv = g.sample(|_| c(0.7, -0.2)).unwrap();
        assert!((g.inverse_transform(&constv, 0) - c(0.7, -0.2)).norm() < 1e-13);
        assert!(g.inverse_transform(&constv, 2).norm() < 1e-13);
        // ranged variant agrees
        let range = g.inverse_transform_range(&v, -2, 4);
        for (i, x) in (-2..=4i64).enumerate() {
            assert!((range[i] - g.inverse_transform(&v, x)).norm() < 1e-13);
        }
    }
}

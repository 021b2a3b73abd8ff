//! Multiplicative Wiener-Hopf factorization on the contour.
//!
//! For an index-zero, nonvanishing function `f` the Cauchy projectors split
//! `log f` additively; exponentiating the halves yields `f = f_+ f_-` with
//! `f_+` analytic (and zero-free) outside the contour and `f_-` inside. The
//! constant (m = 0) log coefficient is shared equally between the halves,
//! which realizes the symmetric normalization `f_+(1/z) = f_-(z)` whenever
//! `f(1/z) = f(z)`. Any other constant split would cancel in every
//! downstream formula, which only ever uses `f_+ f_-` products or ratios.
//!
//! For the diagonal entries `1 -+ lambda^N` there is also a closed form built
//! from Chebyshev-type products over the roots of `H + 4 sin^2(j pi / N)`;
//! it is kept as an independent cross-check of the numerical route.

use crate::contour::{ContourGrid, LaurentSeries};
use crate::kernel::{interior_root, KernelBundle};
use crate::scenario::DefectKind;
use crate::{C64, Error, Result};

/// Multiplicative factor pair of a contour function.
///
/// `plus` has support m >= 0 (series in 1/z including the constant), `minus`
/// has support m <= 0 (series in z including the constant). `plus_nodes` and
/// `minus_nodes` are the factor values at the grid nodes; their product
/// reproduces the input samples there.
#[derive(Debug, Clone)]
pub struct FactorPair {
    pub plus: LaurentSeries,
    pub minus: LaurentSeries,
    pub plus_nodes: Vec<C64>,
    pub minus_nodes: Vec<C64>,
}

impl FactorPair {
    /// Limit of the plus factor at infinity (its constant coefficient).
    pub fn plus_at_inf(&self) -> C64 {
        self.plus.coeff(0)
    }

    /// Value of the minus factor at the origin (its constant coefficient).
    pub fn minus_at_zero(&self) -> C64 {
        self.minus.coeff(0)
    }
}

/// Winding number of the sample loop around the origin.
pub fn winding_number(samples: &[C64]) -> i64 {
    let mut total = 0.0;
    for i in 0..samples.len() {
        let a = samples[i];
        let b = samples[(i + 1) % samples.len()];
        total += (b / a).arg();
    }
    (total / (2.0 * std::f64::consts::PI)).round() as i64
}

/// Factorizes `f^power` for samples of `f` on the grid; `power = 1` is the
/// plain factorization, `power = 1/2` produces the branch-consistent factors
/// of a square root such as `h = sqrt(H)`.
pub fn cauchy_factorize_pow(
    samples: &[C64],
    grid: &ContourGrid,
    power: f64,
) -> Result<FactorPair> {
    assert_eq!(samples.len(), grid.len());
    let max = samples.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let min = samples.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || min < 1e-14 * max {
        return Err(Error::VanishingSample);
    }
    let w = winding_number(samples);
    if w != 0 {
        return Err(Error::WindingNonZero(w));
    }
    // continuous logarithm along the contour, anchored at the principal value
    let mut logs = Vec::with_capacity(samples.len());
    let mut arg = samples[0].arg();
    let mut prev = samples[0];
    for &v in samples {
        arg += (v / prev).arg();
        logs.push(C64::new(v.norm().ln(), arg));
        prev = v;
    }
    let log_series = grid.to_series(&logs);
    let (log_plus, log_minus) = log_series.split_additive();
    let half0 = log_series.coeff(0) * 0.5;
    // move the shared constant: plus already holds all of c_0
    let s_plus = log_plus
        .add(&LaurentSeries::monomial(0, -half0))
        .scaled(C64::new(power, 0.0));
    let s_minus = log_minus
        .add(&LaurentSeries::monomial(0, half0))
        .scaled(C64::new(power, 0.0));
    let plus_nodes: Vec<C64> = grid.synthesize(&s_plus).iter().map(|v| v.exp()).collect();
    let minus_nodes: Vec<C64> = grid.synthesize(&s_minus).iter().map(|v| v.exp()).collect();
    let mut plus = grid.to_series(&plus_nodes);
    let mut minus = grid.to_series(&minus_nodes);
    plus.restrict_support(0, i64::MAX);
    minus.restrict_support(i64::MIN, 0);
    Ok(FactorPair {
        plus,
        minus,
        plus_nodes,
        minus_nodes,
    })
}

/// Plain multiplicative factorization `f = f_+ f_-`.
pub fn cauchy_factorize(samples: &[C64], grid: &ContourGrid) -> Result<FactorPair> {
    cauchy_factorize_pow(samples, grid, 1.0)
}

/// Node values of the closed-form factors of `1 - lambda^N` (alpha entries)
/// and `1 + lambda^N` (beta entries).
#[derive(Debug, Clone)]
pub struct TildeFactors {
    pub alpha_plus: Vec<C64>,
    pub alpha_minus: Vec<C64>,
    pub beta_plus: Vec<C64>,
    pub beta_minus: Vec<C64>,
}

/// Interior root of `g + 1/g = 2 + 4 sin^2(angle) - omega^2`.
fn chebyshev_root(omega: C64, angle: f64) -> Result<C64> {
    let c = 2.0 + 4.0 * angle.sin().powi(2) - omega * omega;
    match interior_root(c) {
        Err(Error::UnitModulusRoot) => Err(Error::RootSelectionAmbiguous),
        other => other,
    }
}

/// Closed-form factor values on the grid.
///
/// Each elementary symbol `(2 + 4 sin^2 - omega^2) - z - 1/z` factorizes as
/// `[(1 - g/z)/sqrt(g)] * [(1 - g z)/sqrt(g)]` over its interior root `g`;
/// the `(1 + h/r)^N` denominator has no closed-form factors and is supplied
/// from a numerical factorization of `1 + h/r` on the same grid.
pub fn chebyshev_tilde_factors(
    grid: &ContourGrid,
    bundle: &KernelBundle,
    n: i64,
) -> Result<TildeFactors> {
    let omega = bundle.omega;
    let n_alpha = ((n - 1) / 2) as usize; // floor((N-1)/2)
    let n_beta = (n / 2) as usize; // floor(N/2)
    let g1: Vec<C64> = (1..=n_alpha)
        .map(|j| chebyshev_root(omega, j as f64 * std::f64::consts::PI / n as f64))
        .collect::<Result<_>>()?;
    let g2: Vec<C64> = (1..=n_beta)
        .map(|j| {
            chebyshev_root(
                omega,
                (2 * j - 1) as f64 * std::f64::consts::PI / (2 * n) as f64,
            )
        })
        .collect::<Result<_>>()?;
    let z_r = bundle.zeros.z_r;
    let sqrt_zr = z_r.sqrt();
    let sqrt_g1: Vec<C64> = g1.iter().map(|g| g.sqrt()).collect();
    let sqrt_g2: Vec<C64> = g2.iter().map(|g| g.sqrt()).collect();

    // numerically factored h, r and 1 + h/r
    let h_pair = cauchy_factorize_pow(&bundle.big_h, grid, 0.5)?;
    let r_pair = cauchy_factorize_pow(&bundle.big_r, grid, 0.5)?;
    let one_hr: Vec<C64> = bundle
        .h
        .iter()
        .zip(&bundle.r)
        .map(|(h, r)| 1.0 + h / r)
        .collect();
    let one_hr_pair = cauchy_factorize(&one_hr, grid)?;

    let k = grid.len();
    let two_half_n = C64::new(2.0f64.powf(n as f64 / 2.0), 0.0);
    let mut out = TildeFactors {
        alpha_plus: Vec::with_capacity(k),
        alpha_minus: Vec::with_capacity(k),
        beta_plus: Vec::with_capacity(k),
        beta_minus: Vec::with_capacity(k),
    };
    for (kk, &z) in grid.nodes().iter().enumerate() {
        let zinv = 1.0 / z;
        let den_p = ((1.0 - z_r * zinv) / sqrt_zr).powi(n_alpha as i32);
        let den_m = ((1.0 - z_r * z) / sqrt_zr).powi(n_alpha as i32);
        let mut num_p = C64::new(1.0, 0.0);
        let mut num_m = C64::new(1.0, 0.0);
        for (g, sg) in g1.iter().zip(&sqrt_g1) {
            num_p *= (1.0 - g * zinv) / sg;
            num_m *= (1.0 - g * z) / sg;
        }
        let hr_p = h_pair.plus_nodes[kk] / r_pair.plus_nodes[kk];
        let hr_m = h_pair.minus_nodes[kk] / r_pair.minus_nodes[kk];
        let ohr_p_n = one_hr_pair.plus_nodes[kk].powi(n as i32);
        let ohr_m_n = one_hr_pair.minus_nodes[kk].powi(n as i32);
        out.alpha_plus.push(hr_p * two_half_n * num_p / den_p / ohr_p_n);
        out.alpha_minus.push(hr_m * two_half_n * num_m / den_m / ohr_m_n);

        let den_p = ((1.0 - z_r * zinv) / sqrt_zr).powi(n_beta as i32);
        let den_m = ((1.0 - z_r * z) / sqrt_zr).powi(n_beta as i32);
        let mut num_p = C64::new(1.0, 0.0);
        let mut num_m = C64::new(1.0, 0.0);
        for (g, sg) in g2.iter().zip(&sqrt_g2) {
            num_p *= (1.0 - g * zinv) / sg;
            num_m *= (1.0 - g * z) / sg;
        }
        out.beta_plus.push(two_half_n * num_p / den_p / ohr_p_n);
        out.beta_minus.push(two_half_n * num_m / den_m / ohr_m_n);
    }
    Ok(out)
}

/// Factor pairs of the kernel diagonal plus the handful of point evaluations
/// the reduced systems keep asking for.
#[derive(Debug, Clone)]
pub struct FactorSuite {
    pub n_sep: i64,
    pub kind: DefectKind,
    pub alpha: FactorPair,
    pub beta: FactorPair,
    /// `1/alpha_-` and `1/beta_-` as minus-type series (support m <= 0).
    pub inv_alpha_minus: LaurentSeries,
    pub inv_beta_minus: LaurentSeries,
    /// `1/alpha_+`, `1/beta_+` at the grid nodes.
    pub inv_alpha_plus_nodes: Vec<C64>,
    pub inv_beta_plus_nodes: Vec<C64>,
    pub alpha_minus_at_zp: C64,
    pub beta_minus_at_zp: C64,
    pub alpha_minus_at_zq: C64,
    pub beta_minus_at_zq: C64,
    pub alpha_minus_at_zero: C64,
    pub beta_minus_at_zero: C64,
    pub alpha_plus_at_inf: C64,
    pub beta_plus_at_inf: C64,
}

impl FactorSuite {
    pub fn inv_alpha_minus_at(&self, z: C64) -> C64 {
        self.inv_alpha_minus.eval(z)
    }

    pub fn inv_beta_minus_at(&self, z: C64) -> C64 {
        self.inv_beta_minus.eval(z)
    }
}

/// Factorizes `alpha` and `beta` directly and caches the special evaluations.
/// `z_p` is the incident transform pole; `z_q` the interior zero of `Q`.
pub fn build_factor_suite(
    grid: &ContourGrid,
    bundle: &KernelBundle,
    n_sep: i64,
    kind: DefectKind,
    z_p: C64,
) -> Result<FactorSuite> {
    let (alpha_nodes, beta_nodes) = bundle.alpha_beta_nodes(n_sep, kind);
    let alpha = cauchy_factorize(&alpha_nodes, grid)?;
    let beta = cauchy_factorize(&beta_nodes, grid)?;
    let inv_alpha_minus_nodes: Vec<C64> = alpha.minus_nodes.iter().map(|v| 1.0 / v).collect();
    let inv_beta_minus_nodes: Vec<C64> = beta.minus_nodes.iter().map(|v| 1.0 / v).collect();
    let mut inv_alpha_minus = grid.to_series(&inv_alpha_minus_nodes);
    let mut inv_beta_minus = grid.to_series(&inv_beta_minus_nodes);
    inv_alpha_minus.restrict_support(i64::MIN, 0);
    inv_beta_minus.restrict_support(i64::MIN, 0);
    let z_q = bundle.zeros.z_q;
    Ok(FactorSuite {
        n_sep,
        kind,
        alpha_minus_at_zp: alpha.minus.eval(z_p),
        beta_minus_at_zp: beta.minus.eval(z_p),
        alpha_minus_at_zq: alpha.minus.eval(z_q),
        beta_minus_at_zq: beta.minus.eval(z_q),
        alpha_minus_at_zero: alpha.minus_at_zero(),
        beta_minus_at_zero: beta.minus_at_zero(),
        alpha_plus_at_inf: alpha.plus_at_inf(),
        beta_plus_at_inf: beta.plus_at_inf(),
        inv_alpha_plus_nodes: alpha.plus_nodes.iter().map(|v| 1.0 / v).collect(),
        inv_beta_plus_nodes: beta.plus_nodes.iter().map(|v| 1.0 / v).collect(),
        inv_alpha_minus,
        inv_beta_minus,
        alpha,
        beta,
    })
}

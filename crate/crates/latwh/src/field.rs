//! Reconstruction of the scattered field from a reduced solution.
//!
//! The right-hand side `c` of the factorized Wiener-Hopf equation is split
//! additively into explicit "+" and "-" parts. Terms carrying the incident
//! pole `z_P` are split by pole subtraction (evaluating the minus factors at
//! `z_P`, at 0, and the plus factors at infinity), never by generic
//! coefficient splitting, which would converge slowly for a pole close to
//! the contour. The segment polynomial contributes through the finite
//! shift-split halves. The solved transforms then follow from
//! `v^- = L_- c^-`, `v^+ = L_+^{-1} c^+`, each row transform from the
//! bounded-root recurrence, and lattice values from the trapezoid inverse
//! transform, which is exact for alias-free integrands.

use crate::constraint::ConstraintSolution;
use crate::crack::{incident_jump_plus, ReducedSolution};
use crate::reduce::{self, pole_factor};
use crate::scenario::{incident_field, DefectKind, ScatteringScenario, WaveVector};
use crate::setup::{Numerics, Problem};
use crate::{C64, Error, Result};

const SQRT2_INV: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Scattered,
    Incident,
    Total,
}

/// Dense complex values on a rectangular index window.
#[derive(Debug, Clone)]
pub struct LatticeField {
    pub x_lo: i64,
    pub x_hi: i64,
    pub y_lo: i64,
    pub y_hi: i64,
    pub kind: FieldKind,
    values: Vec<C64>,
}

impl LatticeField {
    pub fn zeros(window: Window, kind: FieldKind) -> Self {
        let nx = (window.x_hi - window.x_lo + 1) as usize;
        let ny = (window.y_hi - window.y_lo + 1) as usize;
        Self {
            x_lo: window.x_lo,
            x_hi: window.x_hi,
            y_lo: window.y_lo,
            y_hi: window.y_hi,
            kind,
            values: vec![C64::new(0.0, 0.0); nx * ny],
        }
    }

    pub fn window(&self) -> Window {
        Window {
            x_lo: self.x_lo,
            x_hi: self.x_hi,
            y_lo: self.y_lo,
            y_hi: self.y_hi,
        }
    }

    fn index(&self, x: i64, y: i64) -> usize {
        debug_assert!(self.contains(x, y));
        let nx = (self.x_hi - self.x_lo + 1) as usize;
        (y - self.y_lo) as usize * nx + (x - self.x_lo) as usize
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.x_lo && x <= self.x_hi && y >= self.y_lo && y <= self.y_hi
    }

    pub fn get(&self, x: i64, y: i64) -> C64 {
        self.values[self.index(x, y)]
    }

    pub fn set(&mut self, x: i64, y: i64, v: C64) {
        let i = self.index(x, y);
        self.values[i] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, i64, C64)> + '_ {
        let nx = (self.x_hi - self.x_lo + 1) as i64;
        self.values.iter().enumerate().map(move |(i, &v)| {
            let y = self.y_lo + i as i64 / nx;
            let x = self.x_lo + i as i64 % nx;
            (x, y, v)
        })
    }

    /// Pointwise sum, used to form totals from scattered + incident.
    pub fn add(&self, other: &LatticeField, kind: FieldKind) -> LatticeField {
        assert_eq!(self.window(), other.window());
        let mut out = self.clone();
        out.kind = kind;
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub x_lo: i64,
    pub x_hi: i64,
    pub y_lo: i64,
    pub y_hi: i64,
}

impl Window {
    pub fn centered(half_x: i64, half_y: i64) -> Self {
        Self {
            x_lo: -half_x,
            x_hi: half_x,
            y_lo: -half_y,
            y_hi: half_y,
        }
    }
}

/// Incident plane wave on a window.
pub fn incident_lattice_field(
    s: &ScatteringScenario,
    w: &WaveVector,
    window: Window,
) -> LatticeField {
    let mut f = LatticeField::zeros(window, FieldKind::Incident);
    for y in window.y_lo..=window.y_hi {
        for x in window.x_lo..=window.x_hi {
            f.set(x, y, incident_field(s, w, x, y));
        }
    }
    f
}

/// Reduced solution of either defect kind.
#[derive(Debug, Clone)]
pub enum Solution {
    Crack(ReducedSolution),
    Constraint(ConstraintSolution),
}

impl Solution {
    pub fn segment_indices(&self) -> &[i64] {
        match self {
            Solution::Crack(s) => &s.indices,
            Solution::Constraint(s) => &s.indices,
        }
    }

    pub fn segment_values(&self) -> &[C64] {
        match self {
            Solution::Crack(s) => &s.unknowns,
            Solution::Constraint(s) => &s.w_segment,
        }
    }
}

/// Dispatches to the appropriate reduced solver.
pub fn solve(p: &Problem) -> Result<Solution> {
    match p.scenario.kind {
        DefectKind::CrackPair => Ok(Solution::Crack(crate::crack::solve_crack(p)?)),
        DefectKind::ConstraintPair => {
            Ok(Solution::Constraint(crate::constraint::solve_constraint(p)?))
        }
    }
}

/// Two-component node arrays of the "+" and "-" halves of the right-hand
/// side.
#[derive(Debug, Clone)]
pub struct RhsParts {
    pub minus: [Vec<C64>; 2],
    pub plus: [Vec<C64>; 2],
}

impl RhsParts {
    fn zeros(k: usize) -> Self {
        Self {
            minus: [vec![C64::new(0.0, 0.0); k], vec![C64::new(0.0, 0.0); k]],
            plus: [vec![C64::new(0.0, 0.0); k], vec![C64::new(0.0, 0.0); k]],
        }
    }

    fn accumulate(&mut self, other: &RhsParts) {
        for c in 0..2 {
            for (a, b) in self.minus[c].iter_mut().zip(&other.minus[c]) {
                *a += b;
            }
            for (a, b) in self.plus[c].iter_mut().zip(&other.plus[c]) {
                *a += b;
            }
        }
    }
}

/// `J v` for `J = (1/sqrt 2) [[1, -1], [1, 1]]`.
fn j_apply(a: C64, b: C64) -> (C64, C64) {
    (SQRT2_INV * (a - b), SQRT2_INV * (a + b))
}

/// `J^{-1} v`.
fn j_inv_apply(a: C64, b: C64) -> (C64, C64) {
    (SQRT2_INV * (a + b), SQRT2_INV * (b - a))
}

struct FactorNodes<'a> {
    inv_am: Vec<C64>,
    inv_bm: Vec<C64>,
    ap: &'a [C64],
    bp: &'a [C64],
    iva0: C64,
    ivb0: C64,
    apinf: C64,
    bpinf: C64,
    ivazp: C64,
    ivbzp: C64,
}

impl<'a> FactorNodes<'a> {
    fn new(p: &'a Problem) -> Self {
        let s = &p.suite;
        Self {
            inv_am: s.alpha.minus_nodes.iter().map(|v| 1.0 / v).collect(),
            inv_bm: s.beta.minus_nodes.iter().map(|v| 1.0 / v).collect(),
            ap: &s.alpha.plus_nodes,
            bp: &s.beta.plus_nodes,
            iva0: 1.0 / s.alpha_minus_at_zero,
            ivb0: 1.0 / s.beta_minus_at_zero,
            apinf: s.alpha_plus_at_inf,
            bpinf: s.beta_plus_at_inf,
            ivazp: 1.0 / s.alpha_minus_at_zp,
            ivbzp: 1.0 / s.beta_minus_at_zp,
        }
    }
}

/// Incident part for the crack pair: pole subtraction at `z_P`.
fn c_inc_crack(p: &Problem, fz: &FactorNodes) -> RhsParts {
    let jump = incident_jump_plus(&p.scenario, &p.wave);
    let e = p.phase_ky_n();
    let k = p.grid.len();
    let mut parts = RhsParts::zeros(k);
    for (kk, &z) in p.grid.nodes().iter().enumerate() {
        let s = jump.v0(z);
        let (ja, jb) = (SQRT2_INV * s * (1.0 - e), SQRT2_INV * s * (1.0 + e));
        parts.minus[0][kk] = (fz.inv_am[kk] - fz.ivazp) * ja;
        parts.minus[1][kk] = (fz.inv_bm[kk] - fz.ivbzp) * jb;
        parts.plus[0][kk] = (fz.ivazp - fz.ap[kk]) * ja;
        parts.plus[1][kk] = (fz.ivbzp - fz.bp[kk]) * jb;
    }
    parts
}

/// Incident part for the constraint pair: the `Q`-weighted pole needs extra
/// linear corrections to behave at 0 and infinity.
fn c_inc_constraint(p: &Problem, fz: &FactorNodes) -> RhsParts {
    let e = p.phase_ky_n();
    let amp = p.scenario.amplitude;
    let z_p = p.wave.z_p;
    let q_zp = p.q_at_zp();
    let k = p.grid.len();
    let mut parts = RhsParts::zeros(k);
    for (kk, &z) in p.grid.nodes().iter().enumerate() {
        let s = -amp * pole_factor(z, z_p);
        let (ja, jb) = (SQRT2_INV * s * (1.0 - e), SQRT2_INV * s * (1.0 + e));
        let q = p.bundle.big_q[kk];
        let lin_in = (1.0 / z - 1.0 / z_p) * fz.iva0 + (z - z_p) * fz.apinf;
        let lin_in_b = (1.0 / z - 1.0 / z_p) * fz.ivb0 + (z - z_p) * fz.bpinf;
        parts.minus[0][kk] = -(q * fz.inv_am[kk] - q_zp * fz.ivazp + lin_in) * ja;
        parts.minus[1][kk] = -(q * fz.inv_bm[kk] - q_zp * fz.ivbzp + lin_in_b) * jb;
        parts.plus[0][kk] = -(-q * fz.ap[kk] + q_zp * fz.ivazp - lin_in) * ja;
        parts.plus[1][kk] = -(-q * fz.bp[kk] + q_zp * fz.ivbzp - lin_in_b) * jb;
    }
    parts
}

/// Segment part, identical in shape for both defect kinds: the "+"-side
/// polynomial enters through the finite shift-split halves, the infinite
/// halves through pointwise differences.
fn c_lambda(p: &Problem, fz: &FactorNodes, indices: &[i64], seg: &[C64]) -> Result<RhsParts> {
    let k = p.grid.len();
    let mut parts = RhsParts::zeros(k);
    if indices.is_empty() {
        return Ok(parts);
    }
    let m = p.scenario.m_offset;
    let basis = reduce::segment_basis(&p.suite, m)?;
    for (kk, &z) in p.grid.nodes().iter().enumerate() {
        let mut s_poly = C64::new(0.0, 0.0);
        let mut fin_a = C64::new(0.0, 0.0);
        let mut fin_b = C64::new(0.0, 0.0);
        for (j, &x) in basis.xs.iter().enumerate() {
            let w = seg[j] * z.powi(-x as i32);
            s_poly += w;
            fin_a += seg[j] * basis.a_fin[j].eval(z);
            fin_b += seg[j] * basis.b_fin[j].eval(z);
        }
        if m > 0 {
            parts.minus[0][kk] = SQRT2_INV * (fz.inv_am[kk] * s_poly - fin_a);
            parts.minus[1][kk] = -SQRT2_INV * (fz.inv_bm[kk] * s_poly - fin_b);
            parts.plus[0][kk] = SQRT2_INV * (fin_a - fz.ap[kk] * s_poly);
            parts.plus[1][kk] = SQRT2_INV * (fz.bp[kk] * s_poly - fin_b);
        } else {
            parts.minus[0][kk] = SQRT2_INV * (fin_a - fz.inv_am[kk] * s_poly);
            parts.minus[1][kk] = SQRT2_INV * (fz.inv_bm[kk] * s_poly - fin_b);
            parts.plus[0][kk] = SQRT2_INV * (fz.ap[kk] * s_poly - fin_a);
            parts.plus[1][kk] = SQRT2_INV * (fin_b - fz.bp[kk] * s_poly);
        }
    }
    Ok(parts)
}

/// `c = -(D_-^{-1} J - D_+ J) v` for a constant two-vector `v`.
fn pattern_const(p: &Problem, fz: &FactorNodes, v: (C64, C64)) -> RhsParts {
    let k = p.grid.len();
    let (ja, jb) = j_apply(v.0, v.1);
    let mut parts = RhsParts::zeros(k);
    for kk in 0..k {
        parts.minus[0][kk] = -(fz.inv_am[kk] - fz.iva0) * ja;
        parts.minus[1][kk] = -(fz.inv_bm[kk] - fz.ivb0) * jb;
        parts.plus[0][kk] = (fz.ap[kk] - fz.iva0) * ja;
        parts.plus[1][kk] = (fz.bp[kk] - fz.ivb0) * jb;
    }
    parts
}

/// `c = -(D_-^{-1} J - D_+ J) (z v)` for a constant two-vector `v`.
fn pattern_linear(p: &Problem, fz: &FactorNodes, v: (C64, C64)) -> RhsParts {
    let k = p.grid.len();
    let (ja, jb) = j_apply(v.0, v.1);
    let mut parts = RhsParts::zeros(k);
    for (kk, &z) in p.grid.nodes().iter().enumerate() {
        parts.minus[0][kk] = -z * (fz.inv_am[kk] - fz.apinf) * ja;
        parts.minus[1][kk] = -z * (fz.inv_bm[kk] - fz.bpinf) * jb;
        parts.plus[0][kk] = z * (fz.ap[kk] - fz.apinf) * ja;
        parts.plus[1][kk] = z * (fz.bp[kk] - fz.bpinf) * jb;
    }
    parts
}

/// `c = -(D_-^{-1} J - D_+ J) (w z^{-M} e_2)`.
fn pattern_offset_e2(p: &Problem, fz: &FactorNodes, w: C64) -> Result<RhsParts> {
    let m = p.scenario.m_offset;
    let (fa_m, fb_m) = reduce::offset_split(&p.suite, m)?;
    let k = p.grid.len();
    let mut parts = RhsParts::zeros(k);
    for (kk, &z) in p.grid.nodes().iter().enumerate() {
        let zm = z.powi(-m as i32);
        let c = SQRT2_INV * w;
        if m >= 0 {
            // finite halves are phi_M^+, psi_M^+
            let pa_fin = fa_m.eval(z);
            let pb_fin = fb_m.eval(z);
            let pa_min = fz.inv_am[kk] * zm - pa_fin;
            let pb_min = fz.inv_bm[kk] * zm - pb_fin;
            parts.minus[0][kk] = c * pa_min;
            parts.minus[1][kk] = -c * pb_min;
            parts.plus[0][kk] = c * (pa_fin - fz.ap[kk] * zm);
            parts.plus[1][kk] = c * (fz.bp[kk] * zm - pb_fin);
        } else {
            // finite halves are Phi_M^-, Psi_M^-
            let pa_fin = fa_m.eval(z);
            let pb_fin = fb_m.eval(z);
            let pa_plus = fz.ap[kk] * zm - pa_fin;
            let pb_plus = fz.bp[kk] * zm - pb_fin;
            parts.minus[0][kk] = c * (fz.inv_am[kk] * zm - pa_fin);
            parts.minus[1][kk] = c * (pb_fin - fz.inv_bm[kk] * zm);
            parts.plus[0][kk] = -c * pa_plus;
            parts.plus[1][kk] = c * pb_plus;
        }
    }
    Ok(parts)
}

/// Which pieces of the right-hand side to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RhsSelect {
    Full,
    Aligned,
    Perturbation,
}

/// Auxiliary row data for the constraint pair (the crack anchors derive
/// purely from the solved transforms).
struct RowAux {
    w0_extra: Vec<C64>,
    wn_extra: Vec<C64>,
    include_pole: bool,
}

/// Solved transforms on the contour plus the anchor rows.
pub struct FieldEngine<'a> {
    p: &'a Problem,
    /// Max-norm of `v^- + L v^+ - c~` over the contour (only meaningful for
    /// the full right-hand side).
    pub wh_residual: f64,
    u0f: Vec<C64>,
    /// `u_{N-1}^F` for the crack, `u_N^F` for the constraint.
    u_second: Vec<C64>,
    /// `u_{-1}^F` for the crack (row below the lower defect).
    u_low: Vec<C64>,
    /// `u_N^F` for both kinds.
    u_high: Vec<C64>,
}

impl<'a> FieldEngine<'a> {
    pub fn new(p: &'a Problem, sol: &'a Solution) -> Result<Self> {
        Self::build(p, sol, RhsSelect::Full, None)
    }

    fn build(
        p: &'a Problem,
        sol: &'a Solution,
        select: RhsSelect,
        precomputed_u_t_m1n: Option<C64>,
    ) -> Result<Self> {
        let fz = FactorNodes::new(p);
        let k = p.grid.len();
        let indices = sol.segment_indices().to_vec();
        let seg = sol.segment_values().to_vec();

        let mut parts = RhsParts::zeros(k);
        let mut aux: Option<RowAux> = None;
        let amp = p.scenario.amplitude;
        let e = p.phase_ky_n();
        let z_p = p.wave.z_p;
        let m = p.scenario.m_offset;

        // the segment polynomial evaluated on the contour, and its signed
        // contribution to the upper row transform
        let s_poly_nodes: Vec<C64> = p
            .grid
            .nodes()
            .iter()
            .map(|&z| {
                indices
                    .iter()
                    .zip(&seg)
                    .map(|(&x, &v)| v * z.powi(-x as i32))
                    .sum()
            })
            .collect();
        let seg_sign = if m >= 0 { 1.0 } else { -1.0 };

        match (sol, select) {
            (Solution::Crack(_), RhsSelect::Full) => {
                parts.accumulate(&c_inc_crack(p, &fz));
                parts.accumulate(&c_lambda(p, &fz, &indices, &seg)?);
            }
            (Solution::Crack(_), RhsSelect::Aligned) => {
                parts.accumulate(&c_inc_crack(p, &fz));
            }
            (Solution::Crack(_), RhsSelect::Perturbation) => {
                parts.accumulate(&c_lambda(p, &fz, &indices, &seg)?);
            }
            (Solution::Constraint(cs), _) => {
                let u_inc_m10 = incident_field(&p.scenario, &p.wave, -1, 0);
                let u_inc_m1n = incident_field(&p.scenario, &p.wave, -1, p.scenario.n_sep);
                let u_scat_m10 = cs.u_m10 - u_inc_m10;
                let w_off = -cs.u_mm1n;
                let n_sep = p.scenario.n_sep;
                match select {
                    RhsSelect::Full => {
                        parts.accumulate(&c_inc_constraint(p, &fz));
                        parts.accumulate(&pattern_const(p, &fz, (-u_scat_m10, u_inc_m1n)));
                        parts.accumulate(&pattern_linear(p, &fz, (-amp, -amp * e)));
                        parts.accumulate(&pattern_offset_e2(p, &fz, w_off)?);
                        parts.accumulate(&c_lambda(p, &fz, &indices, &seg)?);
                        let w0: Vec<C64> = p
                            .grid
                            .nodes()
                            .iter()
                            .map(|&z| -u_scat_m10 - z * amp)
                            .collect();
                        let wn: Vec<C64> = p
                            .grid
                            .nodes()
                            .iter()
                            .enumerate()
                            .map(|(kk, &z)| {
                                -z.powi(-m as i32) * cs.u_mm1n + u_inc_m1n - z * amp * e
                                    + seg_sign * s_poly_nodes[kk]
                            })
                            .collect();
                        aux = Some(RowAux {
                            w0_extra: w0,
                            wn_extra: wn,
                            include_pole: true,
                        });
                    }
                    RhsSelect::Aligned | RhsSelect::Perturbation => {
                        let u_t_m1n = precomputed_u_t_m1n.ok_or_else(|| {
                            Error::InvalidScenario(
                                "stagger split needs the boundary value u^t at (-1, N)".into(),
                            )
                        })?;
                        let u_scat_m1n = u_t_m1n - u_inc_m1n;
                        if select == RhsSelect::Aligned {
                            parts.accumulate(&c_inc_constraint(p, &fz));
                            parts.accumulate(&pattern_const(p, &fz, (-u_scat_m10, -u_scat_m1n)));
                            parts.accumulate(&pattern_linear(p, &fz, (-amp, -amp * e)));
                            let w0: Vec<C64> = p
                                .grid
                                .nodes()
                                .iter()
                                .map(|&z| -u_scat_m10 - z * amp)
                                .collect();
                            let wn: Vec<C64> = p
                                .grid
                                .nodes()
                                .iter()
                                .map(|&z| -u_scat_m1n - z * amp * e)
                                .collect();
                            aux = Some(RowAux {
                                w0_extra: w0,
                                wn_extra: wn,
                                include_pole: true,
                            });
                        } else {
                            parts.accumulate(&pattern_const(p, &fz, (C64::new(0.0, 0.0), u_t_m1n)));
                            parts.accumulate(&pattern_offset_e2(p, &fz, w_off)?);
                            parts.accumulate(&c_lambda(p, &fz, &indices, &seg)?);
                            let w0 = vec![C64::new(0.0, 0.0); k];
                            let wn: Vec<C64> = p
                                .grid
                                .nodes()
                                .iter()
                                .enumerate()
                                .map(|(kk, &z)| {
                                    u_t_m1n - z.powi(-m as i32) * cs.u_mm1n
                                        + seg_sign * s_poly_nodes[kk]
                                })
                                .collect();
                            aux = Some(RowAux {
                                w0_extra: w0,
                                wn_extra: wn,
                                include_pole: false,
                            });
                        }
                        let _ = n_sep;
                    }
                }
            }
        }

        // Wiener-Hopf solution on the contour
        let suite = &p.suite;
        let mut sol_minus = [vec![C64::new(0.0, 0.0); k], vec![C64::new(0.0, 0.0); k]];
        let mut sol_plus = [vec![C64::new(0.0, 0.0); k], vec![C64::new(0.0, 0.0); k]];
        for kk in 0..k {
            let (a, b) = j_inv_apply(
                suite.alpha.minus_nodes[kk] * parts.minus[0][kk],
                suite.beta.minus_nodes[kk] * parts.minus[1][kk],
            );
            sol_minus[0][kk] = a;
            sol_minus[1][kk] = b;
            let (a, b) = j_inv_apply(
                parts.plus[0][kk] / suite.alpha.plus_nodes[kk],
                parts.plus[1][kk] / suite.beta.plus_nodes[kk],
            );
            sol_plus[0][kk] = a;
            sol_plus[1][kk] = b;
        }

        // residual against the unfactorized equation (full selections only)
        let wh_residual = if select == RhsSelect::Full {
            wh_residual(p, sol, &s_poly_nodes, &sol_minus, &sol_plus)
        } else {
            0.0
        };

        // anchor rows
        let n = p.scenario.n_sep;
        let (u0f, u_second, u_low, u_high);
        match sol {
            Solution::Crack(_) => {
                if n < 2 {
                    return Err(Error::InvalidScenario(
                        "crack field synthesis needs N >= 2".into(),
                    ));
                }
                let mut v0f = vec![C64::new(0.0, 0.0); k];
                let mut vnf = vec![C64::new(0.0, 0.0); k];
                for kk in 0..k {
                    v0f[kk] = sol_minus[0][kk] + sol_plus[0][kk];
                    vnf[kk] = sol_minus[1][kk] + sol_plus[1][kk];
                }
                let mut u0 = vec![C64::new(0.0, 0.0); k];
                let mut un1 = vec![C64::new(0.0, 0.0); k];
                for kk in 0..k {
                    let lam = p.bundle.lam[kk];
                    let lam2n2 = lam.powi(2 * n as i32 - 2);
                    let den = 1.0 - lam2n2;
                    let f1 = (lam - lam.powi(2 * n as i32 - 3)) / den;
                    let fn2 = (lam.powi(n as i32 - 2) - lam.powi(n as i32)) / den;
                    let a = f1 - p.bundle.big_h[kk] - 1.0 / lam;
                    let det = a * a - fn2 * fn2;
                    let pre = (1.0 - 1.0 / lam) / det;
                    u0[kk] = pre * (a * v0f[kk] + fn2 * vnf[kk]);
                    un1[kk] = pre * (-fn2 * v0f[kk] - a * vnf[kk]);
                }
                let low: Vec<C64> = (0..k).map(|kk| u0[kk] - v0f[kk]).collect();
                let high: Vec<C64> = (0..k).map(|kk| un1[kk] + vnf[kk]).collect();
                u0f = u0;
                u_second = un1;
                u_low = low;
                u_high = high;
            }
            Solution::Constraint(_) => {
                let aux = aux.expect("constraint synthesis always sets row data");
                let mut u0 = vec![C64::new(0.0, 0.0); k];
                let mut un = vec![C64::new(0.0, 0.0); k];
                for (kk, &z) in p.grid.nodes().iter().enumerate() {
                    let q = p.bundle.big_q[kk];
                    let w0_minus = sol_minus[0][kk];
                    let wn_minus = sol_minus[1][kk];
                    let pole = if aux.include_pole {
                        pole_factor(z, z_p)
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    u0[kk] = (aux.w0_extra[kk] + w0_minus) / q - amp * pole;
                    un[kk] = (aux.wn_extra[kk] + wn_minus) / q - amp * e * pole;
                }
                u_low = u0.clone();
                u_high = un.clone();
                u0f = u0;
                u_second = un;
            }
        }

        Ok(Self {
            p,
            wh_residual,
            u0f,
            u_second,
            u_low,
            u_high,
        })
    }

    /// Transform of the scattered field restricted to row `y`.
    pub fn row_transform(&self, y: i64) -> Vec<C64> {
        let p = self.p;
        let n = p.scenario.n_sep;
        let k = p.grid.len();
        let mut out = vec![C64::new(0.0, 0.0); k];
        match p.scenario.kind {
            DefectKind::CrackPair => {
                for kk in 0..k {
                    let lam = p.bundle.lam[kk];
                    out[kk] = if y >= n {
                        self.u_high[kk] * lam.powi((y - n) as i32)
                    } else if y <= -1 {
                        self.u_low[kk] * lam.powi((-(y + 1)) as i32)
                    } else if y == 0 {
                        self.u0f[kk]
                    } else if y == n - 1 {
                        self.u_second[kk]
                    } else {
                        let den = 1.0 - lam.powi(2 * n as i32 - 2);
                        let f = (lam.powi(y as i32) - lam.powi((2 * n - 2 - y) as i32)) / den;
                        let g = (lam.powi((n - 1 - y) as i32) - lam.powi((n - 1 + y) as i32))
                            / den;
                        f * self.u0f[kk] + g * self.u_second[kk]
                    };
                }
            }
            DefectKind::ConstraintPair => {
                for kk in 0..k {
                    let lam = p.bundle.lam[kk];
                    out[kk] = if y >= n {
                        self.u_high[kk] * lam.powi((y - n) as i32)
                    } else if y <= 0 {
                        self.u0f[kk] * lam.powi((-y) as i32)
                    } else {
                        let den = 1.0 - lam.powi(2 * n as i32);
                        let f = (lam.powi(y as i32) - lam.powi((2 * n - y) as i32)) / den;
                        let g = (lam.powi((n - y) as i32) - lam.powi((n + y) as i32)) / den;
                        f * self.u0f[kk] + g * self.u_high[kk]
                    };
                }
            }
        }
        out
    }

    /// Scattered field on a window by the inverse transform of each row.
    pub fn field(&self, window: Window) -> LatticeField {
        let mut out = LatticeField::zeros(window, FieldKind::Scattered);
        for y in window.y_lo..=window.y_hi {
            let row = self.row_transform(y);
            let values = self
                .p
                .grid
                .inverse_transform_range(&row, window.x_lo, window.x_hi);
            for (i, x) in (window.x_lo..=window.x_hi).enumerate() {
                out.set(x, y, values[i]);
            }
        }
        out
    }
}

/// Max-norm of `v^- + L v^+ - c~` over the contour, with `c~` evaluated from
/// the unfactorized kernel and the solved unknowns.
fn wh_residual(
    p: &Problem,
    sol: &Solution,
    s_poly_nodes: &[C64],
    sol_minus: &[Vec<C64>; 2],
    sol_plus: &[Vec<C64>; 2],
) -> f64 {
    let n = p.scenario.n_sep;
    let m = p.scenario.m_offset;
    let e = p.phase_ky_n();
    let amp = p.scenario.amplitude;
    let z_p = p.wave.z_p;
    let mut worst = 0.0f64;
    for (kk, &z) in p.grid.nodes().iter().enumerate() {
        let lam_n = p.bundle.lam[kk].powi(n as i32);
        let (lk, lc) = p.bundle.kernels_at(kk);
        let l = match p.scenario.kind {
            DefectKind::CrackPair => lk,
            DefectKind::ConstraintPair => lc,
        };
        // c~ per kind
        let (t0, t1) = match sol {
            Solution::Crack(_) => {
                let jump = incident_jump_plus(&p.scenario, &p.wave);
                let q0 = jump.v0(z);
                let q1 = jump.vn(z);
                let pseg = if m >= 0 { -1.0 } else { 1.0 };
                (q0, q1 + pseg * s_poly_nodes[kk])
            }
            Solution::Constraint(cs) => {
                let q = p.bundle.big_q[kk];
                let u_inc_m10 = incident_field(&p.scenario, &p.wave, -1, 0);
                let u_inc_m1n = incident_field(&p.scenario, &p.wave, -1, n);
                let w0 = -(cs.u_m10 - u_inc_m10) - z * amp;
                let wn = -z.powi(-m as i32) * cs.u_mm1n + u_inc_m1n - z * amp * e;
                let pseg = if m >= 0 { 1.0 } else { -1.0 };
                let pole = pole_factor(z, z_p);
                (
                    -(q * -amp * pole + w0),
                    -(q * -amp * e * pole + wn + pseg * s_poly_nodes[kk]),
                )
            }
        };
        // c~ = +-(I - L)(...) with the sign folded into t above for the
        // constraint; for the crack the (I - L) factor applies directly.
        let (c0, c1) = {
            let a = t0 - l * (t0 + lam_n * t1);
            let b = t1 - l * (lam_n * t0 + t1);
            (a, b)
        };
        let lhs0 =
            sol_minus[0][kk] + l * (sol_plus[0][kk] + lam_n * sol_plus[1][kk]);
        let lhs1 =
            sol_minus[1][kk] + l * (lam_n * sol_plus[0][kk] + sol_plus[1][kk]);
        worst = worst.max((lhs0 - c0).norm()).max((lhs1 - c1).norm());
    }
    worst
}

/// Report attached to a synthesized field.
#[derive(Debug, Clone, Copy)]
pub struct SynthesisReport {
    pub wh_residual: f64,
}

/// Scattered field plus diagnostics; errors if the Wiener-Hopf residual
/// exceeds the configured tolerance.
pub fn synthesize_field(
    p: &Problem,
    sol: &Solution,
    window: Window,
) -> Result<(LatticeField, SynthesisReport)> {
    let engine = FieldEngine::new(p, sol)?;
    if engine.wh_residual > p.numerics.wh_residual_tol {
        return Err(Error::ResidualTooLarge(
            engine.wh_residual,
            p.numerics.wh_residual_tol,
        ));
    }
    let field = engine.field(window);
    Ok((
        field,
        SynthesisReport {
            wh_residual: engine.wh_residual,
        },
    ))
}

/// Aligned-geometry part and stagger-induced perturbation; their sum equals
/// the full scattered field.
#[derive(Debug, Clone)]
pub struct StaggerSplit {
    pub aligned: LatticeField,
    pub perturbation: LatticeField,
}

pub fn stagger_split(p: &Problem, sol: &Solution, window: Window) -> Result<StaggerSplit> {
    let u_t_m1n = match sol {
        Solution::Crack(_) => None,
        Solution::Constraint(_) => {
            // boundary value u^t_{-1,N} comes from the full synthesis
            let engine = FieldEngine::new(p, sol)?;
            let row_n = engine.row_transform(p.scenario.n_sep);
            let scat = p.grid.inverse_transform(&row_n, -1);
            Some(scat + incident_field(&p.scenario, &p.wave, -1, p.scenario.n_sep))
        }
    };
    let aligned = FieldEngine::build(p, sol, RhsSelect::Aligned, u_t_m1n)?.field(window);
    let perturbation =
        FieldEngine::build(p, sol, RhsSelect::Perturbation, u_t_m1n)?.field(window);
    Ok(StaggerSplit {
        aligned,
        perturbation,
    })
}

/// Cross-run flip verification.
///
/// Flipping the lattice vertically (about the bond midline for cracks, about
/// the defect rows' midpoint for constraints) and shifting by `M` maps the
/// `-M` geometry onto the `+M` geometry with amplitude
/// `A e^{-i kx M + i ky (N - 1)}` (crack) or `A e^{-i kx M + i ky N}`
/// (constraint) and reflected incidence. The solved upper-edge segment of the
/// `-M` run must therefore reproduce the total relative opening (crack, with
/// a sign) or the total adjacent-row sum (constraint) across the *lower*
/// defect of the mapped `+M` run at the mirrored abscissae. Both runs are
/// fully analytic, so the two sides agree to solver precision.
#[derive(Debug, Clone)]
pub struct FlipReport {
    pub max_deviation: f64,
    pub lhs: Vec<C64>,
    pub rhs: Vec<C64>,
}

pub fn flip_check(scenario: &ScatteringScenario, numerics: &Numerics) -> Result<FlipReport> {
    if scenario.m_offset == 0 {
        return Ok(FlipReport {
            max_deviation: 0.0,
            lhs: Vec::new(),
            rhs: Vec::new(),
        });
    }
    let m = scenario.m_offset;
    let n = scenario.n_sep;
    let wave = crate::scenario::solve_dispersion(scenario.omega, scenario.theta)?;
    // crack rows flip about y = (N-1)/2, constrained rows about y = N/2
    let (row_shift, sign) = match scenario.kind {
        DefectKind::CrackPair => (1i64, -1.0),
        DefectKind::ConstraintPair => (0i64, 1.0),
    };
    // left side: the run with the opposite stagger and original parameters
    let s_left = ScatteringScenario::new(
        scenario.omega,
        scenario.theta,
        scenario.amplitude,
        scenario.kind,
        scenario.n_sep,
        -m,
    )?;
    let p_left = Problem::new(s_left, numerics.clone())?;
    let sol_left = solve(&p_left)?;
    // right side: original stagger, mapped amplitude, reflected incidence
    let mapped = scenario.amplitude
        * (C64::i() * (-wave.kx * m as f64 + wave.ky * (n - row_shift) as f64)).exp();
    let s_right = ScatteringScenario::new(
        scenario.omega,
        -scenario.theta,
        mapped,
        scenario.kind,
        scenario.n_sep,
        m,
    )?;
    let p_right = Problem::new(s_right, numerics.clone())?;
    let sol_right = solve(&p_right)?;
    let engine = FieldEngine::new(&p_right, &sol_right)?;
    let row_0 = engine.row_transform(0);
    let row_up = engine.row_transform(1);
    let row_down = engine.row_transform(-1);
    let total = |row: &[C64], x: i64, y: i64| -> C64 {
        p_right.grid.inverse_transform(row, x)
            + incident_field(&p_right.scenario, &p_right.wave, x, y)
    };

    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    let mut worst = 0.0f64;
    for (i, &xh) in sol_left.segment_indices().iter().enumerate() {
        let l = sol_left.segment_values()[i];
        let xr = xh + m;
        let r = sign
            * match scenario.kind {
                DefectKind::CrackPair => total(&row_0, xr, 0) - total(&row_down, xr, -1),
                DefectKind::ConstraintPair => {
                    total(&row_up, xr, 1) + total(&row_down, xr, -1)
                }
            };
        worst = worst.max((l - r).norm());
        lhs.push(l);
        rhs.push(r);
    }
    Ok(FlipReport {
        max_deviation: worst,
        lhs,
        rhs,
    })
}

/// Max modulus of the bulk operator residual `lap u + omega^2 u` over
/// interior window sites not excluded by `skip` (defect rows/sites, whose
/// equations are intentionally different).
pub fn helmholtz_residual_max(
    field: &LatticeField,
    omega: C64,
    skip: impl Fn(i64, i64) -> bool,
) -> f64 {
    let om2 = omega * omega;
    let mut worst = 0.0f64;
    for y in field.y_lo + 1..field.y_hi {
        for x in field.x_lo + 1..field.x_hi {
            if skip(x, y) {
                continue;
            }
            let lap = field.get(x + 1, y) + field.get(x - 1, y) + field.get(x, y + 1)
                + field.get(x, y - 1)
                - 4.0 * field.get(x, y);
            worst = worst.max((lap + om2 * field.get(x, y)).norm());
        }
    }
    worst
}

/// Sites whose lattice equations are modified by the defects (crack faces or
/// constrained sites).
pub fn is_defect_site(s: &ScatteringScenario, x: i64, y: i64) -> bool {
    let n = s.n_sep;
    let m = s.m_offset;
    match s.kind {
        DefectKind::CrackPair => {
            ((y == 0 || y == -1) && x >= 0) || ((y == n || y == n - 1) && x >= m)
        }
        DefectKind::ConstraintPair => (y == 0 && x >= 0) || (y == n && x >= m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setup::Numerics;

    const THETA_25: f64 = 25.0 * std::f64::consts::PI / 180.0;

    fn desk(kind: DefectKind, m: i64) -> Problem {
        let s = ScatteringScenario::new(
            C64::new(0.9, 0.1),
            THETA_25,
            C64::new(1.0, 0.0),
            kind,
            5,
            m,
        )
        .unwrap();
        Problem::new(s, Numerics::default()).unwrap()
    }

    #[test]
    fn zero_amplitude_gives_zero_field() {
        let s = ScatteringScenario::new(
            C64::new(0.9, 0.1),
            THETA_25,
            C64::new(0.0, 0.0),
            DefectKind::CrackPair,
            5,
            2,
        )
        .unwrap();
        let p = Problem::new(s, Numerics::default()).unwrap();
        let sol = solve(&p).unwrap();
        let (field, rep) = synthesize_field(&p, &sol, Window::centered(4, 4)).unwrap();
        assert!(rep.wh_residual < 1e-12);
        assert!(field.max_abs() < 1e-12);
    }

    #[test]
    fn j_matrices_are_inverse_of_each_other() {
        let v = (C64::new(0.3, -1.2), C64::new(-0.7, 0.4));
        let (a, b) = j_apply(v.0, v.1);
        let (x, y) = j_inv_apply(a, b);
        assert!((x - v.0).norm() < 1e-15);
        assert!((y - v.1).norm() < 1e-15);
    }

    #[test]
    fn crack_rows_decay_by_lambda_and_recurrence_holds() {
        let p = desk(DefectKind::CrackPair, 3);
        let sol = solve(&p).unwrap();
        let engine = FieldEngine::new(&p, &sol).unwrap();
        assert!(engine.wh_residual < 1e-8, "wh residual {}", engine.wh_residual);
        let n = p.scenario.n_sep;
        let row_n = engine.row_transform(n);
        let row_n1 = engine.row_transform(n + 1);
        for kk in (0..p.grid.len()).step_by(53) {
            assert!((row_n1[kk] - row_n[kk] * p.bundle.lam[kk]).norm() < 1e-10);
        }
        // interior three-term recurrence Q u_y = u_{y+1} + u_{y-1}
        for y in 1..n - 1 {
            let a = engine.row_transform(y - 1);
            let b = engine.row_transform(y);
            let c = engine.row_transform(y + 1);
            for kk in (0..p.grid.len()).step_by(101) {
                let q = p.bundle.big_q[kk];
                assert!((q * b[kk] - a[kk] - c[kk]).norm() < 1e-8 * b[kk].norm().max(1.0));
            }
        }
    }

    #[test]
    fn constraint_rows_decay_below_zero() {
        let p = desk(DefectKind::ConstraintPair, 3);
        let sol = solve(&p).unwrap();
        let engine = FieldEngine::new(&p, &sol).unwrap();
        assert!(engine.wh_residual < 1e-8, "wh residual {}", engine.wh_residual);
        let r0 = engine.row_transform(0);
        let rm2 = engine.row_transform(-2);
        for kk in (0..p.grid.len()).step_by(67) {
            let lam2 = p.bundle.lam[kk] * p.bundle.lam[kk];
            assert!((rm2[kk] - r0[kk] * lam2).norm() < 1e-10 * r0[kk].norm().max(1.0));
        }
    }

    #[test]
    fn total_field_vanishes_on_constrained_sites() {
        let p = desk(DefectKind::ConstraintPair, 3);
        let sol = solve(&p).unwrap();
        let window = Window::centered(10, 10);
        let (scat, _) = synthesize_field(&p, &sol, window).unwrap();
        let inc = incident_lattice_field(&p.scenario, &p.wave, window);
        let total = scat.add(&inc, FieldKind::Total);
        let scale = total.max_abs();
        for (x, y, v) in total.iter() {
            if is_defect_site(&p.scenario, x, y) {
                assert!(
                    v.norm() < 1e-6 * scale,
                    "total at constrained ({x},{y}) = {}",
                    v.norm()
                );
            }
        }
        // scattered field obeys the bulk equation off the defect sites
        let res = helmholtz_residual_max(&scat, p.scenario.omega, |x, y| {
            is_defect_site(&p.scenario, x, y)
        });
        assert!(res < 1e-6 * scat.max_abs().max(1.0), "helmholtz residual {res}");
    }

    #[test]
    fn crack_jump_matches_solved_transform() {
        let p = desk(DefectKind::CrackPair, 2);
        let sol = solve(&p).unwrap();
        let engine = FieldEngine::new(&p, &sol).unwrap();
        let window = Window {
            x_lo: -6,
            x_hi: 8,
            y_lo: -3,
            y_hi: 8,
        };
        let field = engine.field(window);
        // v0^F restricted to x >= 0 is the jump across the lower crack
        let v0f: Vec<C64> = (0..p.grid.len())
            .map(|kk| engine.u0f[kk] - engine.u_low[kk])
            .collect();
        for x in 0..=8i64 {
            let jump = field.get(x, 0) - field.get(x, -1);
            let from_transform = p.grid.inverse_transform(&v0f, x);
            assert!(
                (jump - from_transform).norm() < 1e-6 * jump.norm().max(1e-3),
                "x = {x}"
            );
        }
        let res = helmholtz_residual_max(&field, p.scenario.omega, |x, y| {
            is_defect_site(&p.scenario, x, y)
        });
        assert!(res < 1e-6 * field.max_abs().max(1.0), "helmholtz residual {res}");
    }

    #[test]
    fn stagger_split_sums_to_full_field() {
        for kind in [DefectKind::CrackPair, DefectKind::ConstraintPair] {
            for m in [3i64, -2] {
                let p = desk(kind, m);
                let sol = solve(&p).unwrap();
                let window = Window::centered(8, 8);
                let (full, _) = synthesize_field(&p, &sol, window).unwrap();
                let split = stagger_split(&p, &sol, window).unwrap();
                let sum = split.aligned.add(&split.perturbation, FieldKind::Scattered);
                let scale = full.max_abs().max(1e-12);
                for (x, y, v) in full.iter() {
                    let d = (sum.get(x, y) - v).norm();
                    assert!(d < 1e-8 * scale, "split mismatch at ({x},{y}): {d:e}");
                }
            }
        }
    }

    #[test]
    fn zero_offset_has_no_perturbation() {
        for kind in [DefectKind::CrackPair, DefectKind::ConstraintPair] {
            let p = desk(kind, 0);
            let sol = solve(&p).unwrap();
            let window = Window::centered(6, 6);
            let split = stagger_split(&p, &sol, window).unwrap();
            let scale = split.aligned.max_abs().max(1e-12);
            assert!(split.perturbation.max_abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn contour_radius_does_not_matter() {
        let s = ScatteringScenario::new(
            C64::new(0.9, 0.1),
            THETA_25,
            C64::new(1.0, 0.0),
            DefectKind::CrackPair,
            5,
            3,
        )
        .unwrap();
        let p1 = Problem::new(s.clone(), Numerics::default()).unwrap();
        // a second admissible radius, skewed toward the outer bound
        let skew = p1.grid.radius() * 1.02;
        let mut num = Numerics::default();
        num.contour_radius = Some(skew);
        let p2 = Problem::new(s, num).unwrap();
        let sol1 = solve(&p1).unwrap();
        let sol2 = solve(&p2).unwrap();
        let window = Window::centered(5, 5);
        let (f1, _) = synthesize_field(&p1, &sol1, window).unwrap();
        let (f2, _) = synthesize_field(&p2, &sol2, window).unwrap();
        let scale = f1.max_abs().max(1e-12);
        for (x, y, v) in f1.iter() {
            assert!((f2.get(x, y) - v).norm() < 1e-8 * scale, "({x},{y})");
        }
    }
}

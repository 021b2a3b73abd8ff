//! Lattice symbol functions on the transform plane.
//!
//! With `H(z) = 2 - z - 1/z - omega^2` the discrete Helmholtz equation turns,
//! row by row, into the three-term recurrence `Q u_y^F = u_{y+1}^F + u_{y-1}^F`
//! with `Q = H + 2`. Its bounded characteristic root is
//!
//! ```text
//! lambda = (r - h) / (r + h),   h = sqrt(H),   r = sqrt(R),   R = H + 4,
//! ```
//!
//! with the branch fixed by `Re h > 0`, `Re r > 0` and matching signs of the
//! imaginary parts, which guarantees `|lambda| <= 1` off the branch cuts. The
//! scalar kernels are `L_k = h/r` (crack) and `L_c = Q/(r h)` (constraint);
//! the diagonal entries of the 2x2 kernel are `alpha = L (1 - lambda^N)` and
//! `beta = L (1 + lambda^N)`.

use crate::contour::ContourGrid;
use crate::scenario::DefectKind;
use crate::{C64, Error, Result};

/// Lattice symbols at one point: `H`, `R = H + 4`, `Q = H + 2`.
pub fn eval_hrq(z: C64, omega: C64) -> Result<(C64, C64, C64)> {
    if z.norm() == 0.0 {
        return Err(Error::ZeroArgument);
    }
    let h = 2.0 - z - 1.0 / z - omega * omega;
    Ok((h, h + 4.0, h + 2.0))
}

/// Branch-consistent square roots `h = sqrt(H)`, `r = sqrt(R)`.
///
/// Principal roots already satisfy the sign conditions away from the cut set
/// (both `Im H` and `Im R` share the sign of `Im H`); a violation means the
/// evaluation point touches a cut.
pub fn branch_sqrt(z: C64, omega: C64) -> Result<(C64, C64)> {
    let (big_h, big_r, _) = eval_hrq(z, omega)?;
    if big_h.im == 0.0 && big_h.re <= 0.0 {
        return Err(Error::OnBranchCut(z));
    }
    let h = big_h.sqrt();
    let r = big_r.sqrt();
    let ok = h.re > 0.0 && r.re > 0.0 && sign(h.im) * sign(r.im) >= 0.0;
    if !ok {
        return Err(Error::OnBranchCut(z));
    }
    Ok((h, r))
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Bounded root of `lambda + 1/lambda = Q(z)`.
pub fn lambda(z: C64, omega: C64) -> Result<C64> {
    let (h, r) = branch_sqrt(z, omega)?;
    Ok((r - h) / (r + h))
}

/// Interior zeros of `H`, `R`, `Q`: the roots of `z + 1/z = 2 - omega^2`,
/// `6 - omega^2`, `4 - omega^2` with modulus below one.
#[derive(Debug, Clone, Copy)]
pub struct DistinguishedZeros {
    pub z_h: C64,
    pub z_r: C64,
    pub z_q: C64,
}

/// Root of `z^2 - c z + 1` with `|z| < 1`.
///
/// The roots pair up as `z, 1/z` (their product is 1), so the interior one is
/// computed as the reciprocal of the larger root, which avoids cancellation.
pub fn interior_root(c: C64) -> Result<C64> {
    let half = c / 2.0;
    let disc = (half * half - 1.0).sqrt();
    let r1 = half + disc;
    let r2 = half - disc;
    let larger = if r1.norm() >= r2.norm() { r1 } else { r2 };
    let z = 1.0 / larger;
    if (z.norm() - 1.0).abs() < 1e-9 {
        return Err(Error::UnitModulusRoot);
    }
    Ok(z)
}

pub fn distinguished_zeros(omega: C64) -> Result<DistinguishedZeros> {
    let om2 = omega * omega;
    Ok(DistinguishedZeros {
        z_h: interior_root(2.0 - om2)?,
        z_r: interior_root(6.0 - om2)?,
        z_q: interior_root(4.0 - om2)?,
    })
}

/// Scalar Wiener-Hopf kernels `(L_k, L_c) = (h/r, Q/(r h))`.
pub fn scalar_kernels(z: C64, omega: C64) -> Result<(C64, C64)> {
    let (h, r) = branch_sqrt(z, omega)?;
    let (_, _, q) = eval_hrq(z, omega)?;
    if r.norm() == 0.0 {
        return Err(Error::DivisionByZero("R"));
    }
    if h.norm() == 0.0 {
        return Err(Error::DivisionByZero("H"));
    }
    Ok((h / r, q / (r * h)))
}

/// Diagonal kernel entries `alpha = L (1 - lambda^N)`, `beta = L (1 + lambda^N)`
/// with `L` chosen by the defect kind.
pub fn alpha_beta(z: C64, omega: C64, n: i64, kind: DefectKind) -> Result<(C64, C64)> {
    let (lk, lc) = scalar_kernels(z, omega)?;
    let lam = lambda(z, omega)?;
    let l = match kind {
        DefectKind::CrackPair => lk,
        DefectKind::ConstraintPair => lc,
    };
    let ln = lam.powi(n as i32);
    Ok((l * (1.0 - ln), l * (1.0 + ln)))
}

/// Symbol evaluations on a whole contour, plus the distinguished zeros.
#[derive(Debug, Clone)]
pub struct KernelBundle {
    pub omega: C64,
    pub zeros: DistinguishedZeros,
    /// `max(|z_h|, |z_r|)`: inner radius of the annulus on which `lambda` is
    /// analytic.
    pub r_l: f64,
    pub big_h: Vec<C64>,
    pub big_r: Vec<C64>,
    pub big_q: Vec<C64>,
    pub h: Vec<C64>,
    pub r: Vec<C64>,
    pub lam: Vec<C64>,
}

impl KernelBundle {
    pub fn build(grid: &ContourGrid, omega: C64) -> Result<Self> {
        let zeros = distinguished_zeros(omega)?;
        let r_l = zeros.z_h.norm().max(zeros.z_r.norm());
        let k = grid.len();
        let mut big_h = Vec::with_capacity(k);
        let mut big_r = Vec::with_capacity(k);
        let mut big_q = Vec::with_capacity(k);
        let mut h = Vec::with_capacity(k);
        let mut r = Vec::with_capacity(k);
        let mut lam = Vec::with_capacity(k);
        for &z in grid.nodes() {
            let (bh, br, bq) = eval_hrq(z, omega)?;
            let (hz, rz) = branch_sqrt(z, omega)?;
            big_h.push(bh);
            big_r.push(br);
            big_q.push(bq);
            h.push(hz);
            r.push(rz);
            lam.push((rz - hz) / (rz + hz));
        }
        Ok(Self {
            omega,
            zeros,
            r_l,
            big_h,
            big_r,
            big_q,
            h,
            r,
            lam,
        })
    }

    /// Kernel values `(L_k, L_c)` at node `k`.
    pub fn kernels_at(&self, k: usize) -> (C64, C64) {
        (
            self.h[k] / self.r[k],
            self.big_q[k] / (self.r[k] * self.h[k]),
        )
    }

    /// `alpha`, `beta` node arrays for the given defect kind and separation.
    pub fn alpha_beta_nodes(&self, n: i64, kind: DefectKind) -> (Vec<C64>, Vec<C64>) {
        let mut a = Vec::with_capacity(self.lam.len());
        let mut b = Vec::with_capacity(self.lam.len());
        for k in 0..self.lam.len() {
            let (lk, lc) = self.kernels_at(k);
            let l = match kind {
                DefectKind::CrackPair => lk,
                DefectKind::ConstraintPair => lc,
            };
            let ln = self.lam[k].powi(n as i32);
            a.push(l * (1.0 - ln));
            b.push(l * (1.0 + ln));
        }
        (a, b)
    }
}

//! Direct numerical solution on a truncated grid, used as independent ground
//! truth for the reduced solvers.
//!
//! The scattered field is solved on the window `[-Ng, Ng]^2` with the exact
//! lattice equations: bulk sites carry the five-point operator, crack faces
//! drop the broken vertical bond and pick up the incident jump as forcing,
//! and constrained sites are pinned to `-u^inc`. Outside the window the
//! scattered field is taken as zero, which the frequency damping justifies;
//! the self-convergence of the traces between `Ng` and `Ng + 20` measures
//! the leftover truncation error rather than assuming it away.

use crate::field::{FieldKind, LatticeField, Window};
use crate::linalg::{bicgstab, KrylovStats};
use crate::scenario::{incident_field, DefectKind, ScatteringScenario, WaveVector};
use crate::{C64, Error, Result};

#[derive(Debug, Clone)]
pub struct GridSolution {
    /// Scattered field on the window.
    pub field: LatticeField,
    pub ng: i64,
    pub stats: KrylovStats,
}

/// Whether the vertical bond from `(x, y)` to `(x, y + 1)` is broken.
fn up_broken(s: &ScatteringScenario, x: i64, y: i64) -> bool {
    s.kind == DefectKind::CrackPair
        && ((y == -1 && x >= 0) || (y == s.n_sep - 1 && x >= s.m_offset))
}

fn down_broken(s: &ScatteringScenario, x: i64, y: i64) -> bool {
    s.kind == DefectKind::CrackPair
        && ((y == 0 && x >= 0) || (y == s.n_sep && x >= s.m_offset))
}

fn pinned(s: &ScatteringScenario, x: i64, y: i64) -> bool {
    s.kind == DefectKind::ConstraintPair
        && ((y == 0 && x >= 0) || (y == s.n_sep && x >= s.m_offset))
}

/// Assembles and solves the truncated sparse system.
pub fn solve_grid(s: &ScatteringScenario, w: &WaveVector, ng: i64) -> Result<GridSolution> {
    if ng < 4 || ng < s.n_sep + 3 || ng < s.m_offset.abs() + 3 {
        return Err(Error::WindowTooSmall(format!(
            "Ng = {ng} cannot hold the defect geometry"
        )));
    }
    let n1 = (2 * ng + 1) as usize;
    let ntot = n1 * n1;
    let idx = |x: i64, y: i64| -> usize { ((y + ng) as usize) * n1 + (x + ng) as usize };
    let om2 = s.omega * s.omega;

    // Pinned sites hold known values and are eliminated from the iteration
    // outright: their values move into the neighbours' right-hand sides.
    // Leaving them in as identity rows would put the whole initial residual
    // in a subspace the Krylov iterates immediately leave, which makes the
    // shadow-vector recursion of BiCGSTAB break down exactly.
    let mut pinned_mask = vec![false; ntot];
    let mut pinned_val = vec![C64::new(0.0, 0.0); ntot];
    let mut up_mask = vec![false; ntot];
    let mut down_mask = vec![false; ntot];
    let mut rhs = vec![C64::new(0.0, 0.0); ntot];
    let mut diag = vec![C64::new(1.0, 0.0); ntot];
    for y in -ng..=ng {
        for x in -ng..=ng {
            let i = idx(x, y);
            if pinned(s, x, y) {
                pinned_mask[i] = true;
                pinned_val[i] = -incident_field(s, w, x, y);
            }
        }
    }
    for y in -ng..=ng {
        for x in -ng..=ng {
            let i = idx(x, y);
            if pinned_mask[i] {
                continue;
            }
            let ub = up_broken(s, x, y);
            let db = down_broken(s, x, y);
            up_mask[i] = ub;
            down_mask[i] = db;
            let broken = ub as i64 + db as i64;
            diag[i] = om2 - C64::new((4 - broken) as f64, 0.0);
            let mut f = C64::new(0.0, 0.0);
            if ub {
                f += incident_field(s, w, x, y + 1) - incident_field(s, w, x, y);
            }
            if db {
                f += incident_field(s, w, x, y - 1) - incident_field(s, w, x, y);
            }
            // move known neighbour values to the right-hand side
            let mut absorb = |xx: i64, yy: i64| {
                if xx >= -ng && xx <= ng && yy >= -ng && yy <= ng {
                    let j = idx(xx, yy);
                    if pinned_mask[j] {
                        f -= pinned_val[j];
                    }
                }
            };
            absorb(x - 1, y);
            absorb(x + 1, y);
            if !ub {
                absorb(x, y + 1);
            }
            if !db {
                absorb(x, y - 1);
            }
            rhs[i] = f;
        }
    }

    let matvec = |v: &[C64], out: &mut [C64]| {
        for y in -ng..=ng {
            for x in -ng..=ng {
                let i = idx(x, y);
                if pinned_mask[i] {
                    out[i] = v[i];
                    continue;
                }
                let mut acc = diag[i] * v[i];
                if x > -ng {
                    let j = idx(x - 1, y);
                    if !pinned_mask[j] {
                        acc += v[j];
                    }
                }
                if x < ng {
                    let j = idx(x + 1, y);
                    if !pinned_mask[j] {
                        acc += v[j];
                    }
                }
                if y < ng && !up_mask[i] {
                    let j = idx(x, y + 1);
                    if !pinned_mask[j] {
                        acc += v[j];
                    }
                }
                if y > -ng && !down_mask[i] {
                    let j = idx(x, y - 1);
                    if !pinned_mask[j] {
                        acc += v[j];
                    }
                }
                out[i] = acc;
            }
        }
    };

    let (sol, stats) = bicgstab(matvec, &diag, &rhs, 1e-11, 60_000)?;
    if stats.relative_residual > 1e-8 {
        return Err(Error::IterationDivergence(
            stats.relative_residual,
            stats.iterations,
        ));
    }
    let mut field = LatticeField::zeros(
        Window {
            x_lo: -ng,
            x_hi: ng,
            y_lo: -ng,
            y_hi: ng,
        },
        FieldKind::Scattered,
    );
    for y in -ng..=ng {
        for x in -ng..=ng {
            let i = idx(x, y);
            field.set(x, y, if pinned_mask[i] { pinned_val[i] } else { sol[i] });
        }
    }
    Ok(GridSolution { field, ng, stats })
}

/// Segment values and boundary scalars read from a (scattered) grid field.
#[derive(Debug, Clone)]
pub struct Traces {
    pub indices: Vec<i64>,
    /// `v^t` (crack) or `w^t` (constraint) on the segment.
    pub segment: Vec<C64>,
    /// `u^t_{-1,0}` (constraint only; zero otherwise).
    pub u_m10: C64,
    /// `u^t_{M-1,N}` (constraint only; zero otherwise).
    pub u_mm1n: C64,
}

pub fn extract_traces(
    gs: &GridSolution,
    s: &ScatteringScenario,
    w: &WaveVector,
) -> Result<Traces> {
    let total = |x: i64, y: i64| -> Result<C64> {
        if !gs.field.contains(x, y) {
            return Err(Error::WindowTooSmall(format!(
                "site ({x},{y}) outside the grid window"
            )));
        }
        Ok(gs.field.get(x, y) + incident_field(s, w, x, y))
    };
    let indices = s.segment_indices();
    let n = s.n_sep;
    let mut segment = Vec::with_capacity(indices.len());
    for &x in &indices {
        let v = match s.kind {
            DefectKind::CrackPair => total(x, n)? - total(x, n - 1)?,
            DefectKind::ConstraintPair => total(x, n + 1)? + total(x, n - 1)?,
        };
        segment.push(v);
    }
    let (u_m10, u_mm1n) = match s.kind {
        DefectKind::CrackPair => (C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
        DefectKind::ConstraintPair => (total(-1, 0)?, total(s.m_offset - 1, n)?),
    };
    Ok(Traces {
        indices,
        segment,
        u_m10,
        u_mm1n,
    })
}

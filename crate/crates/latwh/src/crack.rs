//! Reduced linear system for the crack pair.
//!
//! The unknowns are the total relative openings `v^t_{x,N}` of the vertical
//! bonds on the stagger segment (the bonds that distinguish the staggered
//! geometry from the aligned one). For `M = 0` the segment is empty and the
//! aligned solution needs no correction at all.

use crate::linalg::{solve_dense, DenseMatrix, DenseSolve};
use crate::reduce;
use crate::scenario::{DefectKind, ScatteringScenario, WaveVector};
use crate::setup::Problem;
use crate::{C64, Error, Result};

/// Incident relative-opening transforms: `v_0^inc+ (z) = A (1 - e^{-i ky})
/// delta_D^+(z/z_P)` and `v_N^inc+ = e^{i ky N} v_0^inc+`.
#[derive(Debug, Clone, Copy)]
pub struct IncidentJump {
    /// `A (1 - e^{-i ky})`.
    pub amp: C64,
    /// `e^{i ky N}`.
    pub phase_n: C64,
    pub z_p: C64,
}

impl IncidentJump {
    pub fn v0(&self, z: C64) -> C64 {
        self.amp * reduce::pole_factor(z, self.z_p)
    }

    pub fn vn(&self, z: C64) -> C64 {
        self.phase_n * self.v0(z)
    }

    /// Incident opening at a lattice site of the upper crack row.
    pub fn vn_at(&self, x: i64) -> C64 {
        self.amp * self.phase_n * self.z_p.powi(x as i32)
    }
}

pub fn incident_jump_plus(s: &ScatteringScenario, w: &WaveVector) -> IncidentJump {
    let amp = s.amplitude * (1.0 - (-C64::i() * w.ky).exp());
    IncidentJump {
        amp,
        phase_n: (C64::i() * w.ky * s.n_sep as f64).exp(),
        z_p: w.z_p,
    }
}

/// Solved segment unknowns with solve diagnostics.
#[derive(Debug, Clone)]
pub struct ReducedSolution {
    /// Segment sites, ascending.
    pub indices: Vec<i64>,
    /// `v^t_{x,N}` per site.
    pub unknowns: Vec<C64>,
    pub matrix: DenseMatrix,
    pub rhs: Vec<C64>,
    /// `max |A chi - b|`.
    pub residual: f64,
    pub condition: f64,
}

impl ReducedSolution {
    pub fn empty() -> Self {
        Self {
            indices: Vec::new(),
            unknowns: Vec::new(),
            matrix: DenseMatrix::zeros(0),
            rhs: Vec::new(),
            residual: 0.0,
            condition: 1.0,
        }
    }

    pub fn unknown_at(&self, x: i64) -> Option<C64> {
        self.indices
            .iter()
            .position(|&i| i == x)
            .map(|p| self.unknowns[p])
    }
}

/// Assembles and solves the `|M| x |M|` system for the crack pair.
pub fn solve_crack(p: &Problem) -> Result<ReducedSolution> {
    if p.scenario.kind != DefectKind::CrackPair {
        return Err(Error::InvalidScenario(
            "solve_crack called on a constraint scenario".into(),
        ));
    }
    let m = p.scenario.m_offset;
    if m == 0 {
        return Ok(ReducedSolution::empty());
    }
    let suite = &p.suite;
    let basis = reduce::segment_basis(suite, m)?;
    let jump = incident_jump_plus(&p.scenario, &p.wave);

    let dim = basis.xs.len();
    let mut matrix = DenseMatrix::zeros(dim);
    let rhs;
    if m > 0 {
        let channels = reduce::channels_mpos(suite);
        let inc =
            reduce::IncFactors::new(suite, p.wave.z_p, p.phase_ky_n(), jump.vn_at(0), 1.0);
        for (j, (fa, fb)) in basis.a_fin.iter().zip(&basis.b_fin).enumerate() {
            let col = reduce::column_nodes(&p.grid, &channels, fa, fb);
            let coeffs = reduce::window_coeffs(&p.grid, &col, &basis.xs);
            for (i, c) in coeffs.into_iter().enumerate() {
                matrix.set(i, j, c);
            }
        }
        let rhs_nodes = reduce::f_inc_nodes(&p.grid, &channels, &inc);
        rhs = reduce::window_coeffs(&p.grid, &rhs_nodes, &basis.xs);
    } else {
        // window coefficients about the origin: exact finite convolutions
        let inc =
            reduce::IncFactors::new(suite, p.wave.z_p, p.phase_ky_n(), jump.vn_at(0), -1.0);
        for (j, (fa, fb)) in basis.a_fin.iter().zip(&basis.b_fin).enumerate() {
            let ca = reduce::conv_window(fa, &suite.alpha.minus, &basis.xs);
            let cb = reduce::conv_window(fb, &suite.beta.minus, &basis.xs);
            for (i, (a, b)) in ca.into_iter().zip(cb).enumerate() {
                matrix.set(i, j, a + b);
            }
        }
        rhs = inc.window_coeffs_inner(&suite.alpha.minus, &suite.beta.minus, &basis.xs);
    }

    let DenseSolve {
        x,
        residual,
        condition,
    } = solve_dense(&matrix, &rhs)?;
    Ok(ReducedSolution {
        indices: basis.xs,
        unknowns: x,
        matrix,
        rhs,
        residual,
        condition,
    })
}

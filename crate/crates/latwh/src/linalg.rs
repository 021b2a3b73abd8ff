//! Small dense complex solves and a Krylov iteration for the grid oracle.

use crate::{C64, Error, Result};

/// Dense row-major complex matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    pub n: usize,
    pub a: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            a: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.a[i * self.n + j] = v;
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        for i in 0..self.n {
            let row = &self.a[i * self.n..(i + 1) * self.n];
            let mut acc = C64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    fn norm_1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.at(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Solution of a dense system with diagnostics.
#[derive(Debug, Clone)]
pub struct DenseSolve {
    pub x: Vec<C64>,
    /// `max_i |(A x - b)_i|`.
    pub residual: f64,
    /// 1-norm condition estimate from the explicit inverse.
    pub condition: f64,
}

/// LU with partial pivoting; sizes here are tens at most, so the inverse is
/// formed outright for the condition estimate.
pub fn solve_dense(a: &DenseMatrix, b: &[C64]) -> Result<DenseSolve> {
    let n = a.n;
    assert_eq!(b.len(), n);
    if n == 0 {
        return Ok(DenseSolve {
            x: Vec::new(),
            residual: 0.0,
            condition: 1.0,
        });
    }
    let mut lu = a.a.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (mut best, mut best_val) = (col, lu[col * n + col].norm());
        for row in col + 1..n {
            let v = lu[row * n + col].norm();
            if v > best_val {
                best = row;
                best_val = v;
            }
        }
        if best_val == 0.0 {
            return Err(Error::SingularSystem(f64::INFINITY));
        }
        if best != col {
            for j in 0..n {
                lu.swap(col * n + j, best * n + j);
            }
            piv.swap(col, best);
        }
        let pivot = lu[col * n + col];
        for row in col + 1..n {
            let factor = lu[row * n + col] / pivot;
            lu[row * n + col] = factor;
            for j in col + 1..n {
                let upper = lu[col * n + j];
                lu[row * n + j] -= factor * upper;
            }
        }
    }

    let apply = |rhs: &[C64]| -> Vec<C64> {
        let mut y: Vec<C64> = piv.iter().map(|&p| rhs[p]).collect();
        for i in 1..n {
            for j in 0..i {
                let l = lu[i * n + j];
                let yj = y[j];
                y[i] -= l * yj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = lu[i * n + j];
                let yj = y[j];
                y[i] -= u * yj;
            }
            y[i] /= lu[i * n + i];
        }
        y
    };

    let x = apply(b);
    let ax = a.matvec(&x);
    let residual = ax
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max);

    // column-by-column inverse for the 1-norm condition estimate
    let mut inv_norm_1 = 0.0f64;
    let mut e = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = C64::new(1.0, 0.0);
        let col = apply(&e);
        e[j] = C64::new(0.0, 0.0);
        inv_norm_1 = inv_norm_1.max(col.iter().map(|v| v.norm()).sum());
    }
    let condition = a.norm_1() * inv_norm_1;
    if !condition.is_finite() || condition > 1e12 {
        return Err(Error::SingularSystem(condition));
    }
    Ok(DenseSolve {
        x,
        residual,
        condition,
    })
}

/// Outcome of the preconditioned BiCGSTAB iteration.
#[derive(Debug, Clone, Copy)]
pub struct KrylovStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned BiCGSTAB for a matrix given as a mat-vec closure.
/// Deterministic: the shadow vector is the initial residual.
pub fn bicgstab(
    matvec: impl Fn(&[C64], &mut [C64]),
    diag: &[C64],
    b: &[C64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<C64>, KrylovStats)> {
    let n = b.len();
    let inv_diag: Vec<C64> = diag
        .iter()
        .map(|d| {
            if d.norm() > 0.0 {
                1.0 / d
            } else {
                C64::new(1.0, 0.0)
            }
        })
        .collect();
    let precond = |v: &[C64]| -> Vec<C64> {
        v.iter().zip(&inv_diag).map(|(a, d)| a * d).collect()
    };
    let norm = |v: &[C64]| -> f64 { v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt() };
    let dot = |a: &[C64], b: &[C64]| -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    };

    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((
            vec![C64::new(0.0, 0.0); n],
            KrylovStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let mut rho = C64::new(1.0, 0.0);
    let mut alpha = C64::new(1.0, 0.0);
    let mut omega = C64::new(1.0, 0.0);
    let mut v = vec![C64::new(0.0, 0.0); n];
    let mut p = vec![C64::new(0.0, 0.0); n];
    let mut best = f64::INFINITY;
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.norm() < 1e-300 {
            return Err(Error::IterationDivergence(norm(&r) / b_norm, it));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = precond(&p);
        matvec(&p_hat, &mut v);
        let denom = dot(&r_hat, &v);
        if denom.norm() < 1e-300 {
            return Err(Error::IterationDivergence(norm(&r) / b_norm, it));
        }
        alpha = rho / denom;
        let s: Vec<C64> = (0..n).map(|i| r[i] - alpha * v[i]).collect();
        if norm(&s) / b_norm < rel_tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return Ok((
                x,
                KrylovStats {
                    iterations: it,
                    relative_residual: norm(&s) / b_norm,
                },
            ));
        }
        let s_hat = precond(&s);
        let mut t = vec![C64::new(0.0, 0.0); n];
        matvec(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt.norm() < 1e-300 {
            return Err(Error::IterationDivergence(norm(&s) / b_norm, it));
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        let rel = norm(&r) / b_norm;
        best = best.min(rel);
        if rel < rel_tol {
            return Ok((
                x,
                KrylovStats {
                    iterations: it,
                    relative_residual: rel,
                },
            ));
        }
    }
    Err(Error::IterationDivergence(best, max_iter))
}

//! Smallest eigenvalue of `2L - diag(w)` on the Dirichlet box.
//!
//! `Q(f) = 2 <f, Lf>`, so `Q(f) >= Σ w f²` for all `f` supported in the box
//! exactly when `2L - diag(w)` is positive semidefinite there.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::{CoefficientField, DirichletOperator, LatticeFunction};

/// Tunables of the restarted Lanczos iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LanczosOptions {
    /// Krylov dimension before a restart.
    pub krylov: usize,
    pub max_restarts: usize,
    /// Target for `‖H y - θ y‖` relative to `‖H‖_∞`.
    pub residual_tol: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { krylov: 120, max_restarts: 60, residual_tol: 1e-11 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardyCertificate {
    /// Ritz value, an upper bound for the smallest eigenvalue.
    pub min_eigenvalue: f64,
    /// Collatz-Wielandt lower bound `min_i (H|y|)_i / |y|_i`.
    pub lower_bound: f64,
    /// `‖H y - θ y‖` for the returned Ritz pair.
    pub residual: f64,
    pub iterations: usize,
    pub tol: f64,
    pub certified: bool,
}

struct ShiftedOperator<'a> {
    op: &'a DirichletOperator,
    w: &'a [f64],
}

impl ShiftedOperator<'_> {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.op.apply(x, out);
        for i in 0..x.len() {
            out[i] = 2.0 * out[i] - self.w[i] * x[i];
        }
    }

    fn norm_bound(&self) -> f64 {
        (0..self.op.len())
            .map(|i| {
                let off: f64 = self.op.neighbors(i).filter(|(m, _)| m.is_some()).map(|(_, b)| b).sum();
                (2.0 * self.op.diagonal()[i] - self.w[i]).abs() + 2.0 * off
            })
            .fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    n
}

/// Smallest eigenvalue of `2L - diag(w)` and the certificate `λ_min >= -tol`.
pub fn certify_hardy(field: &CoefficientField, w: &LatticeFunction, tol: f64) -> Result<HardyCertificate> {
    certify_hardy_with(field, w, tol, LanczosOptions::default())
}

pub fn certify_hardy_with(
    field: &CoefficientField,
    w: &LatticeFunction,
    tol: f64,
    opts: LanczosOptions,
) -> Result<HardyCertificate> {
    field.domain().ensure_same(w.domain())?;
    if w.values().iter().any(|&v| !(v >= 0.0)) {
        return Err(invalid("w", "weight must be nonnegative"));
    }
    let op = field.operator();
    let h = ShiftedOperator { op: &op, w: w.values() };
    let n = op.len();
    let scale = h.norm_bound();
    let target = opts.residual_tol * scale;
    let m = opts.krylov.min(n).max(2);

    let mut start = vec![1.0; n];
    normalize(&mut start);
    let mut iterations = 0;
    let mut best = (f64::INFINITY, f64::INFINITY, start.clone());
    let mut hv = vec![0.0; n];

    for _ in 0..=opts.max_restarts {
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alphas = Vec::with_capacity(m);
        let mut betas: Vec<f64> = Vec::with_capacity(m);
        for k in 0..m {
            h.apply(&basis[k], &mut hv);
            iterations += 1;
            let a = dot(&basis[k], &hv);
            alphas.push(a);
            let mut r = hv.clone();
            // Two passes of classical Gram-Schmidt against the whole basis.
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(v, &r);
                    r.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = dot(&r, &r).sqrt();
            if k + 1 == m || b <= 1e-14 * scale {
                break;
            }
            betas.push(b);
            r.iter_mut().for_each(|x| *x /= b);
            basis.push(r);
        }
        let k = alphas.len();
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (imin, _) =
            eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty tridiagonal");
        let s = eig.eigenvectors.column(imin);
        let mut y = vec![0.0; n];
        for (v, &c) in basis.iter().zip(s.iter()) {
            y.iter_mut().zip(v).for_each(|(a, b)| *a += c * b);
        }
        normalize(&mut y);
        h.apply(&y, &mut hv);
        let theta = dot(&y, &hv);
        let res = hv.iter().zip(&y).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
        if theta < best.0 || res < best.1 {
            best = (theta, res, y.clone());
        }
        if res <= target {
            return Ok(finish(&h, theta, res, &y, iterations, tol));
        }
        start = y;
    }
    let (theta, res, y) = best;
    let cert = finish(&h, theta, res, &y, iterations, tol);
    Err(Error::EigenNotConverged { iterations, lower: cert.lower_bound.max(theta - res), upper: theta })
}

fn finish(
    h: &ShiftedOperator<'_>,
    theta: f64,
    residual: f64,
    y: &[f64],
    iterations: usize,
    tol: f64,
) -> HardyCertificate {
    let abs: Vec<f64> = y.iter().map(|v| v.abs()).collect();
    let mut hy = vec![0.0; abs.len()];
    h.apply(&abs, &mut hy);
    let lower_bound = if abs.iter().all(|&v| v > 0.0) {
        hy.iter().zip(&abs).map(|(a, b)| a / b).fold(f64::INFINITY, f64::min)
    } else {
        f64::NEG_INFINITY
    };
    HardyCertificate { min_eigenvalue: theta, lower_bound, residual, iterations, tol, certified: theta >= -tol }
}

/// All eigenvalues of the dense `2L - diag(w)`, ascending; oracle for small boxes.
pub fn dense_spectrum(field: &CoefficientField, w: &LatticeFunction) -> Result<Vec<f64>> {
    field.domain().ensure_same(w.domain())?;
    let n = field.domain().len();
    if n > 3000 {
        return Err(Error::TooLarge { sites: n, cap: 3000 });
    }
    let op = field.operator();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 2.0 * op.diagonal()[i] - w.values()[i];
        for (j, b) in op.neighbors(i) {
            if let Some(j) = j {
                m[(i, j)] = -2.0 * b;
            }
        }
    }
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

//! Jacobi-preconditioned conjugate gradient for the Dirichlet operator.

use crate::error::{Error, Result};
use crate::lattice::DirichletOperator;

#[derive(Debug, Clone, Copy)]
pub struct CgOutcome {
    pub iterations: usize,
    /// `||b - L x|| / ||b||`, recomputed from scratch after the last step.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `L x = b` in place, starting from the contents of `x`.
pub fn solve(op: &DirichletOperator, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = op.len();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(CgOutcome { iterations: 0, residual: 0.0 });
    }
    let inv_diag: Vec<f64> = op.diagonal().iter().map(|d| 1.0 / d).collect();

    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut iterations = 0;

    while iterations < max_iter {
        if dot(&r, &r).sqrt() <= tol * bnorm {
            break;
        }
        op.apply(&p, &mut q);
        let alpha = rz / dot(&p, &q);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        iterations += 1;
    }

    op.apply(x, &mut q);
    let true_res = q.iter().zip(b).map(|(lx, bi)| (bi - lx).powi(2)).sum::<f64>().sqrt() / bnorm;
    if true_res <= tol {
        Ok(CgOutcome { iterations, residual: true_res })
    } else {
        Err(Error::NotConverged { iterations, residual: true_res, tol })
    }
}

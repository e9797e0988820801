//! Cyclic Jacobi eigenvalue iteration for dense symmetric matrices.

use crate::dense::Matrix;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_SWEEPS: usize = 60;

/// Off-diagonal Frobenius norm.
fn off_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        let row = a.row(i);
        for (j, v) in row.iter().enumerate() {
            if j != i {
                s += v * v;
            }
        }
    }
    s.sqrt()
}

/// Eigenvalues of a symmetric matrix, ascending.
///
/// Sweeps rotate every off-diagonal pair in row-cyclic order until the
/// off-diagonal norm drops below `rel_tol * ||A||_F`.
pub fn symmetric_eigenvalues(a: &Matrix, rel_tol: f64, max_sweeps: usize) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            actual: a.cols(),
        });
    }
    let n = a.rows();
    let mut m = a.clone();
    m.symmetrize();
    let target = rel_tol * m.frobenius_norm();
    let mut off = off_norm(&m);
    let mut sweeps = 0;
    while off > target {
        if sweeps == max_sweeps {
            return Err(Error::EigenNoConvergence { sweeps, off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, p, q);
            }
        }
        off = off_norm(&m);
    }
    let mut ev = m.diagonal();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Annihilates `m[p][q]` by a Jacobi rotation.
#[inline]
fn rotate(m: &mut Matrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = m[(p, p)];
    let aqq = m[(q, q)];
    // Negligible relative to both diagonal entries: drop it.
    if apq.abs() < 1e-3 * f64::EPSILON * (app.abs().min(aqq.abs())) {
        m[(p, q)] = 0.0;
        m[(q, p)] = 0.0;
        return;
    }
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;
    let tau = s / (1.0 + c);
    let n = m.rows();
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m[(p, k)];
        let akq = m[(q, k)];
        let new_p = akp - s * (akq + tau * akp);
        let new_q = akq + s * (akp - tau * akq);
        m[(p, k)] = new_p;
        m[(k, p)] = new_p;
        m[(q, k)] = new_q;
        m[(k, q)] = new_q;
    }
    m[(p, p)] = app - t * apq;
    m[(q, q)] = aqq + t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
}

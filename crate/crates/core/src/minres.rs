//! Preconditioned MINRES for symmetric, possibly indefinite, operators.
//!
//! Lanczos in the inner product induced by a symmetric positive definite
//! preconditioner `P`, with the tridiagonal least-squares problem updated by
//! Givens rotations (Paige & Saunders). The monitored quantity is the
//! `P^{-1}`-norm of the residual, which is nonincreasing by construction.

use std::time::Instant;

use crate::assembly::SaddleSystem;
use crate::dense::{axpy, dot};
use crate::error::{Error, Result};

/// A square linear map applied without forming its matrix.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        y
    }
}

impl LinearOperator for SaddleSystem {
    fn dim(&self) -> usize {
        SaddleSystem::dim(self)
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        SaddleSystem::apply_into(self, x, y)
    }
}

impl LinearOperator for crate::dense::Matrix {
    fn dim(&self) -> usize {
        assert!(self.is_square());
        self.rows()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y)
    }
}

/// The identity on `R^n`.
#[derive(Clone, Copy, Debug)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x)
    }
}

/// Adapts a closure `f(x, y)` computing `y = Op x`.
pub struct FnOperator<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(n: usize, f: F) -> Self {
        FnOperator { n, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

/// What `rtol` is compared against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StoppingRule {
    /// `||r||_{P^-1} <= rtol * ||b||_{P^-1}`.
    #[default]
    Relative,
    /// `||r||_{P^-1} <= rtol`.
    Absolute,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinresOptions {
    pub rtol: f64,
    pub max_iter: usize,
    pub rule: StoppingRule,
}

impl MinresOptions {
    pub const DEFAULT_RTOL: f64 = 1e-9;

    /// `rtol = 1e-9`, `max_iter = 5 * dim`.
    pub fn for_dim(dim: usize) -> Self {
        MinresOptions {
            rtol: Self::DEFAULT_RTOL,
            max_iter: 5 * dim.max(1),
            rule: StoppingRule::Relative,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Preconditioned residual norms, starting with the initial one.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub wall_time: f64,
}

impl SolveReport {
    /// Final preconditioned residual relative to the initial one.
    pub fn relative_residual(&self) -> f64 {
        match (self.residual_history.first(), self.residual_history.last()) {
            (Some(&r0), Some(&r)) if r0 > 0.0 => r / r0,
            _ => 0.0,
        }
    }

    /// CSV `iteration,residual`.
    pub fn residual_csv(&self) -> String {
        let mut s = String::from("iteration,residual\n");
        for (i, r) in self.residual_history.iter().enumerate() {
            s.push_str(&format!("{i},{r:.16e}\n"));
        }
        s
    }
}

/// Solves `op x = b` from `x = 0`.
pub fn minres_solve(
    op: &dyn LinearOperator,
    pc: &dyn LinearOperator,
    b: &[f64],
    opts: &MinresOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let n = op.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    if pc.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: pc.dim(),
        });
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("right-hand side is not finite"));
    }
    if !(opts.rtol.is_finite() && opts.rtol > 0.0) {
        return Err(Error::invalid(format!(
            "rtol must be positive, got {}",
            opts.rtol
        )));
    }

    let mut x = vec![0.0; n];
    let mut v_prev = vec![0.0; n];
    let mut v = b.to_vec();
    let mut z = pc.apply(&v);
    let vz = dot(&z, &v);
    if vz < 0.0 {
        return Err(Error::IndefinitePreconditioner {
            iteration: 0,
            value: vz,
        });
    }
    let mut gamma = vz.sqrt();
    let gamma0 = gamma;
    let mut history = vec![gamma];
    let finish = |x: Vec<f64>, history: Vec<f64>, iterations: usize, converged: bool| {
        Ok((
            x,
            SolveReport {
                iterations,
                residual_history: history,
                converged,
                wall_time: start.elapsed().as_secs_f64(),
            },
        ))
    };
    if gamma == 0.0 || (opts.rule == StoppingRule::Absolute && gamma <= opts.rtol) {
        return finish(x, history, 0, true);
    }

    let mut gamma_prev = 1.0;
    let (mut c_prev, mut c) = (1.0, 1.0);
    let (mut s_prev, mut s) = (0.0, 0.0);
    let mut eta = gamma;
    let mut w_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut az = vec![0.0; n];
    let target = match opts.rule {
        StoppingRule::Relative => opts.rtol * gamma0,
        StoppingRule::Absolute => opts.rtol,
    };

    for iter in 1..=opts.max_iter {
        z.iter_mut().for_each(|zi| *zi /= gamma);
        op.apply_into(&z, &mut az);
        let delta = dot(&az, &z);

        // v_next = A z - (delta/gamma) v - (gamma/gamma_prev) v_prev, written into v_prev.
        let c1 = delta / gamma;
        let c2 = gamma / gamma_prev;
        for ((vp, &vi), &ai) in v_prev.iter_mut().zip(&v).zip(&az) {
            *vp = ai - c1 * vi - c2 * *vp;
        }
        std::mem::swap(&mut v_prev, &mut v);
        // v is now v_{j+1}, v_prev is v_j.
        let z_next = pc.apply(&v);
        let vz = dot(&z_next, &v);
        let gamma_next = if vz >= 0.0 {
            vz.sqrt()
        } else if -vz <= 1e-28 * gamma0 * gamma0 {
            0.0
        } else {
            return Err(Error::IndefinitePreconditioner {
                iteration: iter,
                value: vz,
            });
        };

        let alpha0 = c * delta - c_prev * s * gamma;
        let alpha1 = alpha0.hypot(gamma_next);
        let alpha2 = s * delta + c_prev * c * gamma;
        let alpha3 = s_prev * gamma;
        if alpha1 == 0.0 || !alpha1.is_finite() {
            return Err(Error::Breakdown {
                iteration: iter,
                residual: eta.abs(),
            });
        }
        let c_next = alpha0 / alpha1;
        let s_next = gamma_next / alpha1;

        // w_next = (z - alpha3 w_prev - alpha2 w) / alpha1, written into w_prev.
        for ((wp, &wi), &zi) in w_prev.iter_mut().zip(&w).zip(&z) {
            *wp = (zi - alpha3 * *wp - alpha2 * wi) / alpha1;
        }
        std::mem::swap(&mut w_prev, &mut w);
        axpy(c_next * eta, &w, &mut x);
        eta *= -s_next;

        history.push(eta.abs());
        if eta.abs() <= target {
            return finish(x, history, iter, true);
        }
        if gamma_next == 0.0 {
            return Err(Error::Breakdown {
                iteration: iter,
                residual: eta.abs(),
            });
        }

        gamma_prev = gamma;
        gamma = gamma_next;
        z = z_next;
        c_prev = c;
        c = c_next;
        s_prev = s;
        s = s_next;
    }
    let iters = opts.max_iter;
    finish(x, history, iters, false)
}

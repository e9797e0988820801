//! Assembly of the hybrid interpolation saddle-point system
//!
//! ```text
//! [ A   Q ] [alpha]   [f_X]
//! [ Q^T 0 ] [beta ] = [ 0 ]
//! ```
//!
//! where `A_ij = Phi(x_i . x_j)` and `Q_{i,lk} = Y_{l,k}(x_i)`, together with
//! the diagonal Schur approximation `Lambda_L` and evaluation of the
//! resulting interpolant `u + p`.

use crate::dense::{dot, norm_inf, Cholesky, Matrix};
use crate::error::{Error, Result};
use crate::harmonics::{eval_all, eval_matrix, HarmonicBasis};
use crate::kernels::{CoefficientTable, ZonalKernel};
use crate::sphere_points::{PointSet, UnitVector3};

/// Dense symmetric kernel matrix `A_X`.
#[derive(Clone, Debug)]
pub struct InterpolationMatrix {
    kernel: ZonalKernel,
    matrix: Matrix,
}

impl InterpolationMatrix {
    pub fn kernel(&self) -> &ZonalKernel {
        &self.kernel
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.mul_vec_into(x, y)
    }

    /// Cholesky factorization; fails if the matrix is not numerically
    /// positive definite.
    pub fn factor(&self) -> Result<Cholesky> {
        Cholesky::factor(&self.matrix)
    }
}

pub fn assemble_a(points: &PointSet, kernel: &ZonalKernel) -> InterpolationMatrix {
    let n = points.len();
    let pts = points.points();
    let mut a = Matrix::zeros(n, n);
    let peak = kernel.peak();
    for i in 0..n {
        a[(i, i)] = peak;
        for j in i + 1..n {
            let v = kernel.value(pts[i].dot(&pts[j]));
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    InterpolationMatrix {
        kernel: *kernel,
        matrix: a,
    }
}

/// `Lambda_L`: the diagonal `1/a_l`, each repeated `2l + 1` times.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalSchur {
    diag: Vec<f64>,
}

impl DiagonalSchur {
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Leading `m` entries, i.e. `Lambda` for a lower degree.
    pub fn truncated(&self, m: usize) -> DiagonalSchur {
        DiagonalSchur {
            diag: self.diag[..m.min(self.diag.len())].to_vec(),
        }
    }

    /// `z = Lambda^{-1} r`, i.e. `z_lk = a_l r_lk`.
    pub fn solve_into(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), d) in z.iter_mut().zip(r).zip(&self.diag) {
            *zi = ri / d;
        }
    }
}

pub fn assemble_lambda(coeffs: &CoefficientTable, max_degree: usize) -> Result<DiagonalSchur> {
    if coeffs.l_max() < max_degree {
        return Err(Error::invalid(format!(
            "coefficients known up to degree {}, need {max_degree}",
            coeffs.l_max()
        )));
    }
    let diag = HarmonicBasis::new(max_degree)
        .column_degrees()
        .into_iter()
        .map(|l| 1.0 / coeffs.values()[l])
        .collect();
    Ok(DiagonalSchur { diag })
}

/// A real function on the sphere.
pub trait ScalarField {
    fn eval(&self, p: &UnitVector3) -> f64;
}

impl<F: Fn(&UnitVector3) -> f64> ScalarField for F {
    fn eval(&self, p: &UnitVector3) -> f64 {
        self(p)
    }
}

/// `exp(x+y+z) + [0.01 - x^2 - y^2 - (z-1)^2]_+^2`: a smooth part plus a
/// bump supported within Euclidean distance 0.1 of the north pole.
#[derive(Clone, Copy, Debug, Default)]
pub struct CappedExpField;

impl ScalarField for CappedExpField {
    fn eval(&self, p: &UnitVector3) -> f64 {
        let (x, y, z) = (p.x(), p.y(), p.z());
        let bump = (0.01 - x * x - y * y - (z - 1.0) * (z - 1.0)).max(0.0);
        (x + y + z).exp() + bump * bump
    }
}

pub const BUILTIN_FIELDS: &[&str] = &["capped-exp", "one"];

/// Built-in fields selectable by name: `capped-exp` (the capped exponential
/// test function) and `one` (the constant 1).
pub fn builtin_field(name: &str) -> Result<Box<dyn ScalarField + Send + Sync>> {
    match name {
        "capped-exp" => Ok(Box::new(CappedExpField)),
        "one" => Ok(Box::new(|_: &UnitVector3| 1.0)),
        _ => Err(Error::invalid(format!(
            "unknown field {name:?}; available: {}",
            BUILTIN_FIELDS.join(", ")
        ))),
    }
}

/// `(f(x_1), ..., f(x_N), 0, ..., 0)` with `m` trailing zeros.
pub fn assemble_rhs(points: &PointSet, field: &dyn ScalarField, m: usize) -> Result<Vec<f64>> {
    let mut rhs = Vec::with_capacity(points.len() + m);
    for (i, p) in points.iter().enumerate() {
        let v = field.eval(p);
        if !v.is_finite() {
            return Err(Error::invalid(format!(
                "field value at point {i} is not finite: {v}"
            )));
        }
        rhs.push(v);
    }
    rhs.resize(points.len() + m, 0.0);
    Ok(rhs)
}

/// The assembled saddle-point system. The full `(N+M)^2` matrix is never
/// formed.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    points: PointSet,
    basis: Option<HarmonicBasis>,
    a: InterpolationMatrix,
    q: Matrix,
    rhs: Vec<f64>,
}

impl SaddleSystem {
    /// Hybrid system with polynomial degree `max_degree`, or the plain RBF
    /// system `A alpha = f_X` when `max_degree` is `None`.
    pub fn assemble(
        points: &PointSet,
        kernel: &ZonalKernel,
        max_degree: Option<usize>,
        field: &dyn ScalarField,
    ) -> Result<Self> {
        let a = assemble_a(points, kernel);
        let basis = max_degree.map(HarmonicBasis::new);
        let q = match &basis {
            Some(b) => eval_matrix(points, b),
            None => Matrix::zeros(points.len(), 0),
        };
        let rhs = assemble_rhs(points, field, q.cols())?;
        Ok(SaddleSystem {
            points: points.clone(),
            basis,
            a,
            q,
            rhs,
        })
    }

    /// Builds from parts; `q` must have one row per point.
    pub fn from_parts(
        points: PointSet,
        basis: Option<HarmonicBasis>,
        a: InterpolationMatrix,
        q: Matrix,
        rhs: Vec<f64>,
    ) -> Result<Self> {
        let n = points.len();
        if a.dim() != n || q.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: if a.dim() != n { a.dim() } else { q.rows() },
            });
        }
        let m = basis.map_or(0, |b| b.dimension());
        if q.cols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: q.cols(),
            });
        }
        if rhs.len() != n + m {
            return Err(Error::DimensionMismatch {
                expected: n + m,
                actual: rhs.len(),
            });
        }
        Ok(SaddleSystem {
            points,
            basis,
            a,
            q,
            rhs,
        })
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn basis(&self) -> Option<&HarmonicBasis> {
        self.basis.as_ref()
    }

    pub fn a(&self) -> &InterpolationMatrix {
        &self.a
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// `f_X`, the top block of the right-hand side.
    pub fn data(&self) -> &[f64] {
        &self.rhs[..self.n()]
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn m(&self) -> usize {
        self.q.cols()
    }

    pub fn dim(&self) -> usize {
        self.n() + self.m()
    }

    /// `out = (A v1 + Q v2, Q^T v1)`.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n();
        assert_eq!(v.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        let (v1, v2) = v.split_at(n);
        let (o1, o2) = out.split_at_mut(n);
        self.a.mul_vec_into(v1, o1);
        if self.m() > 0 {
            for (i, oi) in o1.iter_mut().enumerate() {
                *oi += dot(self.q.row(i), v2);
            }
            self.q.tr_mul_vec_into(v1, o2);
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(v, &mut out);
        out
    }

    /// Splits a stacked solution vector.
    pub fn split_solution(&self, x: &[f64]) -> HybridSolution {
        let n = self.n();
        HybridSolution {
            alpha: x[..n].to_vec(),
            beta: x[n..].to_vec(),
        }
    }

    /// `max_i |u(x_i) + p(x_i) - f(x_i)|`, computed from the system blocks.
    pub fn interpolation_residual(&self, sol: &HybridSolution) -> f64 {
        let mut r = self.a.matrix.mul_vec(&sol.alpha);
        for (i, ri) in r.iter_mut().enumerate() {
            if self.m() > 0 {
                *ri += dot(self.q.row(i), &sol.beta);
            }
            *ri -= self.rhs[i];
        }
        norm_inf(&r)
    }

    /// `||Q^T alpha||_inf`.
    pub fn side_condition(&self, sol: &HybridSolution) -> f64 {
        if self.m() == 0 {
            return 0.0;
        }
        norm_inf(&self.q.tr_mul_vec(&sol.alpha))
    }
}

/// Coefficients of `u = sum_j alpha_j phi(., x_j)` and
/// `p = sum_lk beta_lk Y_lk`.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridSolution {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

/// `sqrt(alpha^T A alpha)`, clamped at zero against round-off.
pub fn native_norm(alpha: &[f64], a: &InterpolationMatrix) -> f64 {
    let av = a.matrix.mul_vec(alpha);
    dot(alpha, &av).max(0.0).sqrt()
}

/// `u(query) + p(query)`.
pub fn evaluate_interpolant(
    sol: &HybridSolution,
    points: &PointSet,
    kernel: &ZonalKernel,
    basis: Option<&HarmonicBasis>,
    query: &UnitVector3,
) -> f64 {
    let u: f64 = sol
        .alpha
        .iter()
        .zip(points.iter())
        .map(|(a, x)| a * kernel.value(query.dot(x)))
        .sum();
    let p = match basis {
        Some(b) if !sol.beta.is_empty() => {
            let mut y = vec![0.0; b.dimension()];
            eval_all(b.max_degree(), query, &mut y);
            dot(&y, &sol.beta)
        }
        _ => 0.0,
    };
    u + p
}

//! Spectral checks: the pencil `(S, Lambda_L)`, the inf-sup estimate it
//! certifies, and the spectrum of the exactly preconditioned saddle matrix.

use crate::assembly::{DiagonalSchur, SaddleSystem};
use crate::dense::{Cholesky, Matrix};
use crate::eigen::{symmetric_eigenvalues, DEFAULT_MAX_SWEEPS};
use crate::error::{Error, Result};
use crate::precond::schur_from_factor;

/// Off-diagonal reduction target of the Jacobi solver, relative to `||.||_F`.
pub const JACOBI_REL_TOL: f64 = 1e-12;

/// Eigenvalues closer than this belong to one cluster.
pub const CLUSTER_GAP: f64 = 1e-6;

/// Largest `N + M` accepted by [`exact_precond_spectrum`].
pub const MAX_DENSE_SADDLE_DIM: usize = 600;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub infsup_estimate: f64,
}

impl SpectrumReport {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::invalid("empty spectrum"));
        }
        eigenvalues.sort_by(f64::total_cmp);
        let lambda_min = eigenvalues[0];
        let lambda_max = *eigenvalues.last().unwrap();
        Ok(SpectrumReport {
            infsup_estimate: lambda_min.max(0.0).sqrt(),
            eigenvalues,
            lambda_min,
            lambda_max,
        })
    }

    /// CSV `index,eigenvalue` followed by a
    /// `lambda_min,lambda_max,infsup_estimate` summary block.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,eigenvalue\n");
        for (i, e) in self.eigenvalues.iter().enumerate() {
            s.push_str(&format!("{i},{e:.16e}\n"));
        }
        s.push_str("lambda_min,lambda_max,infsup_estimate\n");
        s.push_str(&format!(
            "{:.16e},{:.16e},{:.16e}\n",
            self.lambda_min, self.lambda_max, self.infsup_estimate
        ));
        s
    }
}

/// `sqrt(lambda_min)`: on this point set and degree, a computable lower
/// bound certificate for the inf-sup constant.
pub fn infsup_estimate(report: &SpectrumReport) -> f64 {
    report.lambda_min.max(0.0).sqrt()
}

/// Generalized eigenvalues of `S beta = lambda Lambda beta`, computed as the
/// eigenvalues of `Lambda^{-1/2} S Lambda^{-1/2}`.
pub fn schur_spectrum(s: &Matrix, lambda: &DiagonalSchur) -> Result<SpectrumReport> {
    let m = lambda.len();
    if s.rows() != m || s.cols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: s.rows(),
        });
    }
    let scale: Vec<f64> = lambda.diagonal().iter().map(|d| 1.0 / d.sqrt()).collect();
    let scaled = Matrix::from_fn(m, m, |i, j| scale[i] * s[(i, j)] * scale[j]);
    SpectrumReport::from_eigenvalues(symmetric_eigenvalues(
        &scaled,
        JACOBI_REL_TOL,
        DEFAULT_MAX_SWEEPS,
    )?)
}

/// Schur spectra for several degrees from one factorization. `degrees` must
/// not exceed the degree of `q`'s basis; since columns are ordered by
/// degree, the Schur complement for degree `L` is the leading
/// `(L+1)^2` block of the one for the largest degree.
pub fn schur_spectra_nested(
    a_factor: &Cholesky,
    q: &Matrix,
    lambda_full: &DiagonalSchur,
    degrees: &[usize],
) -> Result<Vec<(usize, SpectrumReport)>> {
    let s_full = schur_from_factor(a_factor, q);
    let mut out = Vec::with_capacity(degrees.len());
    for &l in degrees {
        let m = (l + 1) * (l + 1);
        if m > s_full.rows() {
            return Err(Error::invalid(format!(
                "degree {l} exceeds the assembled basis"
            )));
        }
        let s = s_full.leading_block(m);
        out.push((l, schur_spectrum(&s, &lambda_full.truncated(m))?));
    }
    Ok(out)
}

/// A group of eigenvalues within [`CLUSTER_GAP`] of their neighbours.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenCluster {
    pub center: f64,
    pub min: f64,
    pub max: f64,
    pub multiplicity: usize,
}

/// Groups ascending eigenvalues whose consecutive gaps are `<= gap`.
pub fn cluster_eigenvalues(sorted: &[f64], gap: f64) -> Vec<EigenCluster> {
    let mut out: Vec<EigenCluster> = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > gap {
            let part = &sorted[start..i];
            if !part.is_empty() {
                out.push(EigenCluster {
                    center: part.iter().sum::<f64>() / part.len() as f64,
                    min: part[0],
                    max: part[part.len() - 1],
                    multiplicity: part.len(),
                });
            }
            start = i;
        }
    }
    out
}

/// Eigenvalues of `P^{-1} K`, `K` the saddle matrix and `P = diag(A, S)`,
/// computed from the congruent symmetric matrix `C^{-1} K C^{-T}` with
/// `P = C C^T`, then clustered.
pub fn exact_precond_spectrum(sys: &SaddleSystem) -> Result<Vec<EigenCluster>> {
    let (n, m) = (sys.n(), sys.m());
    let dim = n + m;
    if dim > MAX_DENSE_SADDLE_DIM {
        return Err(Error::invalid(format!(
            "N + M = {dim} exceeds the dense limit {MAX_DENSE_SADDLE_DIM}"
        )));
    }
    let a = sys.a().matrix();
    let q = sys.q();
    let a_factor = sys.a().factor()?;
    let s = schur_from_factor(&a_factor, q);

    let mut k = Matrix::zeros(dim, dim);
    let mut p = Matrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = a[(i, j)];
            p[(i, j)] = a[(i, j)];
        }
        for c in 0..m {
            k[(i, n + c)] = q[(i, c)];
            k[(n + c, i)] = q[(i, c)];
        }
    }
    for r in 0..m {
        for c in 0..m {
            p[(n + r, n + c)] = s[(r, c)];
        }
    }
    // Block diagonal input gives the block diagonal factor diag(L_A, L_S).
    let c = Cholesky::factor_owned(p)?;
    let half = c.forward_matrix(&k);
    let mut sym = c.forward_matrix(&half.transpose());
    sym.symmetrize();
    let ev = symmetric_eigenvalues(&sym, JACOBI_REL_TOL, DEFAULT_MAX_SWEEPS)?;
    Ok(cluster_eigenvalues(&ev, CLUSTER_GAP))
}

//! Real, fully normalized spherical harmonics on S^2.
//!
//! Within degree `l` the index `k` runs over `1..=2l+1`: `k = 1` is the zonal
//! harmonic, `k = 2j` and `k = 2j + 1` are the `cos(j phi)` and `sin(j phi)`
//! harmonics of order `j`. No Condon-Shortley phase is applied, so the three
//! degree-one harmonics are `sqrt(3/(4 pi))` times `z`, `x`, `y`.
//!
//! Flat column order is degree ascending, then `k` ascending, so column
//! `l^2 + k - 1` holds `Y_{l,k}`.

use std::f64::consts::{PI, SQRT_2};

use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::sphere_points::{PointSet, UnitVector3};

/// Largest degree the normalized recurrence is validated for.
pub const MAX_SUPPORTED_DEGREE: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HarmonicIndex {
    l: usize,
    k: usize,
}

impl HarmonicIndex {
    pub fn new(l: usize, k: usize) -> Result<Self> {
        if k == 0 || k > 2 * l + 1 {
            return Err(Error::invalid(format!(
                "harmonic index k = {k} out of range 1..={} for degree {l}",
                2 * l + 1
            )));
        }
        Ok(HarmonicIndex { l, k })
    }

    pub fn degree(&self) -> usize {
        self.l
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Position in the flat column ordering.
    pub fn flat(&self) -> usize {
        self.l * self.l + self.k - 1
    }

    pub fn from_flat(col: usize) -> Self {
        let l = (col as f64).sqrt() as usize;
        // Guard against rounding in the square root.
        let l = if (l + 1) * (l + 1) <= col {
            l + 1
        } else if l * l > col {
            l - 1
        } else {
            l
        };
        HarmonicIndex {
            l,
            k: col - l * l + 1,
        }
    }
}

/// `(L+1)^2`, the dimension of the spherical polynomials of degree `<= L`.
pub fn dimension(max_degree: usize) -> usize {
    (max_degree + 1) * (max_degree + 1)
}

/// All harmonics of degree `<= max_degree`, in the flat column order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HarmonicBasis {
    max_degree: usize,
}

impl HarmonicBasis {
    pub fn new(max_degree: usize) -> Self {
        HarmonicBasis { max_degree }
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn dimension(&self) -> usize {
        dimension(self.max_degree)
    }

    /// Degree of each flat column.
    pub fn column_degrees(&self) -> Vec<usize> {
        (0..=self.max_degree)
            .flat_map(|l| std::iter::repeat_n(l, 2 * l + 1))
            .collect()
    }

    /// Values of every basis function at `p`.
    pub fn eval(&self, p: &UnitVector3) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension()];
        eval_all(self.max_degree, p, &mut out);
        out
    }
}

/// Normalized associated Legendre values `Pbar_l^m(cos theta)` for
/// `0 <= m <= l <= max_degree`, packed as `l(l+1)/2 + m`. Normalized so
/// that `2 pi int_{-1}^{1} Pbar_l^m(t)^2 dt = 1`.
fn normalized_legendre(max_degree: usize, cos_t: f64, sin_t: f64) -> Vec<f64> {
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut p = vec![0.0; idx(max_degree, max_degree) + 1];
    p[0] = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=max_degree {
        if m > 0 {
            let mf = m as f64;
            p[idx(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t * p[idx(m - 1, m - 1)];
        }
        if m < max_degree {
            p[idx(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * cos_t * p[idx(m, m)];
        }
        let mf = m as f64;
        for l in m + 2..=max_degree {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                .sqrt();
            p[idx(l, m)] = a * (cos_t * p[idx(l - 1, m)] - b * p[idx(l - 2, m)]);
        }
    }
    p
}

/// Fills `out[l^2 + k - 1] = Y_{l,k}(p)` for every `l <= max_degree`.
pub fn eval_all(max_degree: usize, p: &UnitVector3, out: &mut [f64]) {
    assert_eq!(out.len(), dimension(max_degree));
    let rho = p.x().hypot(p.y());
    let plm = normalized_legendre(max_degree, p.z(), rho);
    let phi = p.y().atan2(p.x());
    let trig: Vec<(f64, f64)> = (0..=max_degree)
        .map(|j| (j as f64 * phi).sin_cos())
        .collect();
    for l in 0..=max_degree {
        let base = l * l;
        let row = l * (l + 1) / 2;
        out[base] = plm[row];
        for (j, &(s, c)) in trig.iter().enumerate().take(l + 1).skip(1) {
            let v = SQRT_2 * plm[row + j];
            out[base + 2 * j - 1] = v * c;
            out[base + 2 * j] = v * s;
        }
    }
}

pub fn eval_harmonic(idx: HarmonicIndex, p: &UnitVector3) -> Result<f64> {
    if idx.l > MAX_SUPPORTED_DEGREE {
        return Err(Error::invalid(format!(
            "degree {} exceeds the supported maximum {MAX_SUPPORTED_DEGREE}",
            idx.l
        )));
    }
    let mut out = vec![0.0; dimension(idx.l)];
    eval_all(idx.l, p, &mut out);
    Ok(out[idx.flat()])
}

/// The `N x M` matrix of basis values at the points, `M = (L+1)^2`.
pub fn eval_matrix(points: &PointSet, basis: &HarmonicBasis) -> Matrix {
    let m = basis.dimension();
    let mut q = Matrix::zeros(points.len(), m);
    for (i, p) in points.iter().enumerate() {
        eval_all(basis.max_degree(), p, q.row_mut(i));
    }
    q
}

/// `sum_k Y_{l,k}(x) Y_{l,k}(y)`.
pub fn addition_theorem_sum(l: usize, x: &UnitVector3, y: &UnitVector3) -> f64 {
    let mut yx = vec![0.0; dimension(l)];
    let mut yy = vec![0.0; dimension(l)];
    eval_all(l, x, &mut yx);
    eval_all(l, y, &mut yy);
    let base = l * l;
    (base..base + 2 * l + 1).map(|c| yx[c] * yy[c]).sum()
}

//! Block-diagonal preconditioners for the saddle-point system.
//!
//! The primal block is either an additive Schwarz approximation of `A`
//! built from overlapping spherical caps, or the exact Cholesky factor of
//! `A`. The dual block is either the diagonal `Lambda_L` of inverse
//! Fourier-Legendre coefficients or the exact Schur complement
//! `S = Q^T A^{-1} Q`.

use std::f64::consts::PI;

use crate::assembly::{DiagonalSchur, InterpolationMatrix, SaddleSystem};
use crate::dense::{Cholesky, Matrix};
use crate::error::{Error, Result};
use crate::minres::LinearOperator;
use crate::sphere_points::{geodesic_distance, PointSet};

/// Greedy sweep in point order: a point becomes a center iff it is at least
/// `nu` away from every center accepted so far. Returns point indices.
pub fn select_center_indices(points: &PointSet, nu: f64) -> Result<Vec<usize>> {
    if !(nu > 0.0 && nu < PI) {
        return Err(Error::invalid(format!(
            "center separation must lie in (0, pi), got {nu}"
        )));
    }
    // Compare dot products: d(p, c) >= nu  <=>  p . c <= cos(nu).
    let cos_nu = nu.cos();
    let pts = points.points();
    let mut centers: Vec<usize> = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        if centers.iter().all(|&c| p.dot(&pts[c]) <= cos_nu) {
            centers.push(i);
        }
    }
    Ok(centers)
}

/// [`select_center_indices`] returning the centers themselves.
pub fn select_centers(points: &PointSet, nu: f64) -> Result<PointSet> {
    let idx = select_center_indices(points, nu)?;
    points.select(&idx)
}

/// Overlapping subdomains `X_j = {x in X : d(x, p_j) <= mu}`.
#[derive(Clone, Debug)]
pub struct Subdomains {
    centers: PointSet,
    mu: f64,
    members: Vec<Vec<usize>>,
    repaired: bool,
}

impl Subdomains {
    pub fn centers(&self) -> &PointSet {
        &self.centers
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Point indices of each subdomain, ascending.
    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// True when some point lay in no cap and was assigned to its nearest
    /// center.
    pub fn coverage_repaired(&self) -> bool {
        self.repaired
    }

    /// `sum_j |X_j|`.
    pub fn total_size(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }

    pub fn max_size(&self) -> usize {
        self.members.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Factors every principal block `A_j`.
    pub fn factorize(self, a: &InterpolationMatrix) -> Result<SchwarzPreconditioner> {
        let mut factors = Vec::with_capacity(self.members.len());
        for (j, idx) in self.members.iter().enumerate() {
            let block = a.matrix().principal_submatrix(idx);
            let ch = Cholesky::factor_owned(block).map_err(|e| match e {
                Error::NotPositiveDefinite { pivot, .. } => {
                    Error::SingularSubdomain { center: j, pivot }
                }
                other => other,
            })?;
            factors.push(ch);
        }
        Ok(SchwarzPreconditioner {
            n: a.dim(),
            domains: self,
            factors,
        })
    }
}

pub fn build_subdomains(points: &PointSet, centers: &PointSet, mu: f64) -> Result<Subdomains> {
    if !(mu > 0.0 && mu < PI / 3.0) {
        return Err(Error::invalid(format!(
            "subdomain radius must lie in (0, pi/3), got {mu}"
        )));
    }
    let cos_mu = mu.cos();
    let cs = centers.points();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); cs.len()];
    let mut repaired = false;
    for (i, p) in points.iter().enumerate() {
        let mut covered = false;
        for (j, c) in cs.iter().enumerate() {
            // Exact test near the boundary, cheap test elsewhere.
            let d = p.dot(c);
            if d >= cos_mu || (d > cos_mu - 1e-12 && geodesic_distance(p, c) <= mu) {
                members[j].push(i);
                covered = true;
            }
        }
        if !covered {
            let nearest = cs
                .iter()
                .enumerate()
                .max_by(|a, b| p.dot(a.1).total_cmp(&p.dot(b.1)))
                .map(|(j, _)| j)
                .expect("at least one center");
            members[nearest].push(i);
            repaired = true;
        }
    }
    Ok(Subdomains {
        centers: centers.clone(),
        mu,
        members,
        repaired,
    })
}

/// Defaults `nu = 4 sqrt(4 pi / N)` and `mu = 1.25 nu`, with `nu` kept
/// inside `(0, pi)` and `mu` below `pi/3`.
pub fn default_overlap(n: usize) -> (f64, f64) {
    let spacing = (4.0 * PI / n as f64).sqrt();
    let nu = (4.0 * spacing).min(PI * 0.999);
    let mu = (1.25 * nu).min(PI / 3.0 * 0.999);
    (nu, mu)
}

/// Additive Schwarz: `z = sum_j R_j^T A_j^{-1} R_j r`.
#[derive(Clone, Debug)]
pub struct SchwarzPreconditioner {
    n: usize,
    domains: Subdomains,
    factors: Vec<Cholesky>,
}

impl SchwarzPreconditioner {
    /// Centers by greedy selection with separation `nu`, caps of radius `mu`.
    pub fn build(points: &PointSet, a: &InterpolationMatrix, nu: f64, mu: f64) -> Result<Self> {
        let centers = select_centers(points, nu)?;
        build_subdomains(points, &centers, mu)?.factorize(a)
    }

    pub fn subdomains(&self) -> &Subdomains {
        &self.domains
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        assert_eq!(r.len(), self.n);
        assert_eq!(z.len(), self.n);
        z.fill(0.0);
        let mut local = Vec::with_capacity(self.domains.max_size());
        for (idx, ch) in self.domains.members.iter().zip(&self.factors) {
            local.clear();
            local.extend(idx.iter().map(|&i| r[i]));
            ch.solve_in_place(&mut local);
            for (&i, v) in idx.iter().zip(&local) {
                z[i] += v;
            }
        }
    }

    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        self.apply_into(r, &mut z);
        z
    }
}

/// `S = Q^T A^{-1} Q = W^T W` with `W = L^{-1} Q`, `A = L L^T`.
pub fn schur_from_factor(a_factor: &Cholesky, q: &Matrix) -> Matrix {
    a_factor.forward_matrix(q).gram()
}

pub fn exact_schur(a: &InterpolationMatrix, q: &Matrix) -> Result<Matrix> {
    Ok(schur_from_factor(&a.factor()?, q))
}

#[derive(Clone, Debug)]
pub enum PrimalBlock {
    Identity,
    Schwarz(SchwarzPreconditioner),
    Exact(Cholesky),
}

#[derive(Clone, Debug)]
pub enum DualBlock {
    Identity,
    Lambda(DiagonalSchur),
    /// Cholesky factor of the exact Schur complement.
    Exact(Cholesky),
}

/// Which primal approximation to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrimalChoice {
    None,
    Schwarz,
    Exact,
}

/// Which Schur complement approximation to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchurChoice {
    Lambda,
    Exact,
}

/// `diag(Ahat, Shat)`, applied as `(Ahat^{-1} r1, Shat^{-1} r2)`.
#[derive(Clone, Debug)]
pub struct BlockDiagPreconditioner {
    n: usize,
    m: usize,
    primal: PrimalBlock,
    dual: DualBlock,
}

impl BlockDiagPreconditioner {
    pub fn new(n: usize, m: usize, primal: PrimalBlock, dual: DualBlock) -> Result<Self> {
        let pn = match &primal {
            PrimalBlock::Identity => n,
            PrimalBlock::Schwarz(s) => s.dim(),
            PrimalBlock::Exact(c) => c.dim(),
        };
        let dm = match &dual {
            DualBlock::Identity => m,
            DualBlock::Lambda(d) => d.len(),
            DualBlock::Exact(c) => c.dim(),
        };
        if pn != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: pn,
            });
        }
        if dm != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: dm,
            });
        }
        Ok(BlockDiagPreconditioner { n, m, primal, dual })
    }

    /// The identity, i.e. no preconditioning.
    pub fn identity(n: usize, m: usize) -> Self {
        BlockDiagPreconditioner {
            n,
            m,
            primal: PrimalBlock::Identity,
            dual: DualBlock::Identity,
        }
    }

    /// `diag(A, S)`.
    pub fn exact(sys: &SaddleSystem) -> Result<Self> {
        let factor = sys.a().factor()?;
        let dual = if sys.m() > 0 {
            DualBlock::Exact(Cholesky::factor_owned(schur_from_factor(&factor, sys.q()))?)
        } else {
            DualBlock::Exact(Cholesky::factor_owned(Matrix::zeros(0, 0))?)
        };
        BlockDiagPreconditioner::new(sys.n(), sys.m(), PrimalBlock::Exact(factor), dual)
    }

    /// Builds the requested combination. With `PrimalChoice::None` the whole
    /// preconditioner is the identity and `schur`/`lambda` are ignored.
    pub fn build(
        sys: &SaddleSystem,
        primal: PrimalChoice,
        schur: SchurChoice,
        lambda: Option<&DiagonalSchur>,
        overlap: (f64, f64),
    ) -> Result<Self> {
        let (n, m) = (sys.n(), sys.m());
        if primal == PrimalChoice::None {
            return Ok(BlockDiagPreconditioner::identity(n, m));
        }
        let mut a_factor = None;
        let primal_block = match primal {
            PrimalChoice::Schwarz => PrimalBlock::Schwarz(SchwarzPreconditioner::build(
                sys.points(),
                sys.a(),
                overlap.0,
                overlap.1,
            )?),
            PrimalChoice::Exact => {
                let f = sys.a().factor()?;
                a_factor = Some(f.clone());
                PrimalBlock::Exact(f)
            }
            PrimalChoice::None => unreachable!(),
        };
        let dual_block = match schur {
            SchurChoice::Lambda => {
                let l = lambda.ok_or_else(|| {
                    Error::invalid("Lambda preconditioner requested without coefficients")
                })?;
                DualBlock::Lambda(l.clone())
            }
            SchurChoice::Exact => {
                let f = match a_factor {
                    Some(f) => f,
                    None => sys.a().factor()?,
                };
                DualBlock::Exact(Cholesky::factor_owned(schur_from_factor(&f, sys.q()))?)
            }
        };
        BlockDiagPreconditioner::new(n, m, primal_block, dual_block)
    }

    pub fn primal(&self) -> &PrimalBlock {
        &self.primal
    }

    pub fn dual(&self) -> &DualBlock {
        &self.dual
    }

    pub fn apply_block(&self, r1: &[f64], r2: &[f64], z1: &mut [f64], z2: &mut [f64]) {
        match &self.primal {
            PrimalBlock::Identity => z1.copy_from_slice(r1),
            PrimalBlock::Schwarz(s) => s.apply_into(r1, z1),
            PrimalBlock::Exact(c) => {
                z1.copy_from_slice(r1);
                c.solve_in_place(z1);
            }
        }
        match &self.dual {
            DualBlock::Identity => z2.copy_from_slice(r2),
            DualBlock::Lambda(d) => d.solve_into(r2, z2),
            DualBlock::Exact(c) => {
                z2.copy_from_slice(r2);
                c.solve_in_place(z2);
            }
        }
    }
}

impl LinearOperator for BlockDiagPreconditioner {
    fn dim(&self) -> usize {
        self.n + self.m
    }

    fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        let (r1, r2) = r.split_at(self.n);
        let (z1, z2) = z.split_at_mut(self.n);
        self.apply_block(r1, r2, z1, z2);
    }
}

impl LinearOperator for SchwarzPreconditioner {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        SchwarzPreconditioner::apply_into(self, r, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_a, assemble_lambda, CappedExpField};
    use crate::kernels::{fourier_legendre_coeffs, WendlandOrder, ZonalKernel};
    use crate::sphere_points::{generate_equal_area, UnitVector3};
    use approx::assert_abs_diff_eq;

    fn kernel(m: u32) -> ZonalKernel {
        ZonalKernel::new(WendlandOrder::from_index(m).unwrap())
    }

    #[test]
    fn center_selection_extremes() {
        let pts = generate_equal_area(200).unwrap();
        assert!(select_centers(&pts, 3.1).unwrap().len() <= 2);
        assert_eq!(select_centers(&pts, 1e-6).unwrap().len(), 200);
        assert!(select_centers(&pts, 0.0).is_err());
        assert!(select_centers(&pts, PI).is_err());
    }

    #[test]
    fn single_cap_covers_everything() {
        let pts = generate_equal_area(50).unwrap();
        let centers = PointSet::new(vec![UnitVector3::NORTH]).unwrap();
        let d = build_subdomains(&pts, &centers, 1.0).unwrap();
        // Southern points are outside the cap and get repaired in.
        assert_eq!(d.members()[0], (0..50).collect::<Vec<_>>());
        assert!(d.coverage_repaired());
        assert!(build_subdomains(&pts, &centers, PI / 3.0).is_err());
    }

    #[test]
    fn every_subdomain_contains_its_center() {
        let pts = generate_equal_area(300).unwrap();
        let idx = select_center_indices(&pts, 0.5).unwrap();
        let centers = pts.select(&idx).unwrap();
        let d = build_subdomains(&pts, &centers, 0.6).unwrap();
        for (j, &c) in idx.iter().enumerate() {
            assert!(d.members()[j].contains(&c));
        }
    }

    #[test]
    fn one_block_schwarz_is_exact_solve() {
        let pts = generate_equal_area(40).unwrap();
        let a = assemble_a(&pts, &kernel(1));
        let centers = PointSet::new(vec![*pts.get(39)]).unwrap();
        let d = build_subdomains(&pts, &centers, 0.5).unwrap();
        let pc = d.factorize(&a).unwrap();
        let r: Vec<f64> = (0..40).map(|i| (i as f64).cos()).collect();
        let z = pc.apply(&r);
        let exact = a.factor().unwrap().solve(&r);
        for (zi, ei) in z.iter().zip(&exact) {
            assert_abs_diff_eq!(zi, ei, epsilon = 1e-10);
        }
        assert!(pc.apply(&vec![0.0; 40]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn block_apply_with_lambda() {
        let pts = generate_equal_area(30).unwrap();
        let sys = SaddleSystem::assemble(&pts, &kernel(1), Some(2), &CappedExpField).unwrap();
        let coeffs = fourier_legendre_coeffs(WendlandOrder::One, 2, 256).unwrap();
        let lambda = assemble_lambda(&coeffs, 2).unwrap();
        let pc = BlockDiagPreconditioner::build(
            &sys,
            PrimalChoice::Exact,
            SchurChoice::Lambda,
            Some(&lambda),
            (0.5, 0.6),
        )
        .unwrap();
        let r: Vec<f64> = (0..39).map(|i| 1.0 + i as f64).collect();
        let z = pc.apply(&r);
        let a = coeffs.values();
        for c in 0..9 {
            let l = crate::harmonics::HarmonicIndex::from_flat(c).degree();
            assert_abs_diff_eq!(z[30 + c], a[l] * r[30 + c], epsilon = 1e-14);
        }
        let az = sys.a().matrix().mul_vec(&z[..30]);
        for (x, y) in az.iter().zip(&r[..30]) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-11);
        }
    }

    #[test]
    fn schur_of_single_column() {
        let pts = generate_equal_area(25).unwrap();
        let a = assemble_a(&pts, &kernel(0));
        let q = Matrix::from_fn(25, 1, |i, _| (i as f64 * 0.3).sin());
        let s = exact_schur(&a, &q).unwrap();
        let x = a.factor().unwrap().solve(&q.column(0));
        let expect: f64 = q.column(0).iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!(s[(0, 0)] > 0.0);
        assert_abs_diff_eq!(s[(0, 0)], expect, epsilon = 1e-12);
    }

    #[test]
    fn default_overlap_in_range() {
        for n in [10, 100, 2000, 8000] {
            let (nu, mu) = default_overlap(n);
            assert!(nu > 0.0 && nu < PI);
            assert!(mu > 0.0 && mu < PI / 3.0);
        }
    }

    #[test]
    fn dimension_checks() {
        let pts = generate_equal_area(10).unwrap();
        let sys = SaddleSystem::assemble(&pts, &kernel(0), Some(1), &CappedExpField).unwrap();
        let ch = sys.a().factor().unwrap();
        assert!(
            BlockDiagPreconditioner::new(10, 3, PrimalBlock::Exact(ch), DualBlock::Identity)
                .is_ok()
        );
        assert!(
            BlockDiagPreconditioner::new(11, 3, PrimalBlock::Identity, DualBlock::Identity).is_ok()
        );
        let ch = sys.a().factor().unwrap();
        assert!(
            BlockDiagPreconditioner::new(11, 3, PrimalBlock::Exact(ch), DualBlock::Identity)
                .is_err()
        );
    }
}

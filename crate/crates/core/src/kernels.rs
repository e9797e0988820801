//! Wendland radial functions, the zonal kernels they induce on the sphere,
//! Legendre polynomials and the kernels' Fourier-Legendre coefficients.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Smoothness index `m` of the Wendland function `psi_m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WendlandOrder {
    /// `(1-r)^2_+`, C^0
    Zero,
    /// `(1-r)^4_+ (4r+1)`, C^2
    One,
    /// `(1-r)^6_+ (35r^2+18r+3)`, C^4
    Two,
}

impl WendlandOrder {
    pub const ALL: [WendlandOrder; 3] =
        [WendlandOrder::Zero, WendlandOrder::One, WendlandOrder::Two];

    pub fn from_index(m: u32) -> Result<Self> {
        match m {
            0 => Ok(WendlandOrder::Zero),
            1 => Ok(WendlandOrder::One),
            2 => Ok(WendlandOrder::Two),
            _ => Err(Error::invalid(format!(
                "Wendland order must be 0, 1 or 2, got {m}"
            ))),
        }
    }

    pub fn index(self) -> u32 {
        match self {
            WendlandOrder::Zero => 0,
            WendlandOrder::One => 1,
            WendlandOrder::Two => 2,
        }
    }
}

/// `psi_m(r)`, zero for `r >= 1`.
#[inline]
pub fn wendland_psi(order: WendlandOrder, r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let s = 1.0 - r;
    match order {
        WendlandOrder::Zero => s * s,
        WendlandOrder::One => {
            let s2 = s * s;
            s2 * s2 * (4.0 * r + 1.0)
        }
        WendlandOrder::Two => {
            let s2 = s * s;
            s2 * s2 * s2 * ((35.0 * r + 18.0) * r + 3.0)
        }
    }
}

/// Zonal kernel `phi(x, y) = Phi(x . y) = psi_m(|x - y|)` on the unit sphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZonalKernel {
    order: WendlandOrder,
}

impl ZonalKernel {
    pub fn new(order: WendlandOrder) -> Self {
        ZonalKernel { order }
    }

    pub fn order(&self) -> WendlandOrder {
        self.order
    }

    /// Exponent `2s` in `a_l ~ (l+1)^{-2s}`; on S^2 this is `2m + 3`.
    /// Informational only: computations use the quadrature coefficients.
    pub fn decay_exponent(&self) -> f64 {
        2.0 * self.order.index() as f64 + 3.0
    }

    /// `Phi(1) = psi_m(0)`, the diagonal of every interpolation matrix.
    pub fn peak(&self) -> f64 {
        wendland_psi(self.order, 0.0)
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        kernel_value(self, t)
    }
}

/// `Phi(t) = psi_m(sqrt(2 - 2t))`; exactly zero for `t <= 1/2`.
#[inline]
pub fn kernel_value(kernel: &ZonalKernel, t: f64) -> f64 {
    if t <= 0.5 {
        return 0.0;
    }
    let r = (2.0 - 2.0 * t.min(1.0)).sqrt();
    wendland_psi(kernel.order, r)
}

/// Classical Legendre polynomial with `P_l(1) = 1`.
pub fn legendre_p(l: usize, t: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => t,
        _ => {
            let (mut p0, mut p1) = (1.0, t);
            for k in 1..l {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// Fills `out[l] = P_l(t)` for `l = 0..out.len()`.
pub fn legendre_all(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = t;
    }
    for l in 1..out.len().saturating_sub(1) {
        let lf = l as f64;
        out[l + 1] = ((2.0 * lf + 1.0) * t * out[l] - lf * out[l - 1]) / (lf + 1.0);
    }
}

/// Fourier-Legendre coefficients `a_0..=a_lmax` of a zonal kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable {
    order: WendlandOrder,
    a: Vec<f64>,
}

pub const COEFF_CSV_HEADER: &str = "l,a_l";

impl CoefficientTable {
    /// Wraps externally obtained coefficients; all must be finite and positive.
    pub fn new(order: WendlandOrder, a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::invalid("coefficient table is empty"));
        }
        if let Some((degree, &value)) = a
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::QuadratureFailure { degree, value });
        }
        Ok(CoefficientTable { order, a })
    }

    pub fn order(&self) -> WendlandOrder {
        self.order
    }

    pub fn l_max(&self) -> usize {
        self.a.len() - 1
    }

    pub fn get(&self, l: usize) -> Option<f64> {
        self.a.get(l).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.a
    }

    /// `sum_l a_l (2l+1)/(4 pi) P_l(t)`, the truncated kernel expansion.
    pub fn resum(&self, t: f64) -> f64 {
        let mut p = vec![0.0; self.a.len()];
        legendre_all(t, &mut p);
        self.a
            .iter()
            .zip(&p)
            .enumerate()
            .map(|(l, (a, pl))| a * (2 * l + 1) as f64 / (4.0 * PI) * pl)
            .sum()
    }

    /// CSV with header `l,a_l`. With `scaled_column`, a third column
    /// `(l+1)^5*a_l` is appended.
    pub fn to_csv(&self, scaled_column: bool) -> String {
        let mut s = String::new();
        if scaled_column {
            let _ = writeln!(s, "{COEFF_CSV_HEADER},(l+1)^5*a_l");
        } else {
            let _ = writeln!(s, "{COEFF_CSV_HEADER}");
        }
        for (l, a) in self.a.iter().enumerate() {
            if scaled_column {
                let scaled = ((l + 1) as f64).powi(5) * a;
                let _ = writeln!(s, "{l},{a:.16e},{scaled:.16e}");
            } else {
                let _ = writeln!(s, "{l},{a:.16e}");
            }
        }
        s
    }

    /// Parses the CSV written by [`to_csv`](Self::to_csv); extra columns are ignored.
    pub fn from_csv(order: WendlandOrder, text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let perr = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        match lines.next() {
            Some((_, h)) if h.trim().starts_with(COEFF_CSV_HEADER) => {}
            _ => return Err(perr(1, format!("expected header {COEFF_CSV_HEADER:?}"))),
        }
        let mut a = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let l: usize = fields
                .next()
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| perr(i + 1, "bad degree field".into()))?;
            if l != a.len() {
                return Err(perr(
                    i + 1,
                    format!("expected degree {}, found {l}", a.len()),
                ));
            }
            let v: f64 = fields
                .next()
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| perr(i + 1, "bad coefficient field".into()))?;
            a.push(v);
        }
        CoefficientTable::new(order, a)
    }
}

/// Default node count: `max(256, 2 l_max + 64)`.
pub fn default_node_count(l_max: usize) -> usize {
    (2 * l_max + 64).max(256)
}

/// `a_l = 2 pi int_{-1}^{1} Phi(t) P_l(t) dt` for `l = 0..=l_max`.
///
/// `Phi` vanishes below `t = 1/2`, so only `[1/2, 1]` contributes. There the
/// substitution `t = 1 - r^2/2` (`r` the chordal distance) turns the
/// integrand into the polynomial `psi_m(r) P_l(1 - r^2/2) r` on `r in [0, 1]`,
/// which an `n_nodes` Gauss-Legendre rule integrates exactly once
/// `n_nodes > l + m + 4`. Integrating in `t` directly would meet the
/// `sqrt(1 - t)` branch point at `t = 1`.
pub fn fourier_legendre_coeffs(
    order: WendlandOrder,
    l_max: usize,
    n_nodes: usize,
) -> Result<CoefficientTable> {
    if n_nodes < 2 * l_max + 32 {
        return Err(Error::invalid(format!(
            "need at least 2*l_max + 32 = {} quadrature nodes, got {n_nodes}",
            2 * l_max + 32
        )));
    }
    let rule = GaussLegendre::new(n_nodes)?;
    let (r, w) = rule.mapped(0.0, 1.0);
    let mut a = vec![0.0; l_max + 1];
    let mut p = vec![0.0; l_max + 1];
    for (&ri, &wi) in r.iter().zip(&w) {
        let weight = wi * wendland_psi(order, ri) * ri;
        legendre_all(1.0 - 0.5 * ri * ri, &mut p);
        for (al, pl) in a.iter_mut().zip(&p) {
            *al += weight * pl;
        }
    }
    for al in a.iter_mut() {
        *al *= 2.0 * PI;
    }
    CoefficientTable::new(order, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn psi_examples() {
        assert_eq!(wendland_psi(WendlandOrder::Zero, 0.0), 1.0);
        assert_eq!(wendland_psi(WendlandOrder::One, 0.0), 1.0);
        assert_eq!(wendland_psi(WendlandOrder::Two, 0.0), 3.0);
        assert_abs_diff_eq!(
            wendland_psi(WendlandOrder::One, 0.5),
            0.1875,
            epsilon = 1e-16
        );
        assert_eq!(wendland_psi(WendlandOrder::One, 1.2), 0.0);
        assert_eq!(wendland_psi(WendlandOrder::Two, 1.0), 0.0);
    }

    #[test]
    fn kernel_value_examples() {
        for order in WendlandOrder::ALL {
            let k = ZonalKernel::new(order);
            assert_eq!(k.value(1.0), wendland_psi(order, 0.0));
            assert_eq!(k.value(0.5), 0.0);
            assert_eq!(k.value(-1.0), 0.0);
            assert_eq!(k.value(0.3), 0.0);
        }
        let k0 = ZonalKernel::new(WendlandOrder::Zero);
        assert_abs_diff_eq!(k0.value(0.875), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn decay_exponents() {
        assert_eq!(ZonalKernel::new(WendlandOrder::Zero).decay_exponent(), 3.0);
        assert_eq!(ZonalKernel::new(WendlandOrder::One).decay_exponent(), 5.0);
        assert_eq!(ZonalKernel::new(WendlandOrder::Two).decay_exponent(), 7.0);
        assert!(WendlandOrder::from_index(3).is_err());
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre_p(0, 0.3), 1.0);
        assert_eq!(legendre_p(1, 0.3), 0.3);
        assert_abs_diff_eq!(legendre_p(2, 0.5), -0.125, epsilon = 1e-16);
        assert_eq!(legendre_p(10, 1.0), 1.0);
        assert_eq!(legendre_p(200, 1.0), 1.0);
    }

    #[test]
    fn legendre_all_matches_single() {
        let mut p = vec![0.0; 31];
        legendre_all(-0.37, &mut p);
        for (l, v) in p.iter().enumerate() {
            assert_eq!(*v, legendre_p(l, -0.37));
        }
    }

    #[test]
    fn coefficient_node_count_checked() {
        assert!(fourier_legendre_coeffs(WendlandOrder::One, 10, 51).is_err());
        assert!(fourier_legendre_coeffs(WendlandOrder::One, 10, 52).is_ok());
    }

    #[test]
    fn table_rejects_nonpositive() {
        assert!(matches!(
            CoefficientTable::new(WendlandOrder::Zero, vec![1.0, 0.0]),
            Err(Error::QuadratureFailure { degree: 1, .. })
        ));
        assert!(CoefficientTable::new(WendlandOrder::Zero, vec![f64::NAN]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = fourier_legendre_coeffs(WendlandOrder::One, 12, 256).unwrap();
        for fig in [false, true] {
            let csv = t.to_csv(fig);
            let back =
                CoefficientTable::from_csv(WendlandOrder::One, &csv, Path::new("mem")).unwrap();
            assert_eq!(back, t);
        }
        assert!(
            CoefficientTable::from_csv(WendlandOrder::One, "x,y\n0,1\n", Path::new("mem")).is_err()
        );
        assert!(
            CoefficientTable::from_csv(WendlandOrder::One, "l,a_l\n1,1\n", Path::new("mem"))
                .is_err()
        );
    }
}

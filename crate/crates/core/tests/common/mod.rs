//! Independent reference computations shared by the integration tests.
#![allow(dead_code, clippy::excessive_precision)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphere_hybrid::dense::Matrix;
use sphere_hybrid::sphere_points::UnitVector3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform on the sphere: uniform height and longitude.
pub fn random_unit(rng: &mut impl Rng) -> UnitVector3 {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - z * z).max(0.0).sqrt();
    UnitVector3::normalized(s * phi.cos(), s * phi.sin(), z).unwrap()
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn to_nalgebra(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut ev: Vec<f64> = to_nalgebra(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Wendland functions written out in the distance variable.
pub fn wendland(m: u32, r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let s = 1.0 - r;
    match m {
        0 => s * s,
        1 => s.powi(4) * (4.0 * r + 1.0),
        2 => s.powi(6) * (35.0 * r * r + 18.0 * r + 3.0),
        _ => unreachable!(),
    }
}

/// Zonal kernel in the inner-product variable.
pub fn phi(m: u32, t: f64) -> f64 {
    wendland(m, (2.0 - 2.0 * t).max(0.0).sqrt())
}

/// Legendre polynomial by Bonnet's recurrence.
pub fn legendre(l: usize, t: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, t);
    if l == 0 {
        return p0;
    }
    for k in 1..l {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * t * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
pub const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod 7/15 panel: (Kronrod estimate, |Kronrod - Gauss|,
/// Kronrod estimate of the integral of |f|).
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for j in 0..7 {
        let (lo, hi) = (f(c - h * XGK[j]), f(c + h * XGK[j]));
        k += WGK[j] * (lo + hi);
        abs += WGK[j] * (lo.abs() + hi.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * (lo + hi);
        }
    }
    (k * h, ((k - g) * h).abs(), abs * h.abs())
}

/// Adaptive bisection on Gauss-Kronrod panels. A panel is accepted once its
/// error estimate is below its length share of `tol`, or at round-off level.
pub fn adaptive_integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, density: f64, depth: u32) -> f64 {
        let (v, err, abs) = gk15(f, a, b);
        if err <= density * (b - a).abs() || err <= 8.0 * f64::EPSILON * abs || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, density, depth - 1) + rec(f, m, b, density, depth - 1)
    }
    rec(f, a, b, tol / (b - a).abs(), 60)
}

/// `2 pi int_{1/2}^{1} phi(t) P_l(t) dt`, integrated in the original variable.
pub fn oracle_coefficient(m: u32, l: usize) -> f64 {
    2.0 * std::f64::consts::PI
        * adaptive_integrate(&|t| phi(m, t) * legendre(l, t), 0.5, 1.0, 1e-16)
}

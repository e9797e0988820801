//! Point sets on the unit sphere: generation by the generalized spiral,
//! the capped experiment layout, mesh norm and separation estimates, and
//! a plain-text file format.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-12;
const DISTINCT_TOL: f64 = 1e-10;

/// Longitude step constant of the generalized spiral.
const SPIRAL_STEP: f64 = 3.6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVector3 {
    x: f64,
    y: f64,
    z: f64,
}

impl UnitVector3 {
    /// Accepts a vector whose norm is already 1 to within 1e-12.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n2 = x * x + y * y + z * z;
        if !n2.is_finite() || (n2 - 1.0).abs() > UNIT_TOL {
            return Err(Error::invalid(format!(
                "({x}, {y}, {z}) is not a unit vector (|v|^2 = {n2})"
            )));
        }
        Ok(UnitVector3 { x, y, z })
    }

    /// Projects an arbitrary nonzero vector onto the sphere.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid(
                "cannot normalize a zero or non-finite vector",
            ));
        }
        Ok(UnitVector3 {
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    /// Point at colatitude `theta` and longitude `phi`.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        UnitVector3 {
            x: st * cp,
            y: st * sp,
            z: ct,
        }
    }

    pub const NORTH: UnitVector3 = UnitVector3 {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };
    pub const SOUTH: UnitVector3 = UnitVector3 {
        x: 0.0,
        y: 0.0,
        z: -1.0,
    };

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(&self, other: &UnitVector3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn neg(&self) -> UnitVector3 {
        UnitVector3 {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

/// Great-circle distance in radians.
#[inline]
pub fn geodesic_distance(a: &UnitVector3, b: &UnitVector3) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos()
}

/// An ordered, nonempty list of pairwise distinct points on the sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    points: Vec<UnitVector3>,
}

impl PointSet {
    /// Validates distinctness with an O(n^2) scan.
    pub fn new(points: Vec<UnitVector3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("a point set needs at least one point"));
        }
        let set = PointSet { points };
        if set.len() >= 2 {
            let (i, j, d) = closest_pair(&set.points);
            if d <= DISTINCT_TOL {
                return Err(Error::invalid(format!(
                    "points {i} and {j} coincide (separation {d:e})"
                )));
            }
        }
        Ok(set)
    }

    /// Skips the distinctness scan. Used by generators whose output is
    /// distinct by construction.
    pub(crate) fn from_trusted(points: Vec<UnitVector3>) -> Self {
        debug_assert!(!points.is_empty());
        PointSet { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[UnitVector3] {
        &self.points
    }

    pub fn get(&self, i: usize) -> &UnitVector3 {
        &self.points[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, UnitVector3> {
        self.points.iter()
    }

    /// Subset on the given indices, in that order.
    pub fn select(&self, idx: &[usize]) -> Result<PointSet> {
        PointSet::new(idx.iter().map(|&i| self.points[i]).collect())
    }

    /// Number of points within geodesic distance `radius` (inclusive) of `axis`.
    pub fn count_in_cap(&self, cap: &CapSpec) -> usize {
        self.points.iter().filter(|p| cap.contains(p)).count()
    }

    /// Writes one `x y z` line per point with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.len() * 72);
        for p in &self.points {
            let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
        }
        s
    }

    pub fn from_text(text: &str, origin: &Path) -> Result<PointSet> {
        let mut pts = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: lineno + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(perr(format!("expected 3 fields, found {}", fields.len())));
            }
            let mut v = [0.0; 3];
            for (slot, f) in v.iter_mut().zip(&fields) {
                *slot = f
                    .parse()
                    .map_err(|e| perr(format!("bad number {f:?}: {e}")))?;
            }
            let p = UnitVector3::new(v[0], v[1], v[2]).map_err(|e| perr(e.to_string()))?;
            pts.push(p);
        }
        PointSet::new(pts)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: &Path) -> Result<PointSet> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PointSet::from_text(&text, path)
    }
}

/// A spherical cap: all points within `radius` radians of `axis`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapSpec {
    axis: UnitVector3,
    radius: f64,
}

impl CapSpec {
    pub fn new(axis: UnitVector3, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < PI) {
            return Err(Error::invalid(format!(
                "cap radius must lie in (0, pi), got {radius}"
            )));
        }
        Ok(CapSpec { axis, radius })
    }

    /// The layout used in the experiments: 0.1 rad about the z axis.
    pub fn north_polar(radius: f64) -> Result<Self> {
        CapSpec::new(UnitVector3::NORTH, radius)
    }

    pub fn axis(&self) -> &UnitVector3 {
        &self.axis
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Membership uses `<=`.
    pub fn contains(&self, p: &UnitVector3) -> bool {
        geodesic_distance(&self.axis, p) <= self.radius
    }
}

/// Spiral longitudes for the given heights; first longitude is zero,
/// `n_eff` is the point count the spacing rule is calibrated to.
fn spiral_longitudes(heights: &[f64], n_eff: f64, pin_last: bool) -> Vec<f64> {
    let n = heights.len();
    let mut phi = vec![0.0; n];
    for k in 1..n {
        if pin_last && k == n - 1 {
            break;
        }
        let h = heights[k];
        phi[k] = (phi[k - 1] + SPIRAL_STEP / (n_eff * (1.0 - h * h)).sqrt()).rem_euclid(TAU);
    }
    phi
}

fn from_heights(heights: &[f64], phi: &[f64]) -> Vec<UnitVector3> {
    heights
        .iter()
        .zip(phi)
        .map(|(&h, &p)| {
            let s = (1.0 - h * h).max(0.0).sqrt();
            let (sp, cp) = p.sin_cos();
            UnitVector3 {
                x: s * cp,
                y: s * sp,
                z: h,
            }
        })
        .collect()
}

fn spiral_points(n: usize) -> Vec<UnitVector3> {
    let denom = (n - 1) as f64;
    let heights: Vec<f64> = (0..n).map(|k| -1.0 + 2.0 * k as f64 / denom).collect();
    let phi = spiral_longitudes(&heights, n as f64, true);
    from_heights(&heights, &phi)
}

/// Equal-area generalized spiral with `n >= 2` points from the south pole
/// to the north pole.
pub fn generate_equal_area(n: usize) -> Result<PointSet> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "equal-area spiral needs n >= 2, got {n}"
        )));
    }
    Ok(PointSet::from_trusted(spiral_points(n)))
}

/// Equal-area spiral restricted to a cap about the north pole, mapped to
/// `cap.axis`. Heights sit at the midpoints of `n` equal-area bands of
/// `[cos(radius), 1]`, so every point is strictly inside the cap.
fn cap_spiral(n: usize, cap: &CapSpec) -> Vec<UnitVector3> {
    if n == 0 {
        return Vec::new();
    }
    let lo = cap.radius.cos();
    let span = 1.0 - lo;
    let heights: Vec<f64> = (0..n)
        .map(|k| lo + span * (2 * k + 1) as f64 / (2 * n) as f64)
        .collect();
    // A whole-sphere spiral of this density would hold n * 2 / span points.
    let n_eff = n as f64 * 2.0 / span;
    let phi = spiral_longitudes(&heights, n_eff, false);
    let local = from_heights(&heights, &phi);
    let frame = Frame::with_pole(&cap.axis);
    local.iter().map(|p| frame.to_world(p)).collect()
}

/// Orthonormal frame whose third axis is a given unit vector.
struct Frame {
    e1: [f64; 3],
    e2: [f64; 3],
    e3: [f64; 3],
}

impl Frame {
    fn with_pole(pole: &UnitVector3) -> Frame {
        let e3 = pole.to_array();
        if (e3[2] - 1.0).abs() < 1e-15 {
            return Frame {
                e1: [1.0, 0.0, 0.0],
                e2: [0.0, 1.0, 0.0],
                e3,
            };
        }
        // Gram-Schmidt against the coordinate axis least aligned with the pole.
        let k = (0..3)
            .min_by(|&a, &b| e3[a].abs().total_cmp(&e3[b].abs()))
            .unwrap();
        let mut a = [0.0; 3];
        a[k] = 1.0;
        let d = a[0] * e3[0] + a[1] * e3[1] + a[2] * e3[2];
        let mut e1 = [a[0] - d * e3[0], a[1] - d * e3[1], a[2] - d * e3[2]];
        let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
        e1.iter_mut().for_each(|v| *v /= n1);
        let e2 = [
            e3[1] * e1[2] - e3[2] * e1[1],
            e3[2] * e1[0] - e3[0] * e1[2],
            e3[0] * e1[1] - e3[1] * e1[0],
        ];
        Frame { e1, e2, e3 }
    }

    fn to_world(&self, p: &UnitVector3) -> UnitVector3 {
        let c = |i: usize| p.x * self.e1[i] + p.y * self.e2[i] + p.z * self.e3[i];
        let (x, y, z) = (c(0), c(1), c(2));
        let n = (x * x + y * y + z * z).sqrt();
        UnitVector3 {
            x: x / n,
            y: y / n,
            z: z / n,
        }
    }
}

/// Whole-sphere spiral points outside `cap`, followed by `n_cap` spiral
/// points inside it; `n_total` points in all.
///
/// The whole-sphere count is increased from `n_total - n_cap` until enough
/// points survive the cap discard; surplus survivors with the largest
/// spiral index are dropped.
pub fn generate_experiment_set(n_total: usize, cap: &CapSpec, n_cap: usize) -> Result<PointSet> {
    if n_cap >= n_total {
        return Err(Error::invalid(format!(
            "cap count {n_cap} must be smaller than the total {n_total}"
        )));
    }
    let target = n_total - n_cap;
    // Fraction of the sphere outside the cap bounds how far we may need to go.
    let outside = (1.0 + cap.radius.cos()) / 2.0;
    let limit = ((target as f64 / outside) * 2.0) as usize + 64;
    let mut n = target.max(2);
    let mut outer = loop {
        let survivors: Vec<UnitVector3> = spiral_points(n)
            .into_iter()
            .filter(|p| !cap.contains(p))
            .collect();
        if survivors.len() >= target {
            break survivors;
        }
        n += 1;
        if n > limit {
            return Err(Error::invalid(format!(
                "cannot place {target} points outside a cap of radius {}",
                cap.radius
            )));
        }
    };
    outer.truncate(target);
    outer.extend(cap_spiral(n_cap, cap));
    Ok(PointSet::from_trusted(outer))
}

/// `(i, j, distance)` of the closest pair, brute force.
fn closest_pair(points: &[UnitVector3]) -> (usize, usize, f64) {
    // Largest dot product is the smallest angle; one acos at the end.
    let mut best = (0, 1, f64::NEG_INFINITY);
    for i in 0..points.len() {
        let p = &points[i];
        for (j, q) in points.iter().enumerate().skip(i + 1) {
            let d = p.dot(q);
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    let (i, j, d) = best;
    // acos loses accuracy near 1; use the chord for tiny angles.
    let a = &points[i];
    let b = &points[j];
    let chord = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt();
    let angle = if d > 0.99 {
        2.0 * (chord / 2.0).asin()
    } else {
        d.clamp(-1.0, 1.0).acos()
    };
    (i, j, angle)
}

/// Smallest pairwise geodesic distance. Requires at least two points.
pub fn min_separation(points: &PointSet) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid("min_separation needs at least two points"));
    }
    Ok(closest_pair(&points.points).2)
}

/// Default probe count for [`mesh_norm`]: twenty probes per data point.
pub fn default_probe_density(n: usize) -> usize {
    (20 * n).max(2)
}

/// Probe-grid estimate of the mesh norm: the largest distance from any of
/// `probe_density` equal-area probe points to its nearest data point.
///
/// This is a lower estimate of the true supremum over the sphere; it
/// converges to it as the probe grid is refined.
pub fn mesh_norm(points: &PointSet, probe_density: usize) -> Result<f64> {
    if probe_density < points.len() || probe_density < 2 {
        return Err(Error::invalid(format!(
            "probe density {probe_density} must be at least the point count {} (and >= 2)",
            points.len()
        )));
    }
    let probes = spiral_points(probe_density);
    Ok(mesh_norm_on(points, &probes))
}

pub(crate) fn mesh_norm_on(points: &PointSet, probes: &[UnitVector3]) -> f64 {
    let mut worst_dot = f64::INFINITY;
    for q in probes {
        let nearest = points
            .points
            .iter()
            .fold(f64::NEG_INFINITY, |m, p| m.max(p.dot(q)));
        worst_dot = worst_dot.min(nearest);
    }
    worst_dot.clamp(-1.0, 1.0).acos()
}

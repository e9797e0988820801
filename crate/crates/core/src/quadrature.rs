//! Gauss-Legendre rules computed by Newton iteration on the Legendre
//! three-term recurrence.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Nodes and weights of an `n`-point rule on `[-1, 1]`, nodes ascending.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// `(P_n(x), P_n'(x))` by the recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid(
                "a Gauss-Legendre rule needs at least one node",
            ));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        // Roots are symmetric; solve for the upper half only.
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess for the (i+1)-th largest root.
            let theta = PI * (4.0 * i as f64 + 3.0) / (4.0 * nf + 2.0);
            let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
            let mut converged = false;
            for _ in 0..NEWTON_MAX_ITER {
                let (p, d) = legendre_with_derivative(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() <= NEWTON_TOL {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::invalid(format!(
                    "Newton iteration for Gauss-Legendre node {i} of {n} did not converge"
                )));
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[n - 1 - i] = x;
            nodes[i] = -x;
            weights[n - 1 - i] = w;
            weights[i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(GaussLegendre { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let x = self.nodes.iter().map(|t| mid + half * t).collect();
        let w = self.weights.iter().map(|w| half * w).collect();
        (x, w)
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let (x, w) = self.mapped(a, b);
        x.iter().zip(&w).map(|(&xi, &wi)| wi * f(xi)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 3, 7, 64, 256, 513] {
            let g = GaussLegendre::new(n).unwrap();
            let s: f64 = g.weights().iter().sum();
            assert_abs_diff_eq!(s, 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn known_small_rules() {
        let g = GaussLegendre::new(2).unwrap();
        assert_abs_diff_eq!(g.nodes()[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        let g = GaussLegendre::new(3).unwrap();
        assert_abs_diff_eq!(g.nodes()[2], (0.6f64).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(g.weights()[1], 8.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.weights()[0], 5.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn exact_for_polynomials_up_to_2n_minus_1() {
        let n = 12;
        let g = GaussLegendre::new(n).unwrap();
        for k in 0..2 * n {
            let got = g.integrate(0.0, 1.0, |x| x.powi(k as i32));
            assert_abs_diff_eq!(got, 1.0 / (k as f64 + 1.0), epsilon = 1e-14);
        }
    }

    #[test]
    fn nodes_ascending_and_interior() {
        let g = GaussLegendre::new(100).unwrap();
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(g.nodes()[0] > -1.0 && g.nodes()[99] < 1.0);
    }
}

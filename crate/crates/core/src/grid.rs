//! Uniform midpoint-rule discretization of an interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cell-midpoint nodes and equal weights on `(a, b)`.
///
/// Nodes are placed symmetrically about the interval centre, so on a
/// symmetric interval `x_k == -x_{n-1-k}` holds exactly in floating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    a: f64,
    b: f64,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidDomain(format!(
                "need finite a < b, got ({a}, {b})"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidDomain("cell count must be positive".into()));
        }
        let h = (b - a) / n as f64;
        let mid = 0.5 * (a + b);
        let half = 0.5 * n as f64;
        let points = (0..n)
            .map(|k| mid + (k as f64 + 0.5 - half) * h)
            .collect();
        Ok(Self {
            a,
            b,
            points,
            weights: vec![h; n],
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Midpoint quadrature `Σ f_k w_k`.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.n() {
            return Err(Error::Dimension(format!(
                "{} samples on a grid of {} nodes",
                samples.len(),
                self.n()
            )));
        }
        Ok(samples
            .iter()
            .zip(&self.weights)
            .map(|(f, w)| f * w)
            .sum())
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.points.iter().map(|&x| f(x)).collect()
    }

    /// Same interval with twice as many cells.
    pub fn refined(&self) -> Self {
        Self::new(self.a, self.b, 2 * self.n()).expect("refinement of a valid grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_cells_on_symmetric_interval() {
        let g = Grid::new(-1.0, 1.0, 4).unwrap();
        assert_eq!(g.points(), &[-0.75, -0.25, 0.25, 0.75]);
        assert_eq!(g.weights(), &[0.5; 4]);
    }

    #[test]
    fn single_cell() {
        let g = Grid::new(0.0, 1.0, 1).unwrap();
        assert_eq!(g.points(), &[0.5]);
        assert_eq!(g.weights(), &[1.0]);
    }

    #[test]
    fn weights_partition_the_interval() {
        for n in [1, 7, 200, 401] {
            let g = Grid::new(-1.0, 1.0, n).unwrap();
            let total: f64 = g.weights().iter().sum();
            assert!((total - 2.0).abs() <= 2.0 * 1e-14, "n={n}: {total}");
        }
    }

    #[test]
    fn points_strictly_increasing_inside_interval() {
        let g = Grid::new(0.3, 2.9, 57).unwrap();
        assert!(g.points().windows(2).all(|w| w[0] < w[1]));
        assert!(g.points().iter().all(|&x| x > 0.3 && x < 2.9));
        let h = 2.6 / 57.0;
        for (k, &x) in g.points().iter().enumerate() {
            assert!((x - (0.3 + (k as f64 + 0.5) * h)).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetric_nodes_are_exact_mirrors() {
        let g = Grid::new(-1.0, 1.0, 400).unwrap();
        let p = g.points();
        for k in 0..p.len() {
            assert_eq!(p[k], -p[p.len() - 1 - k]);
        }
    }

    #[test]
    fn invalid_domains_rejected() {
        assert!(matches!(Grid::new(1.0, 1.0, 3), Err(Error::InvalidDomain(_))));
        assert!(matches!(Grid::new(2.0, 1.0, 3), Err(Error::InvalidDomain(_))));
        assert!(matches!(Grid::new(0.0, 1.0, 0), Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn integrate_constants_and_odd_functions() {
        for n in [3, 10, 101] {
            let g = Grid::new(-1.0, 1.0, n).unwrap();
            assert!((g.integrate(&vec![1.0; n]).unwrap() - 2.0).abs() < 1e-14);
            assert!(g.integrate(&g.sample(|x| x)).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn integrate_rejects_length_mismatch() {
        let g = Grid::new(-1.0, 1.0, 4).unwrap();
        assert!(matches!(g.integrate(&[1.0; 3]), Err(Error::Dimension(_))));
    }

    fn midpoint_error(f: fn(f64) -> f64, exact: f64, n: usize) -> f64 {
        let g = Grid::new(-1.0, 1.0, n).unwrap();
        (g.integrate(&g.sample(f)).unwrap() - exact).abs()
    }

    #[test]
    fn second_order_convergence() {
        let exp_exact = std::f64::consts::E - 1.0 / std::f64::consts::E;
        let cases: [(fn(f64) -> f64, f64); 2] = [(|x| x * x, 2.0 / 3.0), (f64::exp, exp_exact)];
        for (f, exact) in cases {
            let errs: Vec<f64> = [50, 100, 200]
                .iter()
                .map(|&n| midpoint_error(f, exact, n))
                .collect();
            for w in errs.windows(2) {
                let ratio = w[0] / w[1];
                assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
            }
        }
    }

    #[test]
    fn integrate_is_linear() {
        let g = Grid::new(-1.0, 1.0, 64).unwrap();
        let f = g.sample(|x| x.sin());
        let h = g.sample(|x| x * x * x + 1.0);
        let (alpha, beta) = (2.5, -0.75);
        let combo: Vec<f64> = f.iter().zip(&h).map(|(a, b)| alpha * a + beta * b).collect();
        let lhs = g.integrate(&combo).unwrap();
        let rhs = alpha * g.integrate(&f).unwrap() + beta * g.integrate(&h).unwrap();
        assert!((lhs - rhs).abs() < 1e-14);
    }
}

//! Space-time grid description shared by every module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `(0, lambda) x [0, horizon]`.
///
/// `nx` counts *interior* space nodes, so `dx = lambda / (nx + 1)` and the
/// Dirichlet walls sit at node indices `0` and `nx + 1`. `nt` counts time
/// steps, `dt = horizon / nt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub nt: usize,
    pub lambda: f64,
    pub horizon: f64,
}

impl GridSpec {
    pub fn new(nx: usize, nt: usize, lambda: f64, horizon: f64) -> Result<Self> {
        if nx == 0 || nt == 0 {
            return Err(Error::Usage("grid needs nx >= 1 and nt >= 1".into()));
        }
        if !(lambda > 0.0) || !(horizon > 0.0) {
            return Err(Error::Domain(format!(
                "grid needs lambda > 0 and horizon > 0, got lambda={lambda}, horizon={horizon}"
            )));
        }
        Ok(GridSpec {
            nx,
            nt,
            lambda,
            horizon,
        })
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.lambda / (self.nx + 1) as f64
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.horizon / self.nt as f64
    }

    /// Space coordinate of node `i`; index 0 and `nx + 1` are the walls.
    /// The far wall is pinned to `lambda` exactly (the product
    /// `(nx + 1) * dx` can round a hair off it).
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx + 1 {
            self.lambda
        } else {
            i as f64 * self.dx()
        }
    }

    #[inline]
    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt()
    }

    /// Explicit-scheme stability number `alpha dt / dx^2`.
    pub fn diffusion_number(&self, alpha: f64) -> f64 {
        alpha * self.dt() / (self.dx() * self.dx())
    }

    /// Sample a profile at all nodes including the walls (`nx + 2` values).
    pub fn sample_profile<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.nx + 2).map(|i| f(self.x(i))).collect()
    }

    /// Sample a profile at interior nodes only (`nx` values).
    pub fn sample_interior<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (1..=self.nx).map(|i| f(self.x(i))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing() {
        let g = GridSpec::new(63, 100, 1.0, 0.5).unwrap();
        assert!((g.dx() - 1.0 / 64.0).abs() < 1e-15);
        assert!((g.dt() - 0.005).abs() < 1e-15);
        assert_eq!(g.x(0), 0.0);
        assert!((g.x(64) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(GridSpec::new(0, 10, 1.0, 1.0).is_err());
        assert!(GridSpec::new(10, 0, 1.0, 1.0).is_err());
        assert!(GridSpec::new(10, 10, -1.0, 1.0).is_err());
        assert!(GridSpec::new(10, 10, 1.0, 0.0).is_err());
    }
}

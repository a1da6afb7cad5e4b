//! Uniform square grid on the periodic window [-L, L)^2.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Uniform discretization of the window [-L, L)^2 with n samples per axis.
///
/// Nodes are z_{jk} = (-L + j dx) + i(-L + k dx) with dx = 2L/n, so z = 0 is
/// always the node (n/2, n/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    half_extent: f64,
}

impl Grid {
    pub fn new(n: usize, half_extent: f64) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::Config(format!("n must be a power of two, got {n}")));
        }
        if n < 16 {
            return Err(Error::Config(format!("n must be at least 16, got {n}")));
        }
        if !(half_extent > 0.0) || !half_extent.is_finite() {
            return Err(Error::Config(format!(
                "half extent must be positive and finite, got {half_extent}"
            )));
        }
        Ok(Grid { n, half_extent })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_extent / self.n as f64
    }

    /// Largest support radius admitted by the guard-band convention.
    pub fn guard_radius(&self) -> f64 {
        0.5 * self.half_extent
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major index of node (j, k); j indexes x, k indexes y.
    pub fn index(&self, j: usize, k: usize) -> usize {
        k * self.n + j
    }

    pub fn coord(&self, m: usize) -> f64 {
        -self.half_extent + self.dx() * m as f64
    }

    pub fn node(&self, j: usize, k: usize) -> Complex64 {
        Complex64::new(self.coord(j), self.coord(k))
    }

    /// Index of the node at z = 0.
    pub fn origin_index(&self) -> usize {
        self.index(self.n / 2, self.n / 2)
    }

    /// Signed integer frequency for sample index m (Nyquist mapped to -n/2).
    pub fn signed_freq(&self, m: usize) -> i64 {
        if m < self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    /// Angular wavenumber for sample index m: pi * signed(m) / L.
    pub fn wavenumber(&self, m: usize) -> f64 {
        std::f64::consts::PI * self.signed_freq(m) as f64 / self.half_extent
    }

    pub fn same_as(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "expected n={} L={}, got n={} L={}",
                self.n, self.half_extent, other.n, other.half_extent
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing() {
        assert_eq!(Grid::new(16, 1.0).unwrap().dx(), 0.125);
        assert_eq!(Grid::new(256, 2.0).unwrap().dx(), 0.015625);
    }

    #[test]
    fn rejects_non_power_of_two() {
        let err = Grid::new(10, 1.0).unwrap_err();
        assert!(err.to_string().contains("power of two"));
    }

    #[test]
    fn rejects_small_or_bad_extent() {
        assert!(Grid::new(8, 1.0).is_err());
        assert!(Grid::new(64, 0.0).is_err());
        assert!(Grid::new(64, -2.0).is_err());
    }

    #[test]
    fn origin_is_a_node() {
        let g = Grid::new(16, 1.0).unwrap();
        assert_eq!(g.node(8, 8), Complex64::new(0.0, 0.0));
        assert_eq!(g.origin_index(), g.index(8, 8));
    }

    #[test]
    fn corner_node() {
        let g = Grid::new(16, 1.0).unwrap();
        assert_eq!(g.node(0, 0), Complex64::new(-1.0, -1.0));
    }
}

//! Spatial and velocity discretizations.
//!
//! Space is a periodic box of `dim` axes (1 to 3) with `n` uniform points per
//! axis. Velocity space is always three dimensional: a cube `[-v_max, v_max]^3`
//! split into `n^3` equal cells whose midpoints carry the quadrature nodes.
//!
//! Phase-space arrays use a velocity-major layout: the value at spatial node
//! `x` and velocity node `v` lives at `v * n_space + x`, so each velocity node
//! owns a contiguous spatial line.

mod norms;
mod spectral;

pub use norms::{min_weight_exponent, norm, weighted_sup, FieldRef, NormKind};
pub use spectral::Spectral;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic spatial grid with the same resolution and period on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    dim: usize,
    n: usize,
    period: f64,
}

impl SpatialGrid {
    pub fn new(dim: usize, n: usize, period: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!("spatial dimension must be 1, 2 or 3, got {dim}")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::Config(format!("n_x must be even and >= 4, got {n}")));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::Config(format!("period must be positive, got {period}")));
        }
        Ok(Self { dim, n, period })
    }

    /// Slab grid on `[0, 2π)` along one axis.
    pub fn slab(n: usize) -> Result<Self> {
        Self::new(1, n, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Total number of spatial nodes.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.period.powi(self.dim as i32)
    }

    /// Per-axis indices of a flat node index; the last axis varies fastest.
    pub fn unindex(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    /// Coordinates of a node; axes beyond `dim` are reported as zero.
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let ijk = self.unindex(idx);
        let dx = self.spacing();
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = ijk[axis] as f64 * dx;
        }
        x
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|i| f(self.coords(i))).collect()
    }
}

/// Uniform midpoint grid on the velocity cube `[-v_max, v_max]^3`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    n: usize,
    v_max: f64,
    nodes: Vec<f64>,
}

impl VelocityGrid {
    pub fn new(n: usize, v_max: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Config(format!("n_v must be even and >= 4, got {n}")));
        }
        if !(v_max > 0.0) || !v_max.is_finite() {
            return Err(Error::Config(format!("v_max must be positive, got {v_max}")));
        }
        let h = 2.0 * v_max / n as f64;
        // Built from the centre outwards so that nodes[i] == -nodes[n-1-i] bit for bit.
        let mut nodes = vec![0.0; n];
        for i in 0..n / 2 {
            let v = (i as f64 + 0.5) * h;
            nodes[n / 2 + i] = v;
            nodes[n / 2 - 1 - i] = -v;
        }
        Ok(Self { n, v_max, nodes })
    }

    /// Nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// Cell width along one axis.
    pub fn h(&self) -> f64 {
        2.0 * self.v_max / self.n as f64
    }

    /// One-dimensional node coordinates.
    pub fn nodes_1d(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of velocity nodes in the cube.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of every node.
    pub fn weight(&self) -> f64 {
        self.h().powi(3)
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        [idx / (self.n * self.n), (idx / self.n) % self.n, idx % self.n]
    }

    pub fn node(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unindex(idx);
        [self.nodes[i], self.nodes[j], self.nodes[k]]
    }

    pub fn speed_sq(&self, idx: usize) -> f64 {
        let v = self.node(idx);
        v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
    }

    /// Index of the node at `-v`.
    pub fn mirror(&self, idx: usize) -> usize {
        let [i, j, k] = self.unindex(idx);
        let last = self.n - 1;
        self.index(last - i, last - j, last - k)
    }

    /// Fractional grid coordinate of `x` along one axis: node `i` sits at `i`.
    pub fn fractional_index(&self, x: f64) -> f64 {
        (x + self.v_max) / self.h() - 0.5
    }

    /// Samples `f` at every velocity node.
    pub fn sample(&self, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|i| f(self.node(i))).collect()
    }
}

/// Grid parameters as read from a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dim_x: usize,
    pub n_x: usize,
    pub period: f64,
    pub n_v: usize,
    pub v_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { dim_x: 1, n_x: 64, period: 2.0 * PI, n_v: 24, v_max: 6.0 }
    }
}

/// Validates a grid configuration and builds both grids.
pub fn build_grids(cfg: &GridConfig) -> Result<(SpatialGrid, VelocityGrid)> {
    Ok((SpatialGrid::new(cfg.dim_x, cfg.n_x, cfg.period)?, VelocityGrid::new(cfg.n_v, cfg.v_max)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn velocity_nodes_are_midpoints() {
        let vg = VelocityGrid::new(4, 2.0).unwrap();
        assert_eq!(vg.nodes_1d(), &[-1.5, -0.5, 0.5, 1.5]);
        assert_eq!(vg.h(), 1.0);
        assert_eq!(vg.weight(), 1.0);
        let total: f64 = (0..vg.len()).map(|_| vg.weight()).sum();
        assert_eq!(total, 64.0);
    }

    #[test]
    fn velocity_nodes_sign_symmetric() {
        for &(n, vmax) in &[(4, 2.0), (12, 6.0), (24, 6.0), (10, 3.3)] {
            let vg = VelocityGrid::new(n, vmax).unwrap();
            for idx in 0..vg.len() {
                let m = vg.mirror(idx);
                let (a, b) = (vg.node(idx), vg.node(m));
                for d in 0..3 {
                    assert_eq!(a[d], -b[d]);
                }
            }
        }
    }

    #[test]
    fn spatial_spacing() {
        let g = SpatialGrid::slab(64).unwrap();
        assert_eq!(g.spacing(), 2.0 * PI / 64.0);
        assert_eq!(g.len(), 64);
        let g3 = SpatialGrid::new(3, 8, 1.0).unwrap();
        assert_eq!(g3.len(), 512);
        assert_eq!(g3.unindex(8 * 8 + 2), [1, 0, 2]);
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(matches!(VelocityGrid::new(5, 2.0), Err(Error::Config(_))));
        assert!(matches!(VelocityGrid::new(2, 2.0), Err(Error::Config(_))));
        assert!(matches!(VelocityGrid::new(8, 0.0), Err(Error::Config(_))));
        assert!(matches!(SpatialGrid::new(1, 7, 1.0), Err(Error::Config(_))));
        assert!(matches!(SpatialGrid::new(4, 8, 1.0), Err(Error::Config(_))));
        assert!(matches!(SpatialGrid::new(1, 8, -1.0), Err(Error::Config(_))));
        let cfg = GridConfig { n_v: 7, ..GridConfig::default() };
        assert!(build_grids(&cfg).is_err());
    }
}

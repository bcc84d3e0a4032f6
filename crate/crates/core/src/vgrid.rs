//! Truncated uniform velocity grid with a cell-centred midpoint quadrature.
//!
//! Nodes are stored flat in lexicographic `(k1, k2, k3)` order with `k3`
//! running fastest. That ordering is also the on-disk layout of any
//! distribution dumped by the command-line front end.

use std::sync::Arc;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Cube `offset + [-v_max, v_max]^3` split into `n_per_axis^3` equal cells.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    n_per_axis: usize,
    v_max: f64,
    offset: Vec3,
    h: f64,
    weight: f64,
    axes: [Vec<f64>; 3],
}

impl VelocityGrid {
    pub fn new(n_per_axis: usize, v_max: f64, offset: Vec3) -> Result<Self> {
        if n_per_axis < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_per_axis must be at least 2, got {n_per_axis}"
            )));
        }
        if !(v_max > 0.0) || !v_max.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "v_max must be positive and finite, got {v_max}"
            )));
        }
        if offset.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("grid offset must be finite".into()));
        }
        let h = 2.0 * v_max / n_per_axis as f64;
        let axis = |d: usize| -> Vec<f64> {
            (0..n_per_axis)
                .map(|k| offset[d] + (-v_max + (k as f64 + 0.5) * h))
                .collect()
        };
        Ok(Self {
            n_per_axis,
            v_max,
            offset,
            h,
            weight: h * h * h,
            axes: [axis(0), axis(1), axis(2)],
        })
    }

    /// Grid centred at the origin.
    pub fn centered(n_per_axis: usize, v_max: f64) -> Result<Self> {
        Self::new(n_per_axis, v_max, [0.0; 3])
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn offset(&self) -> Vec3 {
        self.offset
    }

    /// Node spacing along each axis.
    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Quadrature weight carried by every node (`h^3`).
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn len(&self) -> usize {
        self.n_per_axis * self.n_per_axis * self.n_per_axis
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node coordinates along axis `d`.
    pub fn axis(&self, d: usize) -> &[f64] {
        &self.axes[d]
    }

    pub fn flat_index(&self, k: [usize; 3]) -> usize {
        (k[0] * self.n_per_axis + k[1]) * self.n_per_axis + k[2]
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let n = self.n_per_axis;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    pub fn velocity(&self, idx: usize) -> Vec3 {
        let [a, b, c] = self.multi_index(idx);
        [self.axes[0][a], self.axes[1][b], self.axes[2][c]]
    }

    /// All node velocities in storage order.
    pub fn velocities(&self) -> impl Iterator<Item = Vec3> + '_ {
        let [x, y, z] = &self.axes;
        x.iter().flat_map(move |&a| {
            y.iter()
                .flat_map(move |&b| z.iter().map(move |&c| [a, b, c]))
        })
    }

    /// Samples `phi` at every node.
    pub fn sample(&self, phi: impl Fn(Vec3) -> f64) -> Vec<f64> {
        self.velocities().map(phi).collect()
    }

    /// Largest speed component reachable on the grid, used for CFL bounds.
    pub fn max_abs_component(&self, d: usize) -> f64 {
        self.offset[d].abs() + self.v_max
    }
}

/// Nonnegative phase-space density sampled on a velocity grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionFunction {
    grid: Arc<VelocityGrid>,
    values: Vec<f64>,
}

impl DistributionFunction {
    pub fn new(grid: Arc<VelocityGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some((node, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0) || !v.is_finite())
        {
            return Err(Error::InvalidConfig(format!(
                "distribution value {value} at node {node} is negative or not finite"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<VelocityGrid>, phi: impl Fn(Vec3) -> f64) -> Result<Self> {
        let values = grid.sample(phi);
        Self::new(grid, values)
    }

    pub(crate) fn from_raw(grid: Arc<VelocityGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<VelocityGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &DistributionFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// `sum_k w f[k] phi(v_k)`.
    pub fn quadrature(&self, phi: impl Fn(Vec3) -> f64) -> f64 {
        let w = self.grid.weight();
        w * self
            .grid
            .velocities()
            .zip(&self.values)
            .map(|(v, &f)| f * phi(v))
            .sum::<f64>()
    }

    /// `sum_k w f[k] phi[k]` for a node-indexed function.
    pub fn quadrature_nodes(&self, phi: &[f64]) -> Result<f64> {
        if phi.len() != self.values.len() {
            return Err(Error::GridMismatch);
        }
        Ok(self.grid.weight() * dot(&self.values, phi))
    }

    pub fn mass(&self) -> f64 {
        self.grid.weight() * self.values.iter().sum::<f64>()
    }

    /// Discrete L1 distance `sum_k w |f[k] - g[k]|`.
    pub fn l1_distance(&self, other: &DistributionFunction) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self.grid.weight()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// Returns `c * f`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.values.iter().map(|v| c * v).collect(),
        )
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

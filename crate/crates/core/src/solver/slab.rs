//! Periodic one-dimensional slab: transport along `x` (first velocity
//! component) split from the relaxation with Strang splitting.

use serde::{Deserialize, Serialize};

use super::{clip_negative, step_homogeneous_dt, SolverConfig};
use crate::entropy::h_functional;
use crate::error::{Error, Result};
use crate::moments::extract_moments;
use crate::vgrid::{DistributionFunction, Vec3};

/// Largest admissible `dt * v_max / dx`.
pub const CFL_LIMIT: f64 = 0.9;

/// Slab-integrated quantities at one output time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabSnapshot {
    pub t: f64,
    pub mass: f64,
    pub momentum: Vec3,
    pub energy: f64,
    /// `sum_x dx H(f(x))`.
    pub global_h: f64,
}

#[derive(Debug, Clone)]
pub struct SlabTrajectory {
    pub config: SolverConfig,
    pub length: f64,
    pub snapshots: Vec<SlabSnapshot>,
    pub final_cells: Vec<DistributionFunction>,
    pub clipped_mass: f64,
}

impl SlabTrajectory {
    /// Largest drift of mass, momentum and energy relative to the initial
    /// mass and energy, divided by the elapsed time.
    pub fn max_invariant_drift_rate(&self) -> f64 {
        let s0 = &self.snapshots[0];
        let mom_scale = (s0.mass * s0.energy).sqrt().max(f64::MIN_POSITIVE);
        self.snapshots[1..]
            .iter()
            .map(|s| {
                let dm = (s.mass - s0.mass).abs() / s0.mass;
                let dp = (0..3)
                    .map(|d| (s.momentum[d] - s0.momentum[d]).abs() / mom_scale)
                    .fold(0.0, f64::max);
                let de = (s.energy - s0.energy).abs() / s0.energy;
                dm.max(dp).max(de) / s.t.max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// Largest step-to-step increase of the global entropy relative to `1 + |H|`.
    pub fn max_entropy_increase(&self) -> f64 {
        self.snapshots
            .windows(2)
            .map(|w| (w[1].global_h - w[0].global_h) / (1.0 + w[0].global_h.abs()))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn slab_snapshot(
    t: f64,
    cells: &[Vec<f64>],
    proto: &DistributionFunction,
    dx: f64,
) -> SlabSnapshot {
    let grid = proto.grid();
    let w = grid.weight();
    let mut mass = 0.0;
    let mut momentum = [0.0; 3];
    let mut energy = 0.0;
    let mut global_h = 0.0;
    for cell in cells {
        for (v, &f) in grid.velocities().zip(cell) {
            mass += f;
            for d in 0..3 {
                momentum[d] += f * v[d];
            }
            energy += 0.5 * f * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        }
        global_h += h_functional(&DistributionFunction::from_raw(grid.clone(), cell.clone()));
    }
    let s = w * dx;
    SlabSnapshot {
        t,
        mass: s * mass,
        momentum: momentum.map(|m| s * m),
        energy: s * energy,
        global_h: dx * global_h,
    }
}

/// First-order upwind update of every velocity slice over a periodic row of
/// cells; `courant[k] = v1_k dt / dx`.
fn transport(cells: &mut [Vec<f64>], courant: &[f64]) {
    let nx = cells.len();
    let mut column = vec![0.0; nx];
    for (k, &c) in courant.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for (x, cell) in cells.iter().enumerate() {
            column[x] = cell[k];
        }
        for x in 0..nx {
            let upd = if c > 0.0 {
                let left = column[(x + nx - 1) % nx];
                column[x] - c * (column[x] - left)
            } else {
                let right = column[(x + 1) % nx];
                column[x] - c * (right - column[x])
            };
            cells[x][k] = upd;
        }
    }
}

/// Periodic slab of length `length` with `f0.len()` cells.
pub fn run_slab_1d(
    f0: &[DistributionFunction],
    cfg: &SolverConfig,
    length: f64,
) -> Result<SlabTrajectory> {
    cfg.validate()?;
    if f0.is_empty() {
        return Err(Error::InvalidConfig("slab needs at least one cell".into()));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "slab length must be positive, got {length}"
        )));
    }
    let proto = &f0[0];
    if f0.iter().any(|f| !f.same_grid(proto)) {
        return Err(Error::GridMismatch);
    }
    let grid = proto.grid().clone();
    let nx = f0.len();
    let dx = length / nx as f64;
    let cfl = cfg.dt * grid.max_abs_component(0) / dx;
    if cfl > CFL_LIMIT {
        return Err(Error::Cfl {
            value: cfl,
            limit: CFL_LIMIT,
        });
    }
    let relax = !cfg.sigma.is_zero();
    if relax {
        for f in f0 {
            cfg.check_stability(&extract_moments(f)?, cfg.dt)?;
        }
    }

    let axis = grid.velocities().map(|v| v[0]).collect::<Vec<_>>();
    let mut cells: Vec<Vec<f64>> = f0.iter().map(|f| f.values().to_vec()).collect();
    let mut snapshots = vec![slab_snapshot(0.0, &cells, proto, dx)];
    let steps = cfg.step_count();
    let mut t = 0.0;
    let mut clipped = 0.0;
    for n in 1..=steps {
        let dt = if n == steps { cfg.t_end - t } else { cfg.dt };
        let half: Vec<f64> = axis.iter().map(|v| v * 0.5 * dt / dx).collect();
        transport(&mut cells, &half);
        if relax {
            for cell in cells.iter_mut() {
                let f = DistributionFunction::from_raw(grid.clone(), std::mem::take(cell));
                let out = step_homogeneous_dt(&f, cfg, dt)?;
                clipped += out.clipped_mass * dx;
                *cell = out.f.into_values();
            }
        }
        transport(&mut cells, &half);
        for cell in cells.iter_mut() {
            clipped += clip_negative(cell) * grid.weight() * dx;
        }
        t = if n == steps { cfg.t_end } else { t + dt };
        if n % cfg.output_stride == 0 || n == steps {
            snapshots.push(slab_snapshot(t, &cells, proto, dx));
        }
    }
    let final_cells = cells
        .into_iter()
        .map(|c| DistributionFunction::from_raw(grid.clone(), c))
        .collect();
    Ok(SlabTrajectory {
        config: *cfg,
        length,
        snapshots,
        final_cells,
        clipped_mass: clipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::EllipsoidalGaussian;
    use crate::moments::{MacroState, SymMat3};
    use crate::solver::{run_homogeneous, SigmaModel};
    use crate::vgrid::VelocityGrid;
    use std::sync::Arc;

    #[test]
    fn uniform_slab_matches_homogeneous() {
        let grid = Arc::new(VelocityGrid::centered(16, 7.0).unwrap());
        let s = MacroState::with_stress(1.0, [0.0; 3], SymMat3::diag([1.6, 0.7, 0.7]));
        let f = EllipsoidalGaussian::stress_gaussian(&s)
            .unwrap()
            .evaluate(&grid);
        let cfg = SolverConfig {
            nu: 0.5,
            dt: 0.02,
            t_end: 0.2,
            ..Default::default()
        };
        let slab = run_slab_1d(&vec![f.clone(); 4], &cfg, 10.0).unwrap();
        let hom = run_homogeneous(&f, &cfg).unwrap();
        for cell in &slab.final_cells {
            let worst = cell
                .values()
                .iter()
                .zip(hom.final_f.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(worst <= 1e-12, "{worst}");
        }
    }

    #[test]
    fn cfl_violation_rejected() {
        let grid = Arc::new(VelocityGrid::centered(8, 6.0).unwrap());
        let f = EllipsoidalGaussian::maxwellian(&MacroState::isotropic(1.0, [0.0; 3], 1.0))
            .unwrap()
            .evaluate(&grid);
        let cfg = SolverConfig {
            dt: 0.2,
            t_end: 1.0,
            sigma: SigmaModel::constant(1.0),
            ..Default::default()
        };
        // dt * v_max / dx = 0.2 * 6 / 1 = 1.2
        assert!(matches!(
            run_slab_1d(&vec![f; 4], &cfg, 4.0),
            Err(Error::Cfl { .. })
        ));
    }

    #[test]
    fn upwind_transport_conserves_each_slice() {
        let mut cells: Vec<Vec<f64>> = (0..10)
            .map(|x| vec![1.0 + (x as f64).sin(), 2.0, 0.5 * x as f64])
            .collect();
        let before: Vec<f64> = (0..3).map(|k| cells.iter().map(|c| c[k]).sum()).collect();
        transport(&mut cells, &[0.4, -0.7, 0.9]);
        for k in 0..3 {
            let after: f64 = cells.iter().map(|c| c[k]).sum();
            assert!((after - before[k]).abs() < 1e-13);
        }
        // exact shift at Courant number one
        let mut cells: Vec<Vec<f64>> = (0..5).map(|x| vec![x as f64]).collect();
        transport(&mut cells, &[1.0]);
        let got: Vec<f64> = cells.iter().map(|c| c[0]).collect();
        assert_eq!(got, vec![4.0, 0.0, 1.0, 2.0, 3.0]);
    }
}

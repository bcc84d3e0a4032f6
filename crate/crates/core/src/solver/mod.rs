//! Time integration of `df/dt = A_nu (M_nu(f) - f)`.
//!
//! `M_nu` and `A_nu` are rebuilt from the stage moments at every Runge-Kutta
//! stage. The slab variant adds periodic upwind transport along `x` through
//! Strang splitting (see [`slab`]).

use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::entropy::{cercignani_factor, entropy_production, EntropyReport};
use crate::error::{Error, Result};
use crate::gaussian::{check_nu, conservation_correct, EllipsoidalGaussian};
use crate::moments::{extract_moments, MacroState, SymMat3};
use crate::vgrid::{DistributionFunction, VelocityGrid};

pub mod slab;

pub use slab::{run_slab_1d, SlabSnapshot, SlabTrajectory, CFL_LIMIT};

/// Upper bound on `dt * A_nu` for explicit stepping.
pub const STABILITY_LIMIT: f64 = 0.5;

/// `sigma(rho, T)` in `A_nu = sigma / (1 - nu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaModel {
    Constant { value: f64 },
    PowerLaw { alpha: f64, beta: f64 },
}

impl SigmaModel {
    pub fn constant(value: f64) -> Self {
        SigmaModel::Constant { value }
    }

    pub fn sigma(&self, rho: f64, temperature: f64) -> f64 {
        match *self {
            SigmaModel::Constant { value } => value,
            SigmaModel::PowerLaw { alpha, beta } => rho.powf(alpha) * temperature.powf(beta),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self, SigmaModel::Constant { value } if value == 0.0)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SigmaModel::Constant { value } if value >= 0.0 && value.is_finite() => Ok(()),
            SigmaModel::PowerLaw { alpha, beta } if alpha >= 0.0 && beta >= 0.0 => Ok(()),
            other => Err(Error::InvalidConfig(format!(
                "invalid collision model {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub nu: f64,
    pub sigma: SigmaModel,
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub conservation_correction: bool,
    pub output_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nu: 0.0,
            sigma: SigmaModel::constant(3.0),
            dt: 0.01,
            t_end: 3.0,
            integrator: Integrator::Rk4,
            conservation_correction: false,
            output_stride: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        check_nu(self.nu)?;
        self.sigma.validate()?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if self.output_stride == 0 {
            return Err(Error::InvalidConfig(
                "output_stride must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// `A_nu = sigma(rho, T) / (1 - nu)`.
    pub fn collision_frequency(&self, state: &MacroState) -> f64 {
        self.sigma.sigma(state.rho, state.temperature) / (1.0 - self.nu)
    }

    /// Decay rate of `H(f|M_0)` guaranteed by the entropy-production bound:
    /// `min{1 + 2 nu, 1 - nu} A_nu`.
    pub fn bound_rate(&self, state: &MacroState) -> f64 {
        cercignani_factor(self.nu) * self.collision_frequency(state)
    }

    pub fn check_stability(&self, state: &MacroState, dt: f64) -> Result<()> {
        let value = dt * self.collision_frequency(state);
        if value > STABILITY_LIMIT {
            return Err(Error::Stability {
                value,
                limit: STABILITY_LIMIT,
            });
        }
        Ok(())
    }

    pub(crate) fn step_count(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }
}

/// `A_nu` and the sampled `M_nu(f)` used on the right-hand side.
pub fn relaxation_target(
    f: &DistributionFunction,
    cfg: &SolverConfig,
) -> Result<(DistributionFunction, f64, MacroState)> {
    let state = extract_moments(f)?;
    let gaussian = EllipsoidalGaussian::from_state(&state, cfg.nu)?;
    let target = if cfg.conservation_correction {
        conservation_correct(&gaussian, f.grid(), &state)?.0
    } else {
        gaussian.evaluate(f.grid())
    };
    Ok((target, cfg.collision_frequency(&state), state))
}

fn rhs(grid: &Arc<VelocityGrid>, values: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    let f = DistributionFunction::from_raw(grid.clone(), values.to_vec());
    let (m, a, _) = relaxation_target(&f, cfg)?;
    Ok(m.values()
        .iter()
        .zip(values)
        .map(|(mk, fk)| a * (mk - fk))
        .collect())
}

fn axpy(base: &[f64], k: &[f64], h: f64) -> Vec<f64> {
    base.iter().zip(k).map(|(b, k)| b + h * k).collect()
}

/// Result of one explicit step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub f: DistributionFunction,
    /// Mass removed by clipping negative values; zero for resolved runs.
    pub clipped_mass: f64,
}

/// One step of size `cfg.dt`.
pub fn step_homogeneous(f: &DistributionFunction, cfg: &SolverConfig) -> Result<StepOutcome> {
    step_homogeneous_dt(f, cfg, cfg.dt)
}

pub fn step_homogeneous_dt(
    f: &DistributionFunction,
    cfg: &SolverConfig,
    dt: f64,
) -> Result<StepOutcome> {
    let grid = f.grid();
    let y = f.values();
    let k1 = rhs(grid, y, cfg)?;
    let state = extract_moments(f)?;
    cfg.check_stability(&state, dt)?;
    let mut next = match cfg.integrator {
        Integrator::Euler => axpy(y, &k1, dt),
        Integrator::Rk4 => {
            let k2 = rhs(grid, &axpy(y, &k1, 0.5 * dt), cfg)?;
            let k3 = rhs(grid, &axpy(y, &k2, 0.5 * dt), cfg)?;
            let k4 = rhs(grid, &axpy(y, &k3, dt), cfg)?;
            y.iter()
                .enumerate()
                .map(|(i, yi)| yi + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect()
        }
    };
    let clipped_mass = clip_negative(&mut next) * grid.weight();
    if clipped_mass > 0.0 {
        warn!("clipped {clipped_mass:e} of negative mass after a relaxation step");
    }
    Ok(StepOutcome {
        f: DistributionFunction::from_raw(grid.clone(), next),
        clipped_mass,
    })
}

pub(crate) fn clip_negative(values: &mut [f64]) -> f64 {
    let mut clipped = 0.0;
    for x in values.iter_mut() {
        if *x < 0.0 {
            clipped -= *x;
            *x = 0.0;
        }
    }
    clipped
}

/// Closed-form stress relaxation `Theta(t) = T Id + e^{-sigma t} (Theta_0 - T Id)`
/// of the homogeneous dynamics with constant `sigma`.
pub fn stress_relaxation_oracle(
    theta0: &SymMat3,
    temperature: f64,
    sigma: f64,
    t: f64,
) -> Result<SymMat3> {
    let tr = theta0.trace();
    if (tr - 3.0 * temperature).abs() > 1e-10 * 3.0 * temperature {
        return Err(Error::TraceMismatch {
            sum: tr,
            expected: 3.0 * temperature,
        });
    }
    let iso = SymMat3::scalar(temperature);
    Ok(iso.add(&theta0.sub(&iso).scale((-sigma * t).exp())))
}

/// Diagnostics recorded at one output time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub state: MacroState,
    pub report: EntropyReport,
    /// `||f - M_0(f)||_1` against the sampled Maxwellian.
    pub l1_to_maxwellian: f64,
    /// `H(f(t)) + int_0^t D_nu ds - H(f_0)`. The integral uses `D_nu` after
    /// every step, not only at snapshots, with piecewise-cubic quadrature.
    pub entropy_balance_residual: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub snapshots: Vec<Snapshot>,
    pub final_f: DistributionFunction,
    pub clipped_mass: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn initial_state(&self) -> &MacroState {
        &self.snapshots[0].state
    }

    pub fn bound_rate(&self) -> f64 {
        self.config.bound_rate(self.initial_state())
    }

    /// Least-squares decay rate of `H(f|M_0)` over snapshots whose relative
    /// entropy exceeds `floor`.
    pub fn fitted_decay_rate(&self, floor: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .snapshots
            .iter()
            .filter(|s| s.report.rel_entropy > floor)
            .map(|s| (s.t, s.report.rel_entropy.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        (sxx > 0.0).then(|| -sxy / sxx)
    }

    /// Largest relative drift of `(rho, U, T)` from the initial snapshot;
    /// bulk-velocity drift is measured against `sqrt(T)`.
    pub fn max_conservation_drift(&self) -> f64 {
        let s0 = self.initial_state();
        let scale_u = s0.temperature.sqrt();
        self.snapshots
            .iter()
            .map(|s| {
                let dr = (s.state.rho - s0.rho).abs() / s0.rho;
                let du = (0..3)
                    .map(|d| (s.state.u[d] - s0.u[d]).abs() / scale_u)
                    .fold(0.0, f64::max);
                let dt = (s.state.temperature - s0.temperature).abs() / s0.temperature;
                dr.max(du).max(dt)
            })
            .fold(0.0, f64::max)
    }

    /// Largest snapshot-to-snapshot increase of `H(f)` relative to `1 + |H|`.
    pub fn max_entropy_increase(&self) -> f64 {
        self.snapshots
            .windows(2)
            .map(|w| (w[1].report.h_f - w[0].report.h_f) / (1.0 + w[0].report.h_f.abs()))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_balance_residual(&self) -> f64 {
        self.snapshots
            .iter()
            .map(|s| s.entropy_balance_residual.abs())
            .fold(0.0, f64::max)
    }
}

/// Running integral of the piecewise-cubic interpolant of samples `(t, y)`.
/// Each interval uses the four nearest samples and two-point Gauss-Legendre,
/// which is exact for cubics. Intervals whose stencil can no longer change
/// are summed once.
#[derive(Debug, Default)]
struct CubicIntegral {
    ts: Vec<f64>,
    ys: Vec<f64>,
    settled: usize,
    settled_sum: f64,
}

impl CubicIntegral {
    fn push(&mut self, t: f64, y: f64) {
        self.ts.push(t);
        self.ys.push(y);
        while self.ts.len() >= 4 && self.settled + 4 <= self.ts.len() {
            self.settled_sum += self.interval(self.settled);
            self.settled += 1;
        }
    }

    fn interval(&self, i: usize) -> f64 {
        let n = self.ts.len();
        let width = n.min(4);
        let start = i.saturating_sub(1).min(n - width);
        let (xs, fs) = (
            &self.ts[start..start + width],
            &self.ys[start..start + width],
        );
        let interp = |x: f64| -> f64 {
            (0..width)
                .map(|j| {
                    let basis: f64 = (0..width)
                        .filter(|&k| k != j)
                        .map(|k| (x - xs[k]) / (xs[j] - xs[k]))
                        .product();
                    fs[j] * basis
                })
                .sum()
        };
        let (a, b) = (self.ts[i], self.ts[i + 1]);
        let (mid, h) = (0.5 * (a + b), b - a);
        let g = 0.5 / 3f64.sqrt();
        0.5 * h * (interp(mid - g * h) + interp(mid + g * h))
    }

    fn total(&self) -> f64 {
        let n = self.ts.len();
        self.settled_sum
            + (self.settled..n.saturating_sub(1))
                .map(|i| self.interval(i))
                .sum::<f64>()
    }
}

struct Production {
    state: MacroState,
    report: EntropyReport,
}

fn production(f: &DistributionFunction, cfg: &SolverConfig) -> Result<Production> {
    let state = extract_moments(f)?;
    let a = cfg.collision_frequency(&state);
    let report = entropy_production(f, cfg.nu, a)?;
    Ok(Production { state, report })
}

fn snapshot(f: &DistributionFunction, t: f64, p: Production, balance: f64) -> Result<Snapshot> {
    let m0 = EllipsoidalGaussian::maxwellian(&p.state)?.evaluate(f.grid());
    Ok(Snapshot {
        t,
        state: p.state,
        report: p.report,
        l1_to_maxwellian: f.l1_distance(&m0)?,
        entropy_balance_residual: balance,
    })
}

/// Spatially homogeneous relaxation from `f0` up to `cfg.t_end`.
pub fn run_homogeneous(f0: &DistributionFunction, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if cfg.sigma.is_zero() {
        return Err(Error::InvalidConfig(
            "homogeneous relaxation needs a positive collision frequency".into(),
        ));
    }
    let s0 = extract_moments(f0)?;
    cfg.check_stability(&s0, cfg.dt)?;

    let steps = cfg.step_count();
    let p0 = production(f0, cfg)?;
    let h0 = p0.report.h_f;
    let mut integral = CubicIntegral::default();
    integral.push(0.0, p0.report.d_nu);
    let mut snapshots = vec![snapshot(f0, 0.0, p0, 0.0)?];
    let mut f = f0.clone();
    let mut t = 0.0;
    let mut clipped = 0.0;
    for n in 1..=steps {
        let dt = if n == steps { cfg.t_end - t } else { cfg.dt };
        let out = step_homogeneous_dt(&f, cfg, dt)?;
        f = out.f;
        clipped += out.clipped_mass;
        t = if n == steps { cfg.t_end } else { t + dt };
        let p = production(&f, cfg)?;
        integral.push(t, p.report.d_nu);
        if n % cfg.output_stride == 0 || n == steps {
            let balance = p.report.h_f + integral.total() - h0;
            snapshots.push(snapshot(&f, t, p, balance)?);
        }
    }
    Ok(Trajectory {
        config: *cfg,
        snapshots,
        final_f: f,
        clipped_mass: clipped,
        steps,
    })
}

//! Temperature tensor `T_nu = (1 - nu) T Id + nu Theta` and the ellipsoidal
//! Gaussian built from it.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::moments::{rotate_into, MacroState, Mat3, SymMat3, PD_EPS};
use crate::vgrid::{DistributionFunction, Vec3, VelocityGrid};

/// Stress eigenvalues below this fraction of `T` are treated as degenerate.
pub const BOUNDARY_EPS: f64 = 1e-10;

const CORRECTION_MAX_ITERS: usize = 50;
const CORRECTION_TOL: f64 = 1e-12;

/// Rejects `nu` outside the open interval `(-1/2, 1)`.
pub fn check_nu(nu: f64) -> Result<()> {
    if nu > -0.5 && nu < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "nu must lie in the open interval (-1/2, 1), got {nu}"
        )))
    }
}

/// `T_nu` together with the eigenbasis it shares with `Theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureTensor {
    nu: f64,
    temperature: f64,
    value: SymMat3,
    vectors: Mat3,
    theta_eigenvalues: Vec3,
    eigenvalues: Vec3,
}

impl TemperatureTensor {
    pub fn new(state: &MacroState, nu: f64) -> Result<Self> {
        check_nu(nu)?;
        let tt = Self::build(state, nu);
        let min = tt.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > PD_EPS * state.temperature) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min,
            });
        }
        Ok(tt)
    }

    /// The `nu = 1` endpoint, `T_1 = Theta`. Requires a non-degenerate stress.
    pub fn stress(state: &MacroState) -> Result<Self> {
        let tt = Self::build(state, 1.0);
        let min = tt.theta_eigenvalues[2];
        if !(min > BOUNDARY_EPS * state.temperature) {
            return Err(Error::BoundaryState(format!(
                "stress tensor eigenvalue {min:e} is degenerate"
            )));
        }
        Ok(tt)
    }

    fn build(state: &MacroState, nu: f64) -> Self {
        let t = state.temperature;
        let eig = state.theta.eigendecompose();
        let eigenvalues = eig.values.map(|th| (1.0 - nu) * t + nu * th);
        let value = SymMat3::scalar((1.0 - nu) * t).add(&state.theta.scale(nu));
        Self {
            nu,
            temperature: t,
            value,
            vectors: eig.vectors,
            theta_eigenvalues: eig.values,
            eigenvalues,
        }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn value(&self) -> &SymMat3 {
        &self.value
    }

    /// Eigenvectors of `Theta` (columns), shared by `T_nu`.
    pub fn vectors(&self) -> &Mat3 {
        &self.vectors
    }

    /// Eigenvalues of `Theta`, descending.
    pub fn theta_eigenvalues(&self) -> Vec3 {
        self.theta_eigenvalues
    }

    /// `(1 - nu) T + nu theta_i` in the same order as `theta_eigenvalues`.
    pub fn eigenvalues(&self) -> Vec3 {
        self.eigenvalues
    }

    /// `ln det T_nu` through the eigenvalues.
    pub fn ln_det(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.ln()).sum()
    }
}

pub fn temperature_tensor(state: &MacroState, nu: f64) -> Result<TemperatureTensor> {
    TemperatureTensor::new(state, nu)
}

/// A velocity density that can be evaluated off-grid.
pub trait VelocityDensity {
    fn density(&self, v: Vec3) -> f64;
}

/// `rho / sqrt(det(2 pi T_nu)) exp(-(v - U)^T T_nu^{-1} (v - U) / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidalGaussian {
    rho: f64,
    u: Vec3,
    tnu: TemperatureTensor,
    log_norm: f64,
}

impl EllipsoidalGaussian {
    pub fn new(rho: f64, u: Vec3, tnu: TemperatureTensor) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::NonRealizable(format!("density {rho}")));
        }
        let log_norm = rho.ln()
            - 0.5
                * tnu
                    .eigenvalues
                    .iter()
                    .map(|l| (2.0 * PI * l).ln())
                    .sum::<f64>();
        Ok(Self {
            rho,
            u,
            tnu,
            log_norm,
        })
    }

    /// `M_nu(f)` for the macroscopic state of `f`.
    pub fn from_state(state: &MacroState, nu: f64) -> Result<Self> {
        Self::new(state.rho, state.u, TemperatureTensor::new(state, nu)?)
    }

    /// Local Maxwellian `M_0`.
    pub fn maxwellian(state: &MacroState) -> Result<Self> {
        Self::from_state(state, 0.0)
    }

    /// Gaussian `M_1` whose covariance is the full stress tensor.
    pub fn stress_gaussian(state: &MacroState) -> Result<Self> {
        Self::new(state.rho, state.u, TemperatureTensor::stress(state)?)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn u(&self) -> Vec3 {
        self.u
    }

    pub fn temperature_tensor(&self) -> &TemperatureTensor {
        &self.tnu
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    /// Quadratic form `(v - U)^T T_nu^{-1} (v - U)` evaluated in the eigenbasis.
    pub fn mahalanobis(&self, v: Vec3) -> f64 {
        let d = [v[0] - self.u[0], v[1] - self.u[1], v[2] - self.u[2]];
        if self.tnu.nu == 0.0 {
            return (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / self.tnu.temperature;
        }
        let y = rotate_into(&self.tnu.vectors, &d);
        (0..3).map(|i| y[i] * y[i] / self.tnu.eigenvalues[i]).sum()
    }

    pub fn log_density(&self, v: Vec3) -> f64 {
        self.log_norm - 0.5 * self.mahalanobis(v)
    }

    /// Closed-form `H(M) = rho ln(rho / sqrt(det(2 pi T_nu))) - 3 rho / 2`.
    pub fn entropy(&self) -> f64 {
        self.rho * self.log_norm - 1.5 * self.rho
    }

    pub fn evaluate(&self, grid: &Arc<VelocityGrid>) -> DistributionFunction {
        let values = grid.sample(|v| self.density(v));
        DistributionFunction::from_raw(grid.clone(), values)
    }
}

impl VelocityDensity for EllipsoidalGaussian {
    fn density(&self, v: Vec3) -> f64 {
        self.log_density(v).exp()
    }
}

pub fn evaluate_gaussian(
    g: &EllipsoidalGaussian,
    grid: &Arc<VelocityGrid>,
) -> DistributionFunction {
    g.evaluate(grid)
}

pub fn gaussian_entropy_closed_form(g: &EllipsoidalGaussian) -> f64 {
    g.entropy()
}

/// `H(M_0) - H(M_nu) = rho/2 sum_i ln(((1 - nu) T + nu theta_i) / T)`.
pub fn maxwellian_entropy_gap(state: &MacroState, nu: f64) -> Result<f64> {
    let tt = TemperatureTensor::new(state, nu)?;
    let t = state.temperature;
    Ok(0.5 * state.rho * tt.eigenvalues.iter().map(|l| (l / t).ln()).sum::<f64>())
}

/// Parameters of the map `v -> c * M(a (v - b))` found by
/// [`conservation_correct`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionFit {
    pub mass_factor: f64,
    pub shift: Vec3,
    pub dilation: f64,
    pub iterations: usize,
    pub residual: f64,
}

fn discrete_mean_temperature(grid: &VelocityGrid, values: &[f64]) -> (f64, Vec3, f64) {
    let mut m0 = 0.0;
    let mut m1 = [0.0; 3];
    for (v, &g) in grid.velocities().zip(values) {
        m0 += g;
        for d in 0..3 {
            m1[d] += g * v[d];
        }
    }
    let u = m1.map(|m| m / m0);
    let mut m2 = 0.0;
    for (v, &g) in grid.velocities().zip(values) {
        m2 += g * ((v[0] - u[0]).powi(2) + (v[1] - u[1]).powi(2) + (v[2] - u[2]).powi(2));
    }
    (grid.weight() * m0, u, m2 / (3.0 * m0))
}

/// Reparametrizes a strictly positive density as `c M(a (v - b))` so that its
/// discrete mass, bulk velocity and temperature on `grid` match `target`.
pub fn conservation_correct<D: VelocityDensity + ?Sized>(
    density: &D,
    grid: &Arc<VelocityGrid>,
    target: &MacroState,
) -> Result<(DistributionFunction, CorrectionFit)> {
    let t_ref = target.temperature;
    let v_ref = t_ref.sqrt();
    let mut shift = [0.0; 3];
    let mut dilation = 1.0;
    let mut residual = f64::INFINITY;

    let sample = |shift: Vec3, dilation: f64| -> Vec<f64> {
        grid.sample(|v| {
            density.density([
                dilation * (v[0] - shift[0]),
                dilation * (v[1] - shift[1]),
                dilation * (v[2] - shift[2]),
            ])
        })
    };

    for iter in 0..=CORRECTION_MAX_ITERS {
        let values = sample(shift, dilation);
        let (mass, u, t) = discrete_mean_temperature(grid, &values);
        if !(mass > 0.0) || !(t > 0.0) {
            return Err(Error::NonRealizable(
                "corrected density lost positivity".into(),
            ));
        }
        let du = (0..3)
            .map(|d| (u[d] - target.u[d]).abs())
            .fold(0.0, f64::max)
            / v_ref;
        let dt = (t - t_ref).abs() / t_ref;
        residual = du.max(dt);
        if residual <= 0.1 * CORRECTION_TOL || iter == CORRECTION_MAX_ITERS {
            if residual > CORRECTION_TOL {
                break;
            }
            let c = target.rho / mass;
            let values: Vec<f64> = values.into_iter().map(|x| c * x).collect();
            return Ok((
                DistributionFunction::from_raw(grid.clone(), values),
                CorrectionFit {
                    mass_factor: c,
                    shift,
                    dilation,
                    iterations: iter,
                    residual,
                },
            ));
        }
        // Continuum model: the map v -> a (v - b) scales T by 1/a^2 and
        // sends the mean to b + (U - b) a_old / a.
        let new_dilation = dilation * (t / t_ref).sqrt();
        for d in 0..3 {
            shift[d] = target.u[d] - (u[d] - shift[d]) * dilation / new_dilation;
        }
        dilation = new_dilation;
    }
    Err(Error::NonConvergence {
        iterations: CORRECTION_MAX_ITERS,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::extract_moments;
    use approx::assert_relative_eq;

    fn aniso_state() -> MacroState {
        MacroState::with_stress(1.0, [0.0; 3], SymMat3::diag([2.0, 0.5, 0.5]))
    }

    #[test]
    fn isotropic_fixed_point() {
        let s = MacroState::isotropic(1.0, [0.0; 3], 1.0);
        for nu in [-0.45, 0.0, 0.5, 0.95] {
            let tt = temperature_tensor(&s, nu).unwrap();
            assert!(tt.value().sub(&SymMat3::IDENTITY).max_abs() < 1e-15);
        }
    }

    #[test]
    fn anisotropic_tensors() {
        let s = aniso_state();
        let t = temperature_tensor(&s, 0.5).unwrap();
        assert!(t.value().sub(&SymMat3::diag([1.5, 0.75, 0.75])).max_abs() < 1e-15);
        let t = temperature_tensor(&s, -0.25).unwrap();
        assert!(
            t.value()
                .sub(&SymMat3::diag([0.75, 1.125, 1.125]))
                .max_abs()
                < 1e-15
        );
        assert_eq!(t.eigenvalues(), [0.75, 1.125, 1.125]);
    }

    #[test]
    fn nu_outside_interval_rejected() {
        let s = aniso_state();
        for nu in [-0.5, 1.0, 1.5, -0.7, f64::NAN] {
            assert!(matches!(
                temperature_tensor(&s, nu),
                Err(Error::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn degenerate_stress_is_boundary_state() {
        let s = MacroState::with_stress(1.0, [0.0; 3], SymMat3::diag([3.0, 0.0, 0.0]));
        assert!(matches!(
            EllipsoidalGaussian::stress_gaussian(&s),
            Err(Error::BoundaryState(_))
        ));
        // nu < 0 keeps T_nu positive definite even at the boundary
        assert!(temperature_tensor(&s, -0.4).is_ok());
    }

    #[test]
    fn density_at_mode() {
        let g =
            EllipsoidalGaussian::maxwellian(&MacroState::isotropic(1.0, [0.0; 3], 1.0)).unwrap();
        assert_relative_eq!(
            g.density([0.0; 3]),
            (2.0 * PI).powf(-1.5),
            max_relative = 1e-15
        );
        assert!((g.density([0.0; 3]) - 0.063494).abs() < 1e-6);
    }

    #[test]
    fn nu_zero_equals_maxwellian_pointwise() {
        let s = MacroState::with_stress(
            1.3,
            [0.2, -0.1, 0.4],
            SymMat3::new(1.4, 0.2, -0.1, 0.9, 0.15, 0.7),
        );
        let t = s.temperature;
        let g = EllipsoidalGaussian::from_state(&s, 0.0).unwrap();
        let grid = Arc::new(VelocityGrid::centered(12, 6.0).unwrap());
        let m = g.evaluate(&grid);
        for (v, &val) in grid.velocities().zip(m.values()) {
            let r2: f64 = (0..3).map(|d| (v[d] - s.u[d]).powi(2)).sum();
            let exact = s.rho / (2.0 * PI * t).powf(1.5) * (-r2 / (2.0 * t)).exp();
            assert!((val - exact).abs() <= 1e-13 * exact);
        }
    }

    #[test]
    fn sampled_gaussian_moments() {
        let s = MacroState::with_stress(
            1.0,
            [0.3, 0.0, -0.2],
            SymMat3::new(1.6, 0.3, 0.0, 0.8, -0.1, 0.6),
        );
        let g = EllipsoidalGaussian::from_state(&s, 0.5).unwrap();
        let lmax = g.temperature_tensor().eigenvalues()[0];
        let grid = Arc::new(VelocityGrid::new(48, 8.0 * lmax.sqrt(), s.u).unwrap());
        let m = extract_moments(&g.evaluate(&grid)).unwrap();
        assert!((m.rho - 1.0).abs() < 1e-6);
        assert!(m.theta.sub(g.temperature_tensor().value()).max_abs() < 1e-6);
    }

    #[test]
    fn closed_form_entropy_values() {
        let g =
            EllipsoidalGaussian::maxwellian(&MacroState::isotropic(1.0, [0.0; 3], 1.0)).unwrap();
        assert!((g.entropy() - (-4.256815599)).abs() < 1e-9);
        let g2 =
            EllipsoidalGaussian::maxwellian(&MacroState::isotropic(2.0, [0.0; 3], 1.0)).unwrap();
        let want = 2.0 * 2f64.ln() + 2.0 * (-1.5 * (2.0 * PI).ln()) - 3.0;
        assert_relative_eq!(g2.entropy(), want, max_relative = 1e-14);
    }

    #[test]
    fn closed_form_entropy_matches_quadrature() {
        let s = MacroState::with_stress(1.0, [0.0; 3], SymMat3::diag([1.5, 0.9, 0.6]));
        let g = EllipsoidalGaussian::from_state(&s, 0.7).unwrap();
        let grid = Arc::new(VelocityGrid::centered(64, 12.0).unwrap());
        let m = g.evaluate(&grid);
        let h: f64 = grid.weight()
            * m.values()
                .iter()
                .map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 })
                .sum::<f64>();
        assert!((h - g.entropy()).abs() < 1e-8);
    }

    #[test]
    fn det_through_eigenvalues() {
        let s = MacroState::with_stress(1.0, [0.0; 3], SymMat3::new(1.5, 0.4, -0.2, 1.0, 0.3, 0.5));
        for nu in [-0.4, 0.3, 0.9] {
            let tt = temperature_tensor(&s, nu).unwrap();
            let prod: f64 = tt.eigenvalues().iter().product();
            assert_relative_eq!(tt.value().det(), prod, max_relative = 1e-12);
        }
    }

    #[test]
    fn stress_gaussian_continuity() {
        let s = MacroState::with_stress(1.0, [0.0; 3], SymMat3::new(1.5, 0.4, -0.2, 1.0, 0.3, 0.5));
        let h1 = EllipsoidalGaussian::stress_gaussian(&s).unwrap().entropy();
        let near = EllipsoidalGaussian::from_state(&s, 1.0 - 1e-9)
            .unwrap()
            .entropy();
        assert!((h1 - near).abs() < 1e-8);
    }

    #[test]
    fn correction_fixed_point() {
        let s = MacroState::isotropic(1.0, [0.0; 3], 1.0);
        let g = EllipsoidalGaussian::maxwellian(&s).unwrap();
        let grid = Arc::new(VelocityGrid::centered(48, 8.0).unwrap());
        let target = extract_moments(&g.evaluate(&grid)).unwrap();
        let (_, fit) = conservation_correct(&g, &grid, &target).unwrap();
        assert!((fit.mass_factor - 1.0).abs() < 1e-12);
        assert!((fit.dilation - 1.0).abs() < 1e-12);
        assert!(fit.shift.iter().all(|b| b.abs() < 1e-12));
    }

    #[test]
    fn correction_on_coarse_grid() {
        // On a 16-point grid the sampled Maxwellian is visibly off in mass.
        let s = MacroState::isotropic(1.0, [0.0; 3], 1.0);
        let g = EllipsoidalGaussian::maxwellian(&s).unwrap();
        let grid = Arc::new(VelocityGrid::centered(16, 4.0).unwrap());
        let raw = extract_moments(&g.evaluate(&grid)).unwrap();
        assert!((raw.rho - 1.0).abs() > 1e-4);
        let (fixed, _) = conservation_correct(&g, &grid, &s).unwrap();
        let m = extract_moments(&fixed).unwrap();
        assert!((m.rho - 1.0).abs() < 1e-12);
        assert!((m.temperature - 1.0).abs() < 1e-12);
        assert!(m.u.iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn correction_energy_mismatch() {
        let s = MacroState::isotropic(1.0, [0.1, 0.0, 0.0], 1.0);
        let g = EllipsoidalGaussian::maxwellian(&s).unwrap();
        let grid = Arc::new(VelocityGrid::centered(48, 9.0).unwrap());
        let mut target = extract_moments(&g.evaluate(&grid)).unwrap();
        target.temperature *= 1.0 + 1e-4;
        let (fixed, fit) = conservation_correct(&g, &grid, &target).unwrap();
        let m = extract_moments(&fixed).unwrap();
        assert!((m.temperature - target.temperature).abs() < 1e-12 * target.temperature);
        let da = (fit.dilation - 1.0).abs();
        assert!(da > 1e-5 && da < 1e-3, "dilation offset {da}");
    }
}

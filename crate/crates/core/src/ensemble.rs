//! Seeded random Gaussian mixtures used as test distributions.
//!
//! Case `i` of an ensemble draws from its own ChaCha stream, so any case can
//! be regenerated from `(seed, i)` alone and cases may be built in parallel.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::entropy::LOG_FLOOR;
use crate::error::{Error, Result};
use crate::gaussian::VelocityDensity;
use crate::moments::{rotate_into, Mat3, SymMat3};
use crate::vgrid::{DistributionFunction, Vec3, VelocityGrid};

/// Ranges of the mixture generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub min_components: usize,
    pub max_components: usize,
    /// Means are uniform in `[-mean_range, mean_range]^3`.
    pub mean_range: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl Default for MixtureParams {
    fn default() -> Self {
        Self {
            min_components: 2,
            max_components: 4,
            mean_range: 1.0,
            min_eigenvalue: 0.3,
            max_eigenvalue: 2.0,
        }
    }
}

impl MixtureParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.min_components < 1 || self.min_components > self.max_components {
            return bad(format!(
                "component range {}..={} is empty",
                self.min_components, self.max_components
            ));
        }
        if !(self.mean_range >= 0.0) || !self.mean_range.is_finite() {
            return bad(format!(
                "mean range must be non-negative, got {}",
                self.mean_range
            ));
        }
        if !(self.min_eigenvalue > 0.0)
            || !(self.max_eigenvalue >= self.min_eigenvalue)
            || !self.max_eigenvalue.is_finite()
        {
            return bad(format!(
                "eigenvalue range [{}, {}] is not a positive interval",
                self.min_eigenvalue, self.max_eigenvalue
            ));
        }
        Ok(())
    }
}

/// One weighted Gaussian `w N(mean, R diag(eigenvalues) R^T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Vec3,
    pub eigenvalues: Vec3,
    /// Columns are the principal axes.
    pub rotation: Mat3,
}

impl MixtureComponent {
    pub fn covariance(&self) -> SymMat3 {
        SymMat3::from_eigen(&self.rotation, &self.eigenvalues)
    }

    fn log_density(&self, v: Vec3) -> f64 {
        let d = [
            v[0] - self.mean[0],
            v[1] - self.mean[1],
            v[2] - self.mean[2],
        ];
        let y = rotate_into(&self.rotation, &d);
        let q: f64 = (0..3).map(|i| y[i] * y[i] / self.eigenvalues[i]).sum();
        let log_det: f64 = self.eigenvalues.iter().map(|l| (2.0 * PI * l).ln()).sum();
        self.weight.ln() - 0.5 * log_det - 0.5 * q
    }
}

/// Mixture of anisotropic Gaussians with unit total mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub seed: u64,
    pub case: u64,
    pub components: Vec<MixtureComponent>,
}

impl Mixture {
    pub fn generate(params: &MixtureParams, seed: u64, case: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(case);
        let k = rng.gen_range(params.min_components..=params.max_components);
        let weights: Vec<f64> = if k == 1 {
            vec![1.0]
        } else {
            Dirichlet::new(&vec![1.0; k])
                .map_err(|e| Error::InvalidConfig(e.to_string()))?
                .sample(&mut rng)
        };
        let components = weights
            .into_iter()
            .map(|weight| {
                let r = params.mean_range;
                let mean = [(); 3].map(|_| if r > 0.0 { rng.gen_range(-r..=r) } else { 0.0 });
                let eigenvalues =
                    [(); 3].map(|_| rng.gen_range(params.min_eigenvalue..=params.max_eigenvalue));
                let q: [f64; 4] = [(); 4].map(|_| rng.sample(StandardNormal));
                MixtureComponent {
                    weight,
                    mean,
                    eigenvalues,
                    rotation: quaternion_rotation(q),
                }
            })
            .collect();
        Ok(Self {
            seed,
            case,
            components,
        })
    }

    /// Half-width of a centred grid holding every component to eight standard
    /// deviations along its widest axis.
    pub fn auto_vmax(&self) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let reach = c.mean.iter().map(|m| m.abs()).fold(0.0, f64::max);
                let spread = c.eigenvalues.iter().copied().fold(0.0, f64::max).sqrt();
                reach + 8.0 * spread
            })
            .fold(0.0, f64::max)
    }

    pub fn log_density(&self, v: Vec3) -> f64 {
        let logs: Vec<f64> = self.components.iter().map(|c| c.log_density(v)).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
    }

    /// Samples the mixture on `grid`. Values that would underflow are stored as
    /// [`LOG_FLOOR`] so the sampled function stays strictly positive.
    pub fn sample(&self, grid: &Arc<VelocityGrid>) -> DistributionFunction {
        sample_positive(self, grid)
    }
}

impl VelocityDensity for Mixture {
    fn density(&self, v: Vec3) -> f64 {
        self.log_density(v).exp()
    }
}

/// Samples a density on `grid`, flooring values at [`LOG_FLOOR`].
pub fn sample_positive<D: VelocityDensity + ?Sized>(
    density: &D,
    grid: &Arc<VelocityGrid>,
) -> DistributionFunction {
    let values = grid.sample(|v| density.density(v).max(LOG_FLOOR));
    DistributionFunction::new(grid.clone(), values)
        .expect("floored samples are positive and finite")
}

/// Rotation matrix of the unit quaternion along `q`; a normalised Gaussian
/// 4-vector gives a uniformly distributed rotation.
pub fn quaternion_rotation(q: [f64; 4]) -> Mat3 {
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [w, x, y, z] = if n > 0.0 {
        q.map(|c| c / n)
    } else {
        [1.0, 0.0, 0.0, 0.0]
    };
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::extract_moments;

    #[test]
    fn generation_is_reproducible_per_case() {
        let p = MixtureParams::default();
        let a = Mixture::generate(&p, 42, 7).unwrap();
        let b = Mixture::generate(&p, 42, 7).unwrap();
        let c = Mixture::generate(&p, 42, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn draws_respect_ranges() {
        let p = MixtureParams::default();
        for case in 0..200 {
            let m = Mixture::generate(&p, 3, case).unwrap();
            assert!((2..=4).contains(&m.components.len()));
            let total: f64 = m.components.iter().map(|c| c.weight).sum();
            assert!((total - 1.0).abs() < 1e-12);
            for c in &m.components {
                assert!(c.weight > 0.0);
                assert!(c.mean.iter().all(|x| x.abs() <= 1.0));
                assert!(c.eigenvalues.iter().all(|l| (0.3..=2.0).contains(l)));
                let r = c.rotation;
                for i in 0..3 {
                    for j in 0..3 {
                        let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                        assert!((dot - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn sampled_moments_match_mixture() {
        let m = Mixture::generate(&MixtureParams::default(), 42, 0).unwrap();
        let grid = Arc::new(VelocityGrid::centered(48, m.auto_vmax()).unwrap());
        let f = m.sample(&grid);
        let s = extract_moments(&f).unwrap();
        assert!((s.rho - 1.0).abs() < 1e-7);
        let u: Vec3 = [0, 1, 2].map(|d| m.components.iter().map(|c| c.weight * c.mean[d]).sum());
        for d in 0..3 {
            assert!((s.u[d] - u[d]).abs() < 1e-7);
        }
        // second moment of a mixture: sum w (C + mu mu^T) - U U^T
        let mut theta = SymMat3::ZERO;
        for c in &m.components {
            let mm =
                SymMat3::from_full(&[0, 1, 2].map(|i| [0, 1, 2].map(|j| c.mean[i] * c.mean[j])));
            theta = theta.add(&c.covariance().add(&mm).scale(c.weight));
        }
        let uu = SymMat3::from_full(&[0, 1, 2].map(|i| [0, 1, 2].map(|j| u[i] * u[j])));
        assert!(s.theta.sub(&theta.sub(&uu)).max_abs() < 1e-6);
    }

    #[test]
    fn invalid_params_rejected() {
        let p = MixtureParams {
            min_components: 3,
            max_components: 2,
            ..Default::default()
        };
        assert!(Mixture::generate(&p, 0, 0).is_err());
        let p = MixtureParams {
            min_eigenvalue: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }
}

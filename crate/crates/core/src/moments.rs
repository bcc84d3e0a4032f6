//! Macroscopic fields of a distribution and the small symmetric 3x3 algebra
//! they need.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vgrid::{DistributionFunction, Vec3};

/// Row-major 3x3 matrix. Eigenvector matrices store eigenvectors as columns.
pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Relative gate for positive definiteness.
pub const PD_EPS: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 50;

/// Symmetric 3x3 matrix stored by its upper triangle
/// `[a11, a12, a13, a22, a23, a33]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMat3(pub [f64; 6]);

/// Orthogonal eigen-decomposition `M = P diag(values) P^T`, eigenvalues
/// descending.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen {
    pub vectors: Mat3,
    pub values: Vec3,
}

impl SymMat3 {
    pub const IDENTITY: SymMat3 = SymMat3([1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
    pub const ZERO: SymMat3 = SymMat3([0.0; 6]);

    pub fn new(a11: f64, a12: f64, a13: f64, a22: f64, a23: f64, a33: f64) -> Self {
        Self([a11, a12, a13, a22, a23, a33])
    }

    pub fn diag(d: Vec3) -> Self {
        Self([d[0], 0.0, 0.0, d[1], 0.0, d[2]])
    }

    pub fn scalar(s: f64) -> Self {
        Self::diag([s; 3])
    }

    /// Symmetric part of a full matrix.
    pub fn from_full(m: &Mat3) -> Self {
        Self([
            m[0][0],
            0.5 * (m[0][1] + m[1][0]),
            0.5 * (m[0][2] + m[2][0]),
            m[1][1],
            0.5 * (m[1][2] + m[2][1]),
            m[2][2],
        ])
    }

    /// `P diag(values) P^T`.
    pub fn from_eigen(vectors: &Mat3, values: &Vec3) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = (0..3)
                    .map(|k| vectors[i][k] * values[k] * vectors[j][k])
                    .sum();
            }
        }
        Self::from_full(&m)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        const MAP: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
        self.0[MAP[i][j]]
    }

    pub fn to_full(&self) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = self.get(i, j);
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[3] + self.0[5]
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|a| a * s))
    }

    pub fn add(&self, other: &SymMat3) -> Self {
        let mut out = self.0;
        for (o, b) in out.iter_mut().zip(other.0) {
            *o += b;
        }
        Self(out)
    }

    pub fn sub(&self, other: &SymMat3) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Frobenius product `A : B`.
    pub fn frobenius(&self, other: &SymMat3) -> f64 {
        let a = &self.0;
        let b = &other.0;
        a[0] * b[0] + a[3] * b[3] + a[5] * b[5] + 2.0 * (a[1] * b[1] + a[2] * b[2] + a[4] * b[4])
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// `x^T M x`.
    pub fn quadratic_form(&self, x: &Vec3) -> f64 {
        let a = &self.0;
        a[0] * x[0] * x[0]
            + a[3] * x[1] * x[1]
            + a[5] * x[2] * x[2]
            + 2.0 * (a[1] * x[0] * x[1] + a[2] * x[0] * x[2] + a[4] * x[1] * x[2])
    }

    /// `Q^T M Q` for an arbitrary square `Q`.
    pub fn conjugate(&self, q: &Mat3) -> Self {
        let m = self.to_full();
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, o) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for k in 0..3 {
                    for l in 0..3 {
                        acc += q[k][i] * m[k][l] * q[l][j];
                    }
                }
                *o = acc;
            }
        }
        Self::from_full(&out)
    }

    pub fn det(&self) -> f64 {
        let [a, b, c, d, e, f] = self.0;
        a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c)
    }

    /// Inverse of a positive-definite matrix. Rejects inputs whose smallest
    /// eigenvalue is below `PD_EPS` times the mean eigenvalue.
    pub fn inverse(&self) -> Result<Self> {
        let eig = self.eigendecompose();
        let reference = (self.trace() / 3.0).abs().max(f64::MIN_POSITIVE);
        let min = eig.values[2];
        if !(min > PD_EPS * reference) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min,
            });
        }
        let [a, b, c, d, e, f] = self.0;
        let det = self.det();
        let inv = [
            d * f - e * e,
            c * e - b * f,
            b * e - c * d,
            a * f - c * c,
            b * c - a * e,
            a * d - b * b,
        ];
        Ok(Self(inv.map(|x| x / det)))
    }

    pub fn mul_vec(&self, x: &Vec3) -> Vec3 {
        [0, 1, 2].map(|i| (0..3).map(|j| self.get(i, j) * x[j]).sum())
    }

    pub fn mul(&self, other: &SymMat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, o) in row.iter_mut().enumerate() {
                *o = (0..3).map(|k| self.get(i, k) * other.get(k, j)).sum();
            }
        }
        out
    }

    /// Cyclic Jacobi eigen-decomposition.
    ///
    /// Eigenvalues come back in descending order and every eigenvector is
    /// signed so that its first non-negligible component is positive, which
    /// makes the output reproducible bit for bit.
    pub fn eigendecompose(&self) -> SymEigen {
        let mut a = self.to_full();
        let mut v = IDENTITY3;
        let scale = self.max_abs();
        if scale == 0.0 || !scale.is_finite() {
            return SymEigen {
                vectors: IDENTITY3,
                values: [a[0][0], a[1][1], a[2][2]],
            };
        }

        for _ in 0..JACOBI_MAX_SWEEPS {
            let off = (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]).sqrt();
            if off <= 1e-15 * scale {
                break;
            }
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- J^T A J with J the (p, q) plane rotation
                for k in 0..3 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..3 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }

        let mut order = [0usize, 1, 2];
        let diag = [a[0][0], a[1][1], a[2][2]];
        order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
        let mut vectors = [[0.0; 3]; 3];
        let mut values = [0.0; 3];
        for (col, &src) in order.iter().enumerate() {
            values[col] = diag[src];
            let lead = (0..3)
                .map(|r| v[r][src])
                .find(|x| x.abs() > 1e-14)
                .unwrap_or(1.0);
            let sign = if lead < 0.0 { -1.0 } else { 1.0 };
            for r in 0..3 {
                vectors[r][col] = sign * v[r][src];
            }
        }
        SymEigen { vectors, values }
    }
}

/// `P^T v` for an eigenvector matrix `P`.
pub fn rotate_into(p: &Mat3, v: &Vec3) -> Vec3 {
    [0, 1, 2].map(|j| p[0][j] * v[0] + p[1][j] * v[1] + p[2][j] * v[2])
}

/// Macroscopic state `(rho, U, T, Theta)` with `rho Theta` the second central
/// velocity moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroState {
    pub rho: f64,
    pub u: Vec3,
    pub temperature: f64,
    pub theta: SymMat3,
}

impl MacroState {
    /// Equilibrium state with `Theta = T Id`.
    pub fn isotropic(rho: f64, u: Vec3, temperature: f64) -> Self {
        Self {
            rho,
            u,
            temperature,
            theta: SymMat3::scalar(temperature),
        }
    }

    /// State with the given stress tensor; `T = tr(Theta) / 3`.
    pub fn with_stress(rho: f64, u: Vec3, theta: SymMat3) -> Self {
        Self {
            rho,
            u,
            temperature: theta.trace() / 3.0,
            theta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::NonRealizable(format!("density {}", self.rho)));
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(Error::NonRealizable(format!(
                "temperature {}",
                self.temperature
            )));
        }
        let tr = self.theta.trace();
        if (tr - 3.0 * self.temperature).abs() > 1e-10 * 3.0 * self.temperature {
            return Err(Error::TraceMismatch {
                sum: tr,
                expected: 3.0 * self.temperature,
            });
        }
        let min = self.theta.eigendecompose().values[2];
        if min < -1e-12 * self.temperature {
            return Err(Error::NonRealizable(format!(
                "stress tensor has negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    /// Total energy density `rho |U|^2 / 2 + 3 rho T / 2`.
    pub fn energy(&self) -> f64 {
        let u2: f64 = self.u.iter().map(|c| c * c).sum();
        0.5 * self.rho * u2 + 1.5 * self.rho * self.temperature
    }
}

/// Discrete `(rho, U, T, Theta)` of `f` under the grid quadrature.
pub fn extract_moments(f: &DistributionFunction) -> Result<MacroState> {
    let grid = f.grid();
    let w = grid.weight();
    let values = f.values();

    let mut mass = 0.0;
    let mut first = [0.0; 3];
    for (v, &fk) in grid.velocities().zip(values) {
        mass += fk;
        for d in 0..3 {
            first[d] += fk * v[d];
        }
    }
    let rho = w * mass;
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::NonRealizable(format!("zero or invalid mass {rho}")));
    }
    let u = first.map(|m| m / mass);

    let mut second = [0.0; 6];
    for (v, &fk) in grid.velocities().zip(values) {
        let c = [v[0] - u[0], v[1] - u[1], v[2] - u[2]];
        second[0] += fk * c[0] * c[0];
        second[1] += fk * c[0] * c[1];
        second[2] += fk * c[0] * c[2];
        second[3] += fk * c[1] * c[1];
        second[4] += fk * c[1] * c[2];
        second[5] += fk * c[2] * c[2];
    }
    let theta = SymMat3(second.map(|s| s / mass));
    let temperature = theta.trace() / 3.0;
    let h = grid.spacing();
    if !(temperature > 1e-14 * h * h) {
        return Err(Error::NonRealizable(format!(
            "degenerate concentration, temperature {temperature:e}"
        )));
    }
    Ok(MacroState {
        rho,
        u,
        temperature,
        theta,
    })
}

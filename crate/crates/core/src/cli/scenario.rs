//! Run configuration assembled from a `key = value` scenario file and
//! command-line flags. Flags are applied after the file and win.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::certify::{CertifyConfig, Tolerances, NU_GRID, TRUNCATION_LEVELS};
use crate::ensemble::{Mixture, MixtureParams};
use crate::error::{Error, Result};
use crate::gaussian::{check_nu, EllipsoidalGaussian};
use crate::moments::{MacroState, SymMat3};
use crate::solver::{Integrator, SigmaModel, SolverConfig};
use crate::vgrid::{DistributionFunction, Vec3, VelocityGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Relax,
    Slab,
    Certify,
    Linearized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    /// Gaussian whose covariance is `theta`.
    Anisotropic,
    /// Maxwellian with temperature `tr(theta) / 3`.
    Equilibrium,
    /// Case `case` of the seeded mixture ensemble.
    Mixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlabInit {
    Uniform,
    /// Initial data scaled by `1 + amplitude sin(2 pi x / length)`.
    Sinusoidal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: Option<Kind>,
    /// Velocity nodes per axis; defaults depend on the run kind.
    pub grid_n: Option<usize>,
    /// Grid half-width; `None` sizes it from the initial data.
    pub vmax: Option<f64>,
    pub solver: SolverConfig,
    pub count: usize,
    pub seed: u64,
    pub mixture: MixtureParams,
    pub init: InitialData,
    pub rho: f64,
    pub u: Vec3,
    pub theta: SymMat3,
    pub case: u64,
    pub slab_init: SlabInit,
    pub cells: usize,
    pub length: f64,
    pub amplitude: f64,
    pub samples: usize,
    pub nu_grid: Vec<f64>,
    pub truncation_levels: Vec<f64>,
    /// Uniform tolerance replacing the per-inequality defaults.
    pub tol: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            kind: None,
            grid_n: None,
            vmax: None,
            solver: SolverConfig::default(),
            count: 1000,
            seed: 42,
            mixture: MixtureParams::default(),
            init: InitialData::Anisotropic,
            rho: 1.0,
            u: [0.0; 3],
            theta: SymMat3::diag([2.0, 0.5, 0.5]),
            case: 0,
            slab_init: SlabInit::Sinusoidal,
            cells: 32,
            length: 10.0,
            amplitude: 0.2,
            samples: 100,
            nu_grid: NU_GRID.to_vec(),
            truncation_levels: TRUNCATION_LEVELS.to_vec(),
            tol: None,
            format: None,
            out: None,
        }
    }
}

/// Every key accepted by [`Scenario::apply`].
pub const KEYS: &[&str] = &[
    "kind",
    "grid_n",
    "vmax",
    "nu",
    "sigma_const",
    "sigma_alpha",
    "sigma_beta",
    "dt",
    "t_end",
    "integrator",
    "correction",
    "output_stride",
    "count",
    "seed",
    "components_min",
    "components_max",
    "mean_range",
    "eig_min",
    "eig_max",
    "init",
    "rho",
    "u",
    "theta",
    "case",
    "slab_init",
    "cells",
    "length",
    "amplitude",
    "samples",
    "nu_grid",
    "truncation_levels",
    "tol",
    "format",
    "out",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("cannot parse {key} = {value:?}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_choice<T: clap::ValueEnum>(key: &str, value: &str) -> Result<T> {
    T::from_str(value.trim(), true).map_err(|_| {
        let options: Vec<String> = T::value_variants()
            .iter()
            .filter_map(|v| v.to_possible_value().map(|p| p.get_name().to_string()))
            .collect();
        Error::InvalidConfig(format!(
            "{key} must be one of {}, got {value:?}",
            options.join("|")
        ))
    })
}

fn parse_switch(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        other => Err(Error::InvalidConfig(format!(
            "{key} must be on or off, got {other:?}"
        ))),
    }
}

impl Scenario {
    /// Reads a scenario file: one `key = value` per line, `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidConfig(format!("cannot read scenario {}: {e}", path.display()))
        })?;
        let mut s = Self::default();
        s.apply_text(&text)?;
        Ok(s)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "line {}: expected key = value, got {raw:?}",
                    lineno + 1
                ))
            })?;
            self.apply(key.trim(), value.trim())
                .map_err(|e| Error::InvalidConfig(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Sets one field; dashes in `key` are read as underscores.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        let k = key.as_str();
        match k {
            "kind" => self.kind = Some(parse_choice(k, value)?),
            "grid_n" => self.grid_n = Some(parse(k, value)?),
            "vmax" => {
                self.vmax = if value == "auto" {
                    None
                } else {
                    Some(parse(k, value)?)
                }
            }
            "nu" => self.solver.nu = parse(k, value)?,
            "sigma_const" => self.solver.sigma = SigmaModel::constant(parse(k, value)?),
            "sigma_alpha" | "sigma_beta" => {
                let x: f64 = parse(k, value)?;
                let (mut alpha, mut beta) = match self.solver.sigma {
                    SigmaModel::PowerLaw { alpha, beta } => (alpha, beta),
                    SigmaModel::Constant { .. } => (0.0, 0.0),
                };
                if k == "sigma_alpha" {
                    alpha = x;
                } else {
                    beta = x;
                }
                self.solver.sigma = SigmaModel::PowerLaw { alpha, beta };
            }
            "dt" => self.solver.dt = parse(k, value)?,
            "t_end" => self.solver.t_end = parse(k, value)?,
            "integrator" => {
                self.solver.integrator = match value.trim() {
                    "rk4" => Integrator::Rk4,
                    "euler" => Integrator::Euler,
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "integrator must be rk4 or euler, got {other:?}"
                        )))
                    }
                }
            }
            "correction" => self.solver.conservation_correction = parse_switch(k, value)?,
            "output_stride" => self.solver.output_stride = parse(k, value)?,
            "count" => self.count = parse(k, value)?,
            "seed" => self.seed = parse(k, value)?,
            "components_min" => self.mixture.min_components = parse(k, value)?,
            "components_max" => self.mixture.max_components = parse(k, value)?,
            "mean_range" => self.mixture.mean_range = parse(k, value)?,
            "eig_min" => self.mixture.min_eigenvalue = parse(k, value)?,
            "eig_max" => self.mixture.max_eigenvalue = parse(k, value)?,
            "init" => {
                self.init = match value.trim() {
                    "anisotropic" => InitialData::Anisotropic,
                    "equilibrium" => InitialData::Equilibrium,
                    "mixture" => InitialData::Mixture,
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "init must be anisotropic, equilibrium or mixture, got {other:?}"
                        )))
                    }
                }
            }
            "rho" => self.rho = parse(k, value)?,
            "u" => {
                let v = parse_list(k, value)?;
                self.u = v.try_into().map_err(|_| {
                    Error::InvalidConfig(format!("u needs three components, got {value:?}"))
                })?;
            }
            "theta" => {
                let v = parse_list(k, value)?;
                self.theta = match *v.as_slice() {
                    [a, b, c] => SymMat3::diag([a, b, c]),
                    [a11, a12, a13, a22, a23, a33] => SymMat3::new(a11, a12, a13, a22, a23, a33),
                    _ => {
                        return Err(Error::InvalidConfig(format!(
                            "theta needs 3 diagonal or 6 upper-triangular entries, got {value:?}"
                        )))
                    }
                };
            }
            "case" => self.case = parse(k, value)?,
            "slab_init" => {
                self.slab_init = match value.trim() {
                    "uniform" => SlabInit::Uniform,
                    "sinusoidal" => SlabInit::Sinusoidal,
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "slab_init must be uniform or sinusoidal, got {other:?}"
                        )))
                    }
                }
            }
            "cells" => self.cells = parse(k, value)?,
            "length" => self.length = parse(k, value)?,
            "amplitude" => self.amplitude = parse(k, value)?,
            "samples" => self.samples = parse(k, value)?,
            "nu_grid" => self.nu_grid = parse_list(k, value)?,
            "truncation_levels" => self.truncation_levels = parse_list(k, value)?,
            "tol" => self.tol = Some(parse(k, value)?),
            "format" => self.format = Some(parse_choice(k, value)?),
            "out" => self.out = Some(PathBuf::from(value.trim())),
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "unknown key {k:?}; accepted keys: {}",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn grid_n(&self, kind: Kind) -> usize {
        self.grid_n.unwrap_or(match kind {
            Kind::Relax | Kind::Certify => 48,
            Kind::Linearized => 24,
            Kind::Slab => 16,
        })
    }

    pub fn format(&self, kind: Kind) -> Format {
        self.format.unwrap_or(match kind {
            Kind::Certify => Format::Json,
            _ => Format::Csv,
        })
    }

    /// Checks every range the run of `kind` depends on.
    pub fn validate(&self, kind: Kind) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if let Some(k) = self.kind {
            if k != kind {
                return bad(format!(
                    "scenario is of kind {k:?} but the {kind:?} command was run"
                ));
            }
        }
        if self.grid_n(kind) < 4 {
            return bad(format!(
                "grid_n must be at least 4, got {}",
                self.grid_n(kind)
            ));
        }
        if let Some(v) = self.vmax {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("vmax must be positive, got {v}"));
            }
        }
        if let Some(t) = self.tol {
            if !(t >= 0.0) || !t.is_finite() {
                return bad(format!("tol must be non-negative, got {t}"));
            }
        }
        check_nu(self.solver.nu)?;
        match kind {
            Kind::Relax | Kind::Slab => {
                self.solver.validate()?;
                if kind == Kind::Relax && self.solver.sigma.is_zero() {
                    return bad("relax needs a positive collision frequency".into());
                }
                if self.init == InitialData::Mixture {
                    self.mixture.validate()?;
                } else {
                    self.initial_state().validate()?;
                    if !(self.rho > 0.0) {
                        return bad(format!("rho must be positive, got {}", self.rho));
                    }
                    if self.theta.eigendecompose().values[2] <= 0.0 {
                        return bad("theta must be positive definite".into());
                    }
                }
                if kind == Kind::Slab {
                    if self.cells == 0 {
                        return bad("cells must be at least 1".into());
                    }
                    if !(self.length > 0.0) || !self.length.is_finite() {
                        return bad(format!("length must be positive, got {}", self.length));
                    }
                    if !(self.amplitude.abs() < 1.0) {
                        return bad(format!(
                            "amplitude must lie in (-1, 1), got {}",
                            self.amplitude
                        ));
                    }
                }
            }
            Kind::Certify => {
                if self.format(kind) != Format::Json {
                    return bad("certification reports are written as JSON only".into());
                }
                self.certify_config(kind).validate()?;
            }
            Kind::Linearized => {
                self.nu_grid.iter().try_for_each(|&nu| check_nu(nu))?;
                if self.samples == 0 {
                    return bad("samples must be at least 1".into());
                }
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> MacroState {
        let theta = match self.init {
            InitialData::Equilibrium => SymMat3::scalar(self.theta.trace() / 3.0),
            _ => self.theta,
        };
        MacroState::with_stress(self.rho, self.u, theta)
    }

    /// Initial distribution of relax and slab runs on its grid.
    pub fn initial_distribution(&self, kind: Kind) -> Result<DistributionFunction> {
        let n = self.grid_n(kind);
        if self.init == InitialData::Mixture {
            let mixture = Mixture::generate(&self.mixture, self.seed, self.case)?;
            let grid = Arc::new(VelocityGrid::centered(
                n,
                self.vmax.unwrap_or_else(|| mixture.auto_vmax()),
            )?);
            return Ok(mixture.sample(&grid));
        }
        let state = self.initial_state();
        let gauss = match self.init {
            InitialData::Equilibrium => EllipsoidalGaussian::maxwellian(&state)?,
            _ => EllipsoidalGaussian::stress_gaussian(&state)?,
        };
        let auto = || {
            let reach = self.u.iter().map(|x| x.abs()).fold(0.0, f64::max);
            reach + 8.0 * state.theta.eigendecompose().values[0].sqrt()
        };
        let grid = Arc::new(VelocityGrid::centered(n, self.vmax.unwrap_or_else(auto))?);
        Ok(gauss.evaluate(&grid))
    }

    pub fn certify_config(&self, kind: Kind) -> CertifyConfig {
        CertifyConfig {
            grid_n: self.grid_n(kind),
            vmax: self.vmax,
            nu_grid: self.nu_grid.clone(),
            sigma: self.solver.sigma,
            mixture: self.mixture,
            count: self.count,
            seed: self.seed,
            tolerances: self.tol.map(Tolerances::uniform).unwrap_or_default(),
            truncation_levels: self.truncation_levels.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let mut s = Scenario::default();
        s.apply_text(
            "# relaxation run\nkind = relax\nnu = -0.25   # negative\nsigma-const = 2\ntheta = 1.5, 0.75, 0.75\ncorrection = on\n",
        )
        .unwrap();
        assert_eq!(s.kind, Some(Kind::Relax));
        assert_eq!(s.solver.nu, -0.25);
        assert_eq!(s.solver.sigma, SigmaModel::constant(2.0));
        assert!(s.solver.conservation_correction);
        assert_eq!(s.theta, SymMat3::diag([1.5, 0.75, 0.75]));
        s.apply("nu", "0.5").unwrap();
        assert_eq!(s.solver.nu, 0.5);
        s.validate(Kind::Relax).unwrap();
        assert!(s.validate(Kind::Slab).is_err());
    }

    #[test]
    fn power_law_sigma() {
        let mut s = Scenario::default();
        s.apply("sigma_alpha", "1").unwrap();
        s.apply("sigma_beta", "0.5").unwrap();
        assert_eq!(
            s.solver.sigma,
            SigmaModel::PowerLaw {
                alpha: 1.0,
                beta: 0.5
            }
        );
    }

    #[test]
    fn parse_errors_are_config_errors() {
        let mut s = Scenario::default();
        for (k, v) in [
            ("nu", "abc"),
            ("bogus", "1"),
            ("format", "xml"),
            ("theta", "1,2"),
            ("correction", "maybe"),
            ("u", "1,2"),
        ] {
            assert!(matches!(s.apply(k, v), Err(Error::InvalidConfig(_))), "{k}");
        }
        assert!(s.apply_text("no equals sign").is_err());
    }

    #[test]
    fn range_validation() {
        let mut s = Scenario::default();
        s.solver.nu = 1.0;
        assert!(s.validate(Kind::Relax).is_err());
        let s = Scenario {
            theta: SymMat3::diag([1.0, 1.0, -1.0]),
            ..Default::default()
        };
        assert!(s.validate(Kind::Relax).is_err());
        let mut s = Scenario::default();
        s.mixture.min_eigenvalue = -1.0;
        assert!(s.validate(Kind::Certify).is_err());
        let s = Scenario {
            format: Some(Format::Csv),
            ..Default::default()
        };
        assert!(s.validate(Kind::Certify).is_err());
    }

    #[test]
    fn auto_vmax_for_gaussian_init() {
        let s = Scenario {
            grid_n: Some(8),
            ..Default::default()
        };
        let f = s.initial_distribution(Kind::Relax).unwrap();
        assert!((f.grid().v_max() - 8.0 * 2f64.sqrt()).abs() < 1e-12);
    }
}

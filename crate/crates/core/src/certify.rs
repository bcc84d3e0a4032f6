//! Ensemble certification of the entropy inequalities.
//!
//! Every `(case, nu)` pair yields one scaled margin per inequality; a margin
//! below `-tolerance` is a violation. Cases are independent and evaluated in
//! parallel, and all reductions are order-free (min and count), so the
//! report depends only on the configuration.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{sample_positive, Mixture, MixtureParams};
use crate::entropy::{
    diperna_lions_levels, entropy_production, kullback_check, EntropyReport, KullbackCheck,
    TruncationReport,
};
use crate::error::{Error, Result};
use crate::gaussian::{check_nu, EllipsoidalGaussian};
use crate::moments::extract_moments;
use crate::solver::SigmaModel;
use crate::vgrid::VelocityGrid;

pub const NU_GRID: [f64; 11] = [
    -0.45, -0.4, -0.25, -0.1, 0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95,
];
pub const TRUNCATION_LEVELS: [f64; 3] = [1.1, std::f64::consts::E, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    Cercignani,
    RemainderConsistency,
    RemainderSign,
    FNuBounds,
    GaussianEntropyGap,
    GaussianChain,
    EntropyChain,
    Kullback,
    TruncationSplit,
}

impl Inequality {
    pub const ALL: [Inequality; 9] = [
        Inequality::Cercignani,
        Inequality::RemainderConsistency,
        Inequality::RemainderSign,
        Inequality::FNuBounds,
        Inequality::GaussianEntropyGap,
        Inequality::GaussianChain,
        Inequality::EntropyChain,
        Inequality::Kullback,
        Inequality::TruncationSplit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Inequality::Cercignani => "cercignani",
            Inequality::RemainderConsistency => "remainder_consistency",
            Inequality::RemainderSign => "remainder_sign",
            Inequality::FNuBounds => "f_nu_bounds",
            Inequality::GaussianEntropyGap => "gaussian_entropy_gap",
            Inequality::GaussianChain => "gaussian_chain",
            Inequality::EntropyChain => "entropy_chain",
            Inequality::Kullback => "kullback",
            Inequality::TruncationSplit => "truncation_split",
        }
    }

    /// The scaled margin, in words.
    pub fn describe(self) -> &'static str {
        match self {
            Inequality::Cercignani => "(D - min{1+2nu,1-nu} A H(f|M0)) / (1+|D|)",
            Inequality::RemainderConsistency => "-|R_quad - A rho (3-F)| / (A rho)",
            Inequality::RemainderSign => "nu R / (A rho), or -|R| / (A rho) at nu = 0",
            Inequality::FNuBounds => "3 - F (nu > 0), F - 3 (nu < 0), -|F - 3| (nu = 0)",
            Inequality::GaussianEntropyGap => {
                "([H(M0)-H(Mnu)] - max{nu,-2nu}[H(M0)-H(M1)]) / (1+|H(M0)|)"
            }
            Inequality::GaussianChain => "(H(M1) - H(M0)) / (1+|H(M0)|)",
            Inequality::EntropyChain => "(H(f) - H(M1)) / (1+|H(f)|)",
            Inequality::Kullback => "(sqrt(2 m H(f|Mnu)) - |f - Mnu|_1) / m",
            Inequality::TruncationSplit => "-max over nodes and levels of (lhs - rhs)",
        }
    }
}

/// Allowed negative excursion of each scaled margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub cercignani: f64,
    pub remainder_consistency: f64,
    pub remainder_sign: f64,
    pub f_nu_bounds: f64,
    pub gaussian_entropy_gap: f64,
    pub gaussian_chain: f64,
    pub entropy_chain: f64,
    pub kullback: f64,
    pub truncation_split: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            cercignani: 1e-6,
            remainder_consistency: 1e-6,
            remainder_sign: 1e-10,
            f_nu_bounds: 1e-12,
            gaussian_entropy_gap: 1e-12,
            gaussian_chain: 1e-12,
            entropy_chain: 1e-6,
            kullback: 1e-12,
            truncation_split: 1e-12,
        }
    }
}

impl Tolerances {
    /// The same tolerance for every inequality.
    pub fn uniform(tol: f64) -> Self {
        Self {
            cercignani: tol,
            remainder_consistency: tol,
            remainder_sign: tol,
            f_nu_bounds: tol,
            gaussian_entropy_gap: tol,
            gaussian_chain: tol,
            entropy_chain: tol,
            kullback: tol,
            truncation_split: tol,
        }
    }

    pub fn get(&self, ineq: Inequality) -> f64 {
        match ineq {
            Inequality::Cercignani => self.cercignani,
            Inequality::RemainderConsistency => self.remainder_consistency,
            Inequality::RemainderSign => self.remainder_sign,
            Inequality::FNuBounds => self.f_nu_bounds,
            Inequality::GaussianEntropyGap => self.gaussian_entropy_gap,
            Inequality::GaussianChain => self.gaussian_chain,
            Inequality::EntropyChain => self.entropy_chain,
            Inequality::Kullback => self.kullback,
            Inequality::TruncationSplit => self.truncation_split,
        }
    }

    fn validate(&self) -> Result<()> {
        for ineq in Inequality::ALL {
            let t = self.get(ineq);
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "tolerance for {} must be non-negative, got {t}",
                    ineq.name()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub grid_n: usize,
    /// Fixed grid half-width; `None` sizes the grid per case.
    pub vmax: Option<f64>,
    pub nu_grid: Vec<f64>,
    pub sigma: SigmaModel,
    pub mixture: MixtureParams,
    pub count: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub truncation_levels: Vec<f64>,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            grid_n: 48,
            vmax: None,
            nu_grid: NU_GRID.to_vec(),
            sigma: SigmaModel::constant(3.0),
            mixture: MixtureParams::default(),
            count: 1000,
            seed: 42,
            tolerances: Tolerances::default(),
            truncation_levels: TRUNCATION_LEVELS.to_vec(),
        }
    }
}

impl CertifyConfig {
    pub fn validate(&self) -> Result<()> {
        self.nu_grid.iter().try_for_each(|&nu| check_nu(nu))?;
        self.mixture.validate()?;
        self.tolerances.validate()?;
        if self.grid_n < 4 {
            return Err(Error::InvalidConfig(format!(
                "grid_n must be at least 4, got {}",
                self.grid_n
            )));
        }
        if let Some(v) = self.vmax {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "vmax must be positive, got {v}"
                )));
            }
        }
        if self.sigma.is_zero() {
            return Err(Error::InvalidConfig(
                "certification needs a positive collision frequency".into(),
            ));
        }
        if let Some(&r) = self
            .truncation_levels
            .iter()
            .find(|&&r| !(r > 1.0) || !r.is_finite())
        {
            return Err(Error::InvalidConfig(format!(
                "truncation level must exceed 1, got {r}"
            )));
        }
        Ok(())
    }
}

/// Scaled margins of one `(case, nu)` pair; `None` where the inequality does
/// not apply (degenerate stress tensor).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseMargins {
    pub cercignani: f64,
    pub remainder_consistency: f64,
    pub remainder_sign: f64,
    pub f_nu_bounds: f64,
    pub gaussian_entropy_gap: Option<f64>,
    pub gaussian_chain: Option<f64>,
    pub entropy_chain: Option<f64>,
    pub kullback: f64,
    pub truncation_split: f64,
}

impl CaseMargins {
    pub fn get(&self, ineq: Inequality) -> Option<f64> {
        match ineq {
            Inequality::Cercignani => Some(self.cercignani),
            Inequality::RemainderConsistency => Some(self.remainder_consistency),
            Inequality::RemainderSign => Some(self.remainder_sign),
            Inequality::FNuBounds => Some(self.f_nu_bounds),
            Inequality::GaussianEntropyGap => self.gaussian_entropy_gap,
            Inequality::GaussianChain => self.gaussian_chain,
            Inequality::EntropyChain => self.entropy_chain,
            Inequality::Kullback => Some(self.kullback),
            Inequality::TruncationSplit => Some(self.truncation_split),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case: u64,
    pub nu: f64,
    pub v_max: f64,
    pub margins: CaseMargins,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalitySummary {
    pub inequality: Inequality,
    pub tolerance: f64,
    pub checks: usize,
    pub violations: usize,
    pub min_margin: Option<f64>,
    pub worst_case: Option<u64>,
    pub worst_nu: Option<f64>,
}

/// Everything needed to reproduce and inspect one `(case, nu)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseDump {
    pub inequality: Inequality,
    pub mixture: Mixture,
    pub grid_n: usize,
    pub v_max: f64,
    pub nu: f64,
    pub report: EntropyReport,
    pub kullback: KullbackCheck,
    pub truncation: Vec<TruncationReport>,
    pub margins: CaseMargins,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub config: CertifyConfig,
    pub summaries: Vec<InequalitySummary>,
    pub violations: usize,
    pub records: Vec<CaseRecord>,
    /// Full state of the pair that exceeds its tolerance by the widest margin.
    pub worst_violation: Option<CaseDump>,
}

impl CertificationReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn summary(&self, ineq: Inequality) -> &InequalitySummary {
        self.summaries
            .iter()
            .find(|s| s.inequality == ineq)
            .expect("every inequality is summarised")
    }
}

struct CaseEval {
    record: CaseRecord,
    report: EntropyReport,
    kullback: KullbackCheck,
    truncation: Vec<TruncationReport>,
}

fn case_grid(cfg: &CertifyConfig, mixture: &Mixture) -> Result<Arc<VelocityGrid>> {
    let v_max = cfg.vmax.unwrap_or_else(|| mixture.auto_vmax());
    Ok(Arc::new(VelocityGrid::centered(cfg.grid_n, v_max)?))
}

fn evaluate_case(
    cfg: &CertifyConfig,
    case: u64,
    only_nu: Option<f64>,
) -> Result<(Mixture, Vec<CaseEval>)> {
    let mixture = Mixture::generate(&cfg.mixture, cfg.seed, case)?;
    let grid = case_grid(cfg, &mixture)?;
    let f = mixture.sample(&grid);
    let state = extract_moments(&f)?;
    let mut out = Vec::with_capacity(cfg.nu_grid.len());
    for &nu in cfg
        .nu_grid
        .iter()
        .filter(|&&nu| only_nu.is_none_or(|x| x == nu))
    {
        let a_nu = cfg.sigma.sigma(state.rho, state.temperature) / (1.0 - nu);
        let report = entropy_production(&f, nu, a_nu)?;
        let scale = a_nu * report.state.rho;

        let m_nu = sample_positive(&EllipsoidalGaussian::from_state(&report.state, nu)?, &grid);
        let m_nu = m_nu.scaled(f.mass() / m_nu.mass())?;
        let kullback = kullback_check(&f, &m_nu)?;
        let truncation = diperna_lions_levels(
            &f,
            nu,
            &cfg.truncation_levels,
            cfg.tolerances.truncation_split,
        )?;

        let m = &report.margins;
        let h_m0 = 1.0 + report.h_m0.abs();
        let margins = CaseMargins {
            cercignani: m.cercignani / (1.0 + report.d_nu.abs()),
            remainder_consistency: -report.remainder_discrepancy(),
            remainder_sign: if nu == 0.0 {
                -report.r_nu.abs() / scale
            } else {
                m.remainder_sign / scale
            },
            f_nu_bounds: m.f_nu_sign,
            gaussian_entropy_gap: m.gaussian_gap.map(|g| g / h_m0),
            gaussian_chain: m.chain_lower.map(|g| g / h_m0),
            entropy_chain: m.chain_upper.map(|g| g / (1.0 + report.h_f.abs())),
            kullback: kullback.margin() / f.mass(),
            truncation_split: -truncation
                .iter()
                .map(|t| t.max_violation)
                .fold(f64::NEG_INFINITY, f64::max),
        };
        out.push(CaseEval {
            record: CaseRecord {
                case,
                nu,
                v_max: grid.v_max(),
                margins,
            },
            report,
            kullback,
            truncation,
        });
    }
    Ok((mixture, out))
}

/// Rebuilds the full diagnostics of one `(case, nu)` pair.
pub fn dump_case(
    cfg: &CertifyConfig,
    case: u64,
    nu: f64,
    inequality: Inequality,
) -> Result<CaseDump> {
    let (mixture, mut evals) = evaluate_case(cfg, case, Some(nu))?;
    let e = evals.pop().ok_or_else(|| {
        Error::InvalidConfig(format!("nu = {nu} is not on the certification grid"))
    })?;
    Ok(CaseDump {
        inequality,
        mixture,
        grid_n: cfg.grid_n,
        v_max: e.record.v_max,
        nu,
        report: e.report,
        kullback: e.kullback,
        truncation: e.truncation,
        margins: e.record.margins,
    })
}

/// Margins of every `(case, nu)` pair in case-major order.
pub fn case_records(cfg: &CertifyConfig) -> Result<Vec<CaseRecord>> {
    cfg.validate()?;
    let per_case: Vec<Vec<CaseRecord>> = (0..cfg.count as u64)
        .into_par_iter()
        .map(|case| {
            Ok(evaluate_case(cfg, case, None)?
                .1
                .into_iter()
                .map(|e| e.record)
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_case.into_iter().flatten().collect())
}

pub fn certify(cfg: &CertifyConfig) -> Result<CertificationReport> {
    let records = case_records(cfg)?;

    let mut summaries = Vec::new();
    let mut violations = 0;
    // (excess beyond tolerance, inequality, case, nu) of the worst violation
    let mut worst: Option<(f64, Inequality, u64, f64)> = None;
    for ineq in Inequality::ALL {
        let tol = cfg.tolerances.get(ineq);
        let mut s = InequalitySummary {
            inequality: ineq,
            tolerance: tol,
            checks: 0,
            violations: 0,
            min_margin: None,
            worst_case: None,
            worst_nu: None,
        };
        for r in &records {
            let Some(margin) = r.margins.get(ineq) else {
                continue;
            };
            s.checks += 1;
            if s.min_margin.is_none_or(|m| margin < m) {
                s.min_margin = Some(margin);
                s.worst_case = Some(r.case);
                s.worst_nu = Some(r.nu);
            }
            if !(margin >= -tol) {
                s.violations += 1;
                let excess = -tol - margin;
                if worst.is_none_or(|w| excess > w.0) {
                    worst = Some((excess, ineq, r.case, r.nu));
                }
            }
        }
        violations += s.violations;
        summaries.push(s);
    }

    let worst_violation = match worst {
        Some((_, ineq, case, nu)) => Some(dump_case(cfg, case, nu, ineq)?),
        None => None,
    };
    Ok(CertificationReport {
        config: cfg.clone(),
        summaries,
        violations,
        records,
        worst_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(count: usize) -> CertifyConfig {
        CertifyConfig {
            grid_n: 32,
            count,
            nu_grid: vec![-0.4, 0.0, 0.5, 0.9],
            ..Default::default()
        }
    }

    #[test]
    fn small_ensemble_certifies() {
        let rep = certify(&small(3)).unwrap();
        assert_eq!(rep.records.len(), 12);
        for s in &rep.summaries {
            assert_eq!(s.violations, 0, "{:?}", s);
        }
        assert!(rep.passed());
        assert!(rep.worst_violation.is_none());
    }

    #[test]
    fn tampered_tolerance_reports_violations() {
        let cfg = CertifyConfig {
            tolerances: Tolerances::uniform(1e-20),
            ..small(2)
        };
        let rep = certify(&cfg).unwrap();
        assert!(!rep.passed());
        assert!(rep.summary(Inequality::RemainderConsistency).violations > 0);
        let dump = rep.worst_violation.unwrap();
        assert!(dump.margins.get(dump.inequality).unwrap() < -1e-20);
    }

    #[test]
    fn empty_ensemble_is_vacuous() {
        let rep = certify(&small(0)).unwrap();
        assert!(rep.records.is_empty());
        assert!(rep.passed());
        assert!(rep
            .summaries
            .iter()
            .all(|s| s.checks == 0 && s.min_margin.is_none()));
    }

    #[test]
    fn deterministic() {
        let a = certify(&small(2)).unwrap();
        let b = certify(&small(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = CertifyConfig {
            nu_grid: vec![1.0],
            ..small(1)
        };
        assert!(matches!(certify(&cfg), Err(Error::InvalidConfig(_))));
    }
}

//! Entropy functionals of a sampled distribution and the decomposition of the
//! ES-BGK entropy production.
//!
//! All integrals use the grid quadrature and the *discrete* moments of `f`.
//! The production splits exactly as
//!
//! ```text
//! D_nu = E + R_nu / 2 - A_nu ln(norm_nu) sum_k w (M_nu - f)
//! ```
//!
//! where `E = A_nu sum w (M_nu - f)(ln M_nu - ln f) >= 0`, `R_nu` is the
//! stress remainder `A_nu {sum w (M_nu - f) (v-U)(v-U)^T} : T_nu^{-1}` and the
//! last term is the discrete mass defect of the sampled Gaussian (zero in the
//! continuum).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{check_nu, EllipsoidalGaussian, BOUNDARY_EPS};
use crate::moments::{extract_moments, MacroState};
use crate::vgrid::{DistributionFunction, Vec3};

/// Value substituted for `f` inside logarithms when flooring is enabled.
pub const LOG_FLOOR: f64 = 1e-300;

/// Evaluation options for [`entropy_production_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EntropyOptions {
    /// Floor `f` at [`LOG_FLOOR`] inside logarithms instead of rejecting
    /// non-positive nodes.
    pub floor: bool,
}

/// Named slacks of the entropy inequalities. Every margin is `>= 0` when the
/// inequality holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    /// `D_nu - min{1+2nu, 1-nu} A_nu H(f|M_0)`.
    pub cercignani: f64,
    /// `[H(M_0) - H(M_nu)] - max{nu, -2nu} [H(M_0) - H(M_1)]`, closed forms.
    pub gaussian_gap: Option<f64>,
    /// `H(M_1) - H(M_0)`, closed forms.
    pub chain_lower: Option<f64>,
    /// `H(f) - H(M_1)`, quadrature against closed form.
    pub chain_upper: Option<f64>,
    /// `3 - F_nu` for `nu > 0`, `F_nu - 3` for `nu < 0`, `-|F_0 - 3|` at `nu = 0`.
    pub f_nu_sign: f64,
    /// `nu R_nu` with the closed-form remainder.
    pub remainder_sign: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub nu: f64,
    pub a_nu: f64,
    pub state: MacroState,
    pub h_f: f64,
    pub h_m0: f64,
    pub h_m1: Option<f64>,
    pub h_mnu: f64,
    /// `H(f | M_0)` against the sampled Maxwellian.
    pub rel_entropy: f64,
    /// Entropy production from its definition.
    pub d_nu: f64,
    /// `E + R/2 - A ln(norm) * mass_defect`.
    pub d_nu_reconstructed: f64,
    pub e_part: f64,
    /// Closed form `A_nu rho (3 - F_nu)`.
    pub r_nu: f64,
    pub r_nu_quadrature: f64,
    pub f_nu: f64,
    /// `sum_k w (M_nu - f)`.
    pub mass_defect: f64,
    /// Smallest node contribution to `E` (never negative for a correct split).
    pub min_e_node: f64,
    pub margins: Margins,
}

impl EntropyReport {
    /// `|R_quadrature - R_closed| / (A_nu rho)`.
    pub fn remainder_discrepancy(&self) -> f64 {
        (self.r_nu_quadrature - self.r_nu).abs() / (self.a_nu * self.state.rho)
    }

    /// Relative mismatch between the direct and reconstructed production.
    pub fn split_discrepancy(&self) -> f64 {
        (self.d_nu - self.d_nu_reconstructed).abs() / (self.d_nu.abs() + self.e_part.abs() + 1e-300)
    }
}

/// `C_nu / A_nu = min{1 + 2 nu, 1 - nu}`.
pub fn cercignani_factor(nu: f64) -> f64 {
    (1.0 + 2.0 * nu).min(1.0 - nu)
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// `H(f) = sum_k w f ln f` with `0 ln 0 = 0`.
pub fn h_functional(f: &DistributionFunction) -> f64 {
    f.grid().weight() * f.values().iter().map(|&x| xlogx(x)).sum::<f64>()
}

/// `H(f|g) = sum_k w f ln(f / g)`.
pub fn relative_entropy(f: &DistributionFunction, g: &DistributionFunction) -> Result<f64> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch);
    }
    let mut acc = 0.0;
    for (node, (&a, &b)) in f.values().iter().zip(g.values()).enumerate() {
        if a > 0.0 {
            if !(b > 0.0) {
                return Err(Error::SupportViolation { node });
            }
            acc += a * (a / b).ln();
        }
    }
    Ok(f.grid().weight() * acc)
}

/// Outcome of the L1 / relative-entropy comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KullbackCheck {
    pub l1: f64,
    pub relative_entropy: f64,
    /// `sqrt(2 m H(f|g))` with `m` the common mass (`m = 1` for densities).
    pub bound: f64,
}

impl KullbackCheck {
    pub fn margin(&self) -> f64 {
        self.bound - self.l1
    }
}

/// `||f - g||_1 <= sqrt(2 m H(f|g))` for a pair with equal discrete mass `m`.
pub fn kullback_check(f: &DistributionFunction, g: &DistributionFunction) -> Result<KullbackCheck> {
    let mf = f.mass();
    let mg = g.mass();
    if (mf - mg).abs() > 1e-12 * mf.max(mg) {
        return Err(Error::InvalidConfig(format!(
            "Kullback check needs equal masses, got {mf} and {mg}"
        )));
    }
    let h = relative_entropy(f, g)?;
    Ok(KullbackCheck {
        l1: f.l1_distance(g)?,
        relative_entropy: h,
        bound: (2.0 * mf * h.max(0.0)).sqrt(),
    })
}

/// `F_nu = sum_i theta_i / ((1 - nu) T + nu theta_i)`.
pub fn f_nu_scalar(temperature: f64, theta: Vec3, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    if !(temperature > 0.0) {
        return Err(Error::NonRealizable(format!("temperature {temperature}")));
    }
    let sum: f64 = theta.iter().sum();
    if (sum - 3.0 * temperature).abs() > 1e-10 * 3.0 * temperature {
        return Err(Error::TraceMismatch {
            sum,
            expected: 3.0 * temperature,
        });
    }
    let min = theta.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > BOUNDARY_EPS * temperature) {
        return Err(Error::BoundaryState(format!(
            "stress eigenvalue {min:e} is degenerate"
        )));
    }
    let mut total = 0.0;
    for &th in &theta {
        let denom = (1.0 - nu) * temperature + nu * th;
        if !(denom > 0.0) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: denom,
            });
        }
        total += th / denom;
    }
    Ok(total)
}

fn f_nu_margin(nu: f64, f_nu: f64) -> f64 {
    if nu > 0.0 {
        3.0 - f_nu
    } else if nu < 0.0 {
        f_nu - 3.0
    } else {
        -(f_nu - 3.0).abs()
    }
}

/// Closed-form Gaussian entropies and the Gaussian comparison slacks of a
/// macroscopic state; no quadrature involved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianEntropies {
    pub h_m0: f64,
    pub h_mnu: f64,
    pub h_m1: Option<f64>,
    /// `[H(M_0) - H(M_nu)] - max{nu, -2 nu} [H(M_0) - H(M_1)]`.
    pub gap_margin: Option<f64>,
    /// `H(M_1) - H(M_0)`.
    pub chain_lower: Option<f64>,
}

pub fn gaussian_entropies(state: &MacroState, nu: f64) -> Result<GaussianEntropies> {
    let h_m0 = EllipsoidalGaussian::maxwellian(state)?.entropy();
    let h_mnu = EllipsoidalGaussian::from_state(state, nu)?.entropy();
    let h_m1 = match EllipsoidalGaussian::stress_gaussian(state) {
        Ok(g) => Some(g.entropy()),
        Err(Error::BoundaryState(_)) => None,
        Err(e) => return Err(e),
    };
    let weight = nu.max(-2.0 * nu);
    Ok(GaussianEntropies {
        h_m0,
        h_mnu,
        h_m1,
        gap_margin: h_m1.map(|h1| (h_m0 - h_mnu) - weight * (h_m0 - h1)),
        chain_lower: h_m1.map(|h1| h1 - h_m0),
    })
}

pub fn entropy_production(f: &DistributionFunction, nu: f64, a_nu: f64) -> Result<EntropyReport> {
    entropy_production_with(f, nu, a_nu, EntropyOptions::default())
}

/// Full entropy bookkeeping of `f` for the ES-BGK operator with parameter
/// `nu` and collision frequency `a_nu`.
pub fn entropy_production_with(
    f: &DistributionFunction,
    nu: f64,
    a_nu: f64,
    opts: EntropyOptions,
) -> Result<EntropyReport> {
    check_nu(nu)?;
    if !(a_nu > 0.0) || !a_nu.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "collision frequency must be positive, got {a_nu}"
        )));
    }
    if !opts.floor {
        if let Some((node, &value)) = f.values().iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
            return Err(Error::NonPositiveValue { node, value });
        }
    }

    let state = extract_moments(f)?;
    let m_nu = EllipsoidalGaussian::from_state(&state, nu)?;
    let m0 = EllipsoidalGaussian::maxwellian(&state)?;
    let gauss = gaussian_entropies(&state, nu)?;

    let grid = f.grid();
    let w = grid.weight();
    let mut d = 0.0;
    let mut e = 0.0;
    let mut r_quad = 0.0;
    let mut h_f = 0.0;
    let mut rel = 0.0;
    let mut defect = 0.0;
    let mut min_e_node = f64::INFINITY;
    for (v, &fk) in grid.velocities().zip(f.values()) {
        let ln_f = if opts.floor {
            fk.max(LOG_FLOOR).ln()
        } else {
            fk.ln()
        };
        let q = m_nu.mahalanobis(v);
        let ln_m = m_nu.log_norm() - 0.5 * q;
        let mk = ln_m.exp();
        let diff = mk - fk;
        let e_node = diff * (ln_m - ln_f);
        d -= diff * ln_f;
        e += e_node;
        min_e_node = min_e_node.min(e_node);
        r_quad += diff * q;
        h_f += xlogx(fk);
        if fk > 0.0 {
            rel += fk * (ln_f - m0.log_density(v));
        }
        defect += diff;
    }
    let d = a_nu * w * d;
    let e = a_nu * w * e;
    let r_quad = a_nu * w * r_quad;
    let h_f = w * h_f;
    let rel = w * rel;
    let defect = w * defect;
    let d_rec = e + 0.5 * r_quad - a_nu * m_nu.log_norm() * defect;

    let tt = m_nu.temperature_tensor();
    let f_nu =
        f_nu_scalar(state.temperature, tt.theta_eigenvalues(), nu).or_else(|err| match err {
            // a degenerate Theta still has a well-defined F_nu when T_nu is
            // positive definite; evaluate it directly in that case
            Error::BoundaryState(_) => Ok(tt
                .theta_eigenvalues()
                .iter()
                .zip(tt.eigenvalues())
                .map(|(th, l)| th / l)
                .sum()),
            other => Err(other),
        })?;
    let r_nu = a_nu * state.rho * (3.0 - f_nu);

    let margins = Margins {
        cercignani: d - cercignani_factor(nu) * a_nu * rel,
        gaussian_gap: gauss.gap_margin,
        chain_lower: gauss.chain_lower,
        chain_upper: gauss.h_m1.map(|h1| h_f - h1),
        f_nu_sign: f_nu_margin(nu, f_nu),
        remainder_sign: nu * r_nu,
    };

    Ok(EntropyReport {
        nu,
        a_nu,
        state,
        h_f,
        h_m0: gauss.h_m0,
        h_m1: gauss.h_m1,
        h_mnu: gauss.h_mnu,
        rel_entropy: rel,
        d_nu: d,
        d_nu_reconstructed: d_rec,
        e_part: e,
        r_nu,
        r_nu_quadrature: r_quad,
        f_nu,
        mass_defect: defect,
        min_e_node: a_nu * w * min_e_node,
        margins,
    })
}

/// Node-by-node check of the truncation split
/// `M - f <= (R-1) f 1{M < R f} + (M - f)(ln M - ln f) / ln R 1{M >= R f}`
/// and the two terms of its integrated form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub r_trunc: f64,
    /// `max_k (lhs_k - rhs_k)`; non-positive when the split holds.
    pub max_violation: f64,
    /// Nodes with `lhs - rhs > tolerance`.
    pub violations: usize,
    pub tolerance: f64,
    pub nodes_below: usize,
    pub nodes_above: usize,
    /// `sum w M_nu`.
    pub gaussian_mass: f64,
    /// `R sum w f`.
    pub mass_term: f64,
    /// `(1 / ln R) sum w (M_nu - f)(ln M_nu - ln f)`.
    pub dissipation_term: f64,
}

impl TruncationReport {
    /// `R sum f + E / ln R - sum M`; non-negative when the integrated bound holds.
    pub fn integrated_margin(&self) -> f64 {
        self.mass_term + self.dissipation_term - self.gaussian_mass
    }
}

pub const TRUNCATION_TOL: f64 = 1e-12;

pub fn diperna_lions_check(
    f: &DistributionFunction,
    nu: f64,
    r_trunc: f64,
) -> Result<TruncationReport> {
    diperna_lions_check_with_tol(f, nu, r_trunc, TRUNCATION_TOL)
}

pub fn diperna_lions_check_with_tol(
    f: &DistributionFunction,
    nu: f64,
    r_trunc: f64,
    tolerance: f64,
) -> Result<TruncationReport> {
    Ok(diperna_lions_levels(f, nu, &[r_trunc], tolerance)?.remove(0))
}

/// The truncation split at several levels `R` in a single pass over the grid.
pub fn diperna_lions_levels(
    f: &DistributionFunction,
    nu: f64,
    levels: &[f64],
    tolerance: f64,
) -> Result<Vec<TruncationReport>> {
    if let Some(&r) = levels.iter().find(|&&r| !(r > 1.0) || !r.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "truncation level must exceed 1, got {r}"
        )));
    }
    if let Some((node, &value)) = f.values().iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        return Err(Error::NonPositiveValue { node, value });
    }
    let state = extract_moments(f)?;
    let m_nu = EllipsoidalGaussian::from_state(&state, nu)?;
    let grid = f.grid();
    let w = grid.weight();
    let ln_r: Vec<f64> = levels.iter().map(|r| r.ln()).collect();

    let mut reports: Vec<TruncationReport> = levels
        .iter()
        .map(|&r_trunc| TruncationReport {
            r_trunc,
            max_violation: f64::NEG_INFINITY,
            violations: 0,
            tolerance,
            nodes_below: 0,
            nodes_above: 0,
            gaussian_mass: 0.0,
            mass_term: 0.0,
            dissipation_term: 0.0,
        })
        .collect();
    let mut mass_m = 0.0;
    let mut mass_f = 0.0;
    let mut diss = 0.0;
    for (v, &fk) in grid.velocities().zip(f.values()) {
        let ln_m = m_nu.log_density(v);
        let mk = ln_m.exp();
        let lhs = mk - fk;
        let e_node = (mk - fk) * (ln_m - fk.ln());
        for (rep, &lr) in reports.iter_mut().zip(&ln_r) {
            let rhs = if mk < rep.r_trunc * fk {
                rep.nodes_below += 1;
                (rep.r_trunc - 1.0) * fk
            } else {
                rep.nodes_above += 1;
                e_node / lr
            };
            let viol = lhs - rhs;
            rep.max_violation = rep.max_violation.max(viol);
            if viol > tolerance {
                rep.violations += 1;
            }
        }
        mass_m += mk;
        mass_f += fk;
        diss += e_node;
    }
    for (rep, &lr) in reports.iter_mut().zip(&ln_r) {
        rep.gaussian_mass = w * mass_m;
        rep.mass_term = rep.r_trunc * w * mass_f;
        rep.dissipation_term = w * diss / lr;
    }
    Ok(reports)
}

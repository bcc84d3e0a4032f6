use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::output::{csv_row, header_lines, to_json, write_output};
use super::scenario::{Format, Kind, Scenario, SlabInit};
use super::{CliError, Outcome};
use crate::certify::{certify, CertificationReport, Inequality};
use crate::linearized::LinearizedBasis;
use crate::solver::{run_homogeneous, run_slab_1d, Trajectory, CFL_LIMIT};
use crate::vgrid::VelocityGrid;

/// Relative-entropy values below this are left out of the decay-rate fit.
pub const FIT_FLOOR: f64 = 1e-11;
/// Allowed `|lhs - rhs| / (1 + |lhs|)` and eigen-residual in `linearized`.
pub const LINEARIZED_TOL: f64 = 1e-8;

pub const RELAX_COLUMNS: [&str; 19] = [
    "t",
    "rho",
    "U1",
    "U2",
    "U3",
    "T",
    "Theta11",
    "Theta12",
    "Theta13",
    "Theta22",
    "Theta23",
    "Theta33",
    "H_f",
    "rel_entropy",
    "D_nu",
    "R_nu",
    "F_nu",
    "l1_to_maxwellian",
    "entropy_balance_residual",
];

pub const SLAB_COLUMNS: [&str; 7] = [
    "t",
    "mass",
    "momentum1",
    "momentum2",
    "momentum3",
    "energy",
    "global_h",
];

pub const LINEARIZED_COLUMNS: [&str; 7] = [
    "nu",
    "max_identity_mismatch",
    "min_lhs",
    "min_remainder_times_nu",
    "eig_residual_conserved",
    "eig_residual_stress",
    "eig_residual_complement",
];

/// Traceability block written ahead of every output.
#[derive(Debug, Clone, Serialize)]
struct RunHeader<'a> {
    kind: Kind,
    version: &'static str,
    grid_n: usize,
    v_max: Option<f64>,
    scenario: &'a Scenario,
}

impl<'a> RunHeader<'a> {
    fn new(kind: Kind, scenario: &'a Scenario, v_max: Option<f64>) -> Self {
        Self {
            kind,
            version: env!("CARGO_PKG_VERSION"),
            grid_n: scenario.grid_n(kind),
            v_max,
            scenario,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxRow {
    pub t: f64,
    pub rho: f64,
    #[serde(rename = "U1")]
    pub u1: f64,
    #[serde(rename = "U2")]
    pub u2: f64,
    #[serde(rename = "U3")]
    pub u3: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    #[serde(rename = "Theta11")]
    pub theta11: f64,
    #[serde(rename = "Theta12")]
    pub theta12: f64,
    #[serde(rename = "Theta13")]
    pub theta13: f64,
    #[serde(rename = "Theta22")]
    pub theta22: f64,
    #[serde(rename = "Theta23")]
    pub theta23: f64,
    #[serde(rename = "Theta33")]
    pub theta33: f64,
    #[serde(rename = "H_f")]
    pub h_f: f64,
    pub rel_entropy: f64,
    #[serde(rename = "D_nu")]
    pub d_nu: f64,
    #[serde(rename = "R_nu")]
    pub r_nu: f64,
    #[serde(rename = "F_nu")]
    pub f_nu: f64,
    pub l1_to_maxwellian: f64,
    pub entropy_balance_residual: f64,
}

impl RelaxRow {
    fn values(&self) -> [f64; 19] {
        [
            self.t,
            self.rho,
            self.u1,
            self.u2,
            self.u3,
            self.temperature,
            self.theta11,
            self.theta12,
            self.theta13,
            self.theta22,
            self.theta23,
            self.theta33,
            self.h_f,
            self.rel_entropy,
            self.d_nu,
            self.r_nu,
            self.f_nu,
            self.l1_to_maxwellian,
            self.entropy_balance_residual,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxSummary {
    /// `min{1+2nu, 1-nu} A_nu` at the initial state.
    pub bound_rate: f64,
    /// Least-squares decay rate of `H(f|M_0)`; `None` if fewer than two
    /// snapshots lie above the fit floor.
    pub fitted_rate: Option<f64>,
    pub fit_floor: f64,
    pub initial_rel_entropy: f64,
    pub final_rel_entropy: f64,
    pub max_conservation_drift: f64,
    pub max_entropy_increase: f64,
    pub max_balance_residual: f64,
    pub clipped_mass: f64,
    pub steps: usize,
}

#[derive(Serialize)]
struct Document<'a, S, R> {
    header: RunHeader<'a>,
    summary: S,
    columns: &'a [&'a str],
    rows: Vec<R>,
}

fn relax_rows(traj: &Trajectory) -> Vec<RelaxRow> {
    traj.snapshots
        .iter()
        .map(|s| {
            let th = s.state.theta.0;
            RelaxRow {
                t: s.t,
                rho: s.state.rho,
                u1: s.state.u[0],
                u2: s.state.u[1],
                u3: s.state.u[2],
                temperature: s.state.temperature,
                theta11: th[0],
                theta12: th[1],
                theta13: th[2],
                theta22: th[3],
                theta23: th[4],
                theta33: th[5],
                h_f: s.report.h_f,
                rel_entropy: s.report.rel_entropy,
                d_nu: s.report.d_nu,
                r_nu: s.report.r_nu,
                f_nu: s.report.f_nu,
                l1_to_maxwellian: s.l1_to_maxwellian,
                entropy_balance_residual: s.entropy_balance_residual,
            }
        })
        .collect()
}

fn csv_document(
    header: &RunHeader,
    columns: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> String {
    let mut text = String::new();
    for line in header_lines(header) {
        text.push_str(&line);
        text.push('\n');
    }
    text.push_str(&columns.join(","));
    text.push('\n');
    for r in rows {
        text.push_str(&csv_row(&r));
        text.push('\n');
    }
    text
}

/// `run.csv` -> `run.summary.json`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

fn write(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    write_output(path, text).map_err(|source| CliError::Io {
        path: path.map_or_else(|| "<stdout>".to_string(), |p| p.display().to_string()),
        source,
    })
}

/// Writes a CSV or JSON document plus, for CSV, a summary next to it (or on
/// standard error when writing to standard output).
fn emit<S: Serialize, R: Serialize>(
    scenario: &Scenario,
    kind: Kind,
    header: RunHeader,
    summary: S,
    columns: &[&str],
    rows: Vec<R>,
    values: impl Fn(&R) -> Vec<f64>,
) -> Result<(), CliError> {
    let out = scenario.out.as_deref();
    match scenario.format(kind) {
        Format::Csv => {
            let text = csv_document(&header, columns, rows.iter().map(values));
            write(out, &text)?;
            let summary_doc = to_json(&serde_json::json!({
                "header": header,
                "summary": summary,
            }));
            match out {
                Some(p) => write(Some(&summary_path(p)), &summary_doc)?,
                None => eprint!("{summary_doc}"),
            }
        }
        Format::Json => {
            let doc = Document {
                header,
                summary,
                columns,
                rows,
            };
            write(out, &to_json(&doc))?;
        }
    }
    Ok(())
}

pub fn cmd_relax(scenario: &Scenario) -> Result<Outcome, CliError> {
    let kind = Kind::Relax;
    let f0 = scenario.initial_distribution(kind)?;
    let traj = run_homogeneous(&f0, &scenario.solver)?;
    if traj.clipped_mass > 0.0 {
        warn!(
            "negative values clipped during the run, total mass {:e}",
            traj.clipped_mass
        );
    }
    let first = &traj.snapshots[0];
    let last = traj.snapshots.last().expect("trajectory has snapshots");
    let summary = RelaxSummary {
        bound_rate: traj.bound_rate(),
        fitted_rate: traj.fitted_decay_rate(FIT_FLOOR),
        fit_floor: FIT_FLOOR,
        initial_rel_entropy: first.report.rel_entropy,
        final_rel_entropy: last.report.rel_entropy,
        max_conservation_drift: traj.max_conservation_drift(),
        max_entropy_increase: traj.max_entropy_increase(),
        max_balance_residual: traj.max_balance_residual(),
        clipped_mass: traj.clipped_mass,
        steps: traj.steps,
    };
    info!(
        "relax: bound rate {:.4}, fitted rate {:?}",
        summary.bound_rate, summary.fitted_rate
    );
    let header = RunHeader::new(kind, scenario, Some(f0.grid().v_max()));
    emit(
        scenario,
        kind,
        header,
        summary,
        &RELAX_COLUMNS,
        relax_rows(&traj),
        |r| r.values().to_vec(),
    )?;
    Ok(Outcome::Success)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabRow {
    pub t: f64,
    pub mass: f64,
    pub momentum1: f64,
    pub momentum2: f64,
    pub momentum3: f64,
    pub energy: f64,
    pub global_h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabSummary {
    pub cells: usize,
    pub length: f64,
    pub cfl: f64,
    pub max_invariant_drift_rate: f64,
    pub max_entropy_increase: f64,
    pub clipped_mass: f64,
}

pub fn cmd_slab(scenario: &Scenario) -> Result<Outcome, CliError> {
    let kind = Kind::Slab;
    let base = scenario.initial_distribution(kind)?;
    let nx = scenario.cells;
    let dx = scenario.length / nx as f64;
    let cells = (0..nx)
        .map(|i| match scenario.slab_init {
            SlabInit::Uniform => Ok(base.clone()),
            SlabInit::Sinusoidal => {
                let x = (i as f64 + 0.5) * dx;
                base.scaled(1.0 + scenario.amplitude * (2.0 * PI * x / scenario.length).sin())
            }
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let traj = run_slab_1d(&cells, &scenario.solver, scenario.length)?;
    let summary = SlabSummary {
        cells: nx,
        length: scenario.length,
        cfl: scenario.solver.dt * base.grid().max_abs_component(0) / dx,
        max_invariant_drift_rate: traj.max_invariant_drift_rate(),
        max_entropy_increase: traj.max_entropy_increase(),
        clipped_mass: traj.clipped_mass,
    };
    debug_assert!(summary.cfl <= CFL_LIMIT);
    let rows: Vec<SlabRow> = traj
        .snapshots
        .iter()
        .map(|s| SlabRow {
            t: s.t,
            mass: s.mass,
            momentum1: s.momentum[0],
            momentum2: s.momentum[1],
            momentum3: s.momentum[2],
            energy: s.energy,
            global_h: s.global_h,
        })
        .collect();
    let header = RunHeader::new(kind, scenario, Some(base.grid().v_max()));
    emit(scenario, kind, header, summary, &SLAB_COLUMNS, rows, |r| {
        vec![
            r.t,
            r.mass,
            r.momentum1,
            r.momentum2,
            r.momentum3,
            r.energy,
            r.global_h,
        ]
    })?;
    Ok(Outcome::Success)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizedRow {
    pub nu: f64,
    /// `max |lhs - rhs| / (1 + |lhs|)` over the sampled functions.
    pub max_identity_mismatch: f64,
    pub min_lhs: f64,
    pub min_remainder_times_nu: f64,
    pub eig_residual_conserved: f64,
    pub eig_residual_stress: f64,
    pub eig_residual_complement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizedSummary {
    pub samples: usize,
    pub tolerance: f64,
    /// `max |G - Id|` of the basis Gram matrix.
    pub gram_defect: f64,
    pub cross_block_defect: f64,
    pub discarded_generators: usize,
    pub max_identity_mismatch: f64,
    pub max_eig_residual: f64,
    pub violations: usize,
}

pub fn cmd_linearized(scenario: &Scenario) -> Result<Outcome, CliError> {
    let kind = Kind::Linearized;
    let n = scenario.grid_n(kind);
    let grid = Arc::new(VelocityGrid::centered(n, scenario.vmax.unwrap_or(8.0))?);
    let basis = LinearizedBasis::new(grid.clone())?;
    let tol = scenario.tol.unwrap_or(LINEARIZED_TOL);
    let samples: Vec<Vec<f64>> = (0..scenario.samples as u64)
        .map(|k| basis.random_function(scenario.seed, k))
        .collect();

    let mut rows = Vec::new();
    for &nu in &scenario.nu_grid {
        let mut row = LinearizedRow {
            nu,
            max_identity_mismatch: 0.0,
            min_lhs: f64::INFINITY,
            min_remainder_times_nu: f64::INFINITY,
            eig_residual_conserved: 0.0,
            eig_residual_stress: 0.0,
            eig_residual_complement: 0.0,
        };
        for g in &samples {
            let d = basis.dirichlet_form(g, nu)?;
            row.max_identity_mismatch = row
                .max_identity_mismatch
                .max(d.mismatch() / (1.0 + d.lhs.abs()));
            row.min_lhs = row.min_lhs.min(d.lhs);
            row.min_remainder_times_nu = row.min_remainder_times_nu.min(nu * d.remainder);
            let r = basis.block_eigen_residuals(g, nu)?;
            row.eig_residual_conserved = row.eig_residual_conserved.max(r[0]);
            row.eig_residual_stress = row.eig_residual_stress.max(r[1]);
            row.eig_residual_complement = row.eig_residual_complement.max(r[2]);
        }
        rows.push(row);
    }

    let gram = basis.gram();
    let gram_defect = gram
        .iter()
        .enumerate()
        .flat_map(|(i, r)| {
            r.iter()
                .enumerate()
                .map(move |(j, &x)| (x - if i == j { 1.0 } else { 0.0 }).abs())
        })
        .fold(0.0, f64::max);
    let eig = |r: &LinearizedRow| {
        r.eig_residual_conserved
            .max(r.eig_residual_stress)
            .max(r.eig_residual_complement)
    };
    let violations = rows
        .iter()
        .filter(|r| {
            !(r.max_identity_mismatch <= tol)
                || !(eig(r) <= tol)
                || !(r.min_remainder_times_nu >= 0.0)
        })
        .count()
        + usize::from(!(gram_defect <= tol))
        + usize::from(!(basis.cross_block_defect() <= tol));
    let summary = LinearizedSummary {
        samples: samples.len(),
        tolerance: tol,
        gram_defect,
        cross_block_defect: basis.cross_block_defect(),
        discarded_generators: crate::linearized::Block::ALL
            .iter()
            .map(|&b| basis.discarded(b))
            .sum(),
        max_identity_mismatch: rows
            .iter()
            .map(|r| r.max_identity_mismatch)
            .fold(0.0, f64::max),
        max_eig_residual: rows.iter().map(eig).fold(0.0, f64::max),
        violations,
    };
    eprintln!(
        "linearized: max |lhs - rhs| / (1 + |lhs|) = {:.3e} over {} functions and {} values of nu",
        summary.max_identity_mismatch,
        summary.samples,
        rows.len()
    );
    let header = RunHeader::new(kind, scenario, Some(grid.v_max()));
    emit(
        scenario,
        kind,
        header,
        summary,
        &LINEARIZED_COLUMNS,
        rows,
        |r| {
            vec![
                r.nu,
                r.max_identity_mismatch,
                r.min_lhs,
                r.min_remainder_times_nu,
                r.eig_residual_conserved,
                r.eig_residual_stress,
                r.eig_residual_complement,
            ]
        },
    )?;
    Ok(Outcome::Violations(violations))
}

/// Fixed-width table of the per-inequality summaries.
pub fn certification_table(rep: &CertificationReport) -> String {
    let c = &rep.config;
    let mut s = format!(
        "certification: {} cases x {} nu values, seed {}, grid_n {}, vmax {}\n",
        c.count,
        c.nu_grid.len(),
        c.seed,
        c.grid_n,
        c.vmax.map_or_else(|| "auto".to_string(), |v| v.to_string())
    );
    s.push_str(&format!(
        "{:<24} {:>8} {:>10} {:>14} {:>10}\n",
        "inequality", "checks", "violations", "min margin", "tolerance"
    ));
    for sum in &rep.summaries {
        let min = sum
            .min_margin
            .map_or_else(|| "-".to_string(), |m| format!("{m:.6e}"));
        s.push_str(&format!(
            "{:<24} {:>8} {:>10} {:>14} {:>10.1e}\n",
            sum.inequality.name(),
            sum.checks,
            sum.violations,
            min,
            sum.tolerance
        ));
    }
    s.push_str(&format!("total violations: {}\n", rep.violations));
    s
}

#[derive(Serialize)]
struct CertifyDocument<'a> {
    header: RunHeader<'a>,
    inequalities: Vec<(Inequality, &'static str)>,
    #[serde(flatten)]
    report: &'a CertificationReport,
}

pub fn cmd_certify(scenario: &Scenario) -> Result<Outcome, CliError> {
    let kind = Kind::Certify;
    let cfg = scenario.certify_config(kind);
    if cfg.count == 0 {
        warn!("certification ensemble is empty (count = 0); the report is vacuous");
    }
    let rep = certify(&cfg)?;
    let doc = CertifyDocument {
        header: RunHeader::new(kind, scenario, scenario.vmax),
        inequalities: Inequality::ALL.iter().map(|&i| (i, i.describe())).collect(),
        report: &rep,
    };
    let json = to_json(&doc);
    let table = certification_table(&rep);
    match scenario.out.as_deref() {
        Some(p) => {
            write(Some(p), &json)?;
            print!("{table}");
        }
        None => {
            eprint!("{table}");
            write(None, &json)?;
        }
    }
    if let Some(dump) = &rep.worst_violation {
        eprintln!(
            "worst violation: {} at case {} (seed {}), nu = {}",
            dump.inequality.name(),
            dump.mixture.case,
            dump.mixture.seed,
            dump.nu
        );
        eprint!("{}", to_json(dump));
    }
    Ok(Outcome::Violations(rep.violations))
}

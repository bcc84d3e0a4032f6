// Homogeneous relaxation of an anisotropic Gaussian toward its Maxwellian,
// compared against the guaranteed exponential decay of the L1 distance.
//
// ```bash
// cargo run --release --example relax
// ```

use std::sync::Arc;

use esbgk::solver::{run_homogeneous, SolverConfig};
use esbgk::{EllipsoidalGaussian, MacroState, SymMat3, VelocityGrid};

pub fn run_example() -> esbgk::Result<()> {
    let state = MacroState::with_stress(1.0, [0.0; 3], SymMat3::diag([2.0, 0.5, 0.5]));
    let grid = Arc::new(VelocityGrid::centered(32, 8.0 * 2f64.sqrt())?);
    let f0 = EllipsoidalGaussian::stress_gaussian(&state)?.evaluate(&grid);

    for nu in [-0.25, 0.0, 0.5] {
        let cfg = SolverConfig {
            nu,
            t_end: 2.0,
            output_stride: 25,
            ..Default::default()
        };
        let traj = run_homogeneous(&f0, &cfg)?;
        let rate = traj.bound_rate();
        let h0 = traj.snapshots[0].report.rel_entropy;
        println!(
            "nu = {nu:+.2}: guaranteed rate {rate:.3}, fitted rate {:.3}",
            traj.fitted_decay_rate(1e-11).unwrap_or(f64::NAN)
        );
        println!(
            "{:>6} {:>12} {:>12} {:>12}",
            "t", "H(f|M0)", "|f-M0|_1", "bound"
        );
        for s in &traj.snapshots {
            let bound = (-0.5 * rate * s.t).exp() * (2.0 * h0).sqrt();
            println!(
                "{:>6.2} {:>12.4e} {:>12.4e} {:>12.4e}",
                s.t, s.report.rel_entropy, s.l1_to_maxwellian, bound
            );
            assert!(s.l1_to_maxwellian <= bound + 1e-5);
        }
        println!(
            "entropy balance residual {:.2e}\n",
            traj.max_balance_residual()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> esbgk::Result<()> {
    run_example()
}

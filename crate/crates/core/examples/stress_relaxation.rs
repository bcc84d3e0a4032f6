// The stress tensor of a relaxing Gaussian follows
// `Theta(t) = T Id + exp(-sigma t) (Theta_0 - T Id)` exactly; the RK4 error
// against that formula shrinks with the fourth power of the time step.
//
// ```bash
// cargo run --release --example stress_relaxation
// ```

use std::sync::Arc;

use esbgk::solver::{run_homogeneous, stress_relaxation_oracle, SigmaModel, SolverConfig};
use esbgk::{EllipsoidalGaussian, MacroState, SymMat3, VelocityGrid};

pub fn run_example() -> esbgk::Result<()> {
    let theta0 = SymMat3::diag([2.0, 0.5, 0.5]);
    let state = MacroState::with_stress(1.0, [0.0; 3], theta0);
    let grid = Arc::new(VelocityGrid::centered(24, 8.0 * 2f64.sqrt())?);
    let f0 = EllipsoidalGaussian::stress_gaussian(&state)?.evaluate(&grid);
    let sigma = 2.0;

    let mut errors = Vec::new();
    for dt in [0.04, 0.02, 0.01] {
        let cfg = SolverConfig {
            nu: 0.5,
            sigma: SigmaModel::constant(sigma),
            dt,
            t_end: 1.0,
            output_stride: usize::MAX,
            ..Default::default()
        };
        let traj = run_homogeneous(&f0, &cfg)?;
        let s0 = traj.initial_state();
        let last = traj.snapshots.last().unwrap();
        let exact = stress_relaxation_oracle(&s0.theta, s0.temperature, sigma, last.t)?;
        let err = last.state.theta.sub(&exact).max_abs();
        println!("dt = {dt:<5} max |Theta - oracle| = {err:.3e}");
        errors.push(err);
    }
    for w in errors.windows(2) {
        println!("observed order {:.2}", (w[0] / w[1]).log2());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> esbgk::Result<()> {
    run_example()
}

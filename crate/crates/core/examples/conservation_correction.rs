// On a coarse grid the sampled Maxwellian carries the wrong discrete
// moments. The correction refits it as `c M(a (v - b))` so that the
// discrete mass, velocity and temperature match the target exactly.
//
// ```bash
// cargo run --release --example conservation_correction
// ```

use std::sync::Arc;

use esbgk::gaussian::conservation_correct;
use esbgk::{extract_moments, EllipsoidalGaussian, MacroState, VelocityGrid};

pub fn run_example() -> esbgk::Result<()> {
    let target = MacroState::isotropic(1.0, [0.3, -0.2, 0.1], 1.0);
    let grid = Arc::new(VelocityGrid::centered(12, 4.0)?);
    let m = EllipsoidalGaussian::maxwellian(&target)?;

    let raw = extract_moments(&m.evaluate(&grid))?;
    let (fixed, fit) = conservation_correct(&m, &grid, &target)?;
    let got = extract_moments(&fixed)?;

    println!("{:<12} {:>14} {:>14} {:>14}", "", "rho", "U1", "T");
    println!(
        "{:<12} {:>14.10} {:>14.10} {:>14.10}",
        "target", target.rho, target.u[0], target.temperature
    );
    println!(
        "{:<12} {:>14.10} {:>14.10} {:>14.10}",
        "sampled", raw.rho, raw.u[0], raw.temperature
    );
    println!(
        "{:<12} {:>14.10} {:>14.10} {:>14.10}",
        "corrected", got.rho, got.u[0], got.temperature
    );
    println!(
        "fit: c = {:.8}, a = {:.8}, b = {:?}, {} iterations",
        fit.mass_factor, fit.dilation, fit.shift, fit.iterations
    );
    assert!((got.temperature - target.temperature).abs() < 1e-12);
    Ok(())
}

#[allow(dead_code)]
fn main() -> esbgk::Result<()> {
    run_example()
}

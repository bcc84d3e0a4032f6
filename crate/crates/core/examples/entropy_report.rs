// Entropy bookkeeping of a two-component mixture: production, its split
// into a non-negative part and the stress remainder, and the inequality
// margins for a range of `nu`.
//
// ```bash
// cargo run --release --example entropy_report
// ```

use esbgk::ensemble::{Mixture, MixtureParams};
use esbgk::entropy::{cercignani_factor, entropy_production};
use esbgk::VelocityGrid;
use std::sync::Arc;

pub fn run_example() -> esbgk::Result<()> {
    let params = MixtureParams {
        min_components: 2,
        max_components: 2,
        ..Default::default()
    };
    let mixture = Mixture::generate(&params, 11, 0)?;
    let grid = Arc::new(VelocityGrid::centered(32, mixture.auto_vmax())?);
    let f = mixture.sample(&grid);

    println!(
        "{:>6} {:>11} {:>11} {:>11} {:>11} {:>9} {:>11}",
        "nu", "D", "E", "R", "F", "H(f|M0)", "D - C H"
    );
    for nu in [-0.45, -0.25, 0.0, 0.25, 0.5, 0.9] {
        let a = 3.0 / (1.0 - nu);
        let r = entropy_production(&f, nu, a)?;
        println!(
            "{nu:>6.2} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.8} {:>9.5} {:>11.4e}",
            r.d_nu, r.e_part, r.r_nu, r.f_nu, r.rel_entropy, r.margins.cercignani
        );
        assert!(r.margins.cercignani >= 0.0);
        assert!(nu * r.r_nu >= -1e-12);
        assert!(r.split_discrepancy() < 1e-8);
        let _ = cercignani_factor(nu);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> esbgk::Result<()> {
    run_example()
}

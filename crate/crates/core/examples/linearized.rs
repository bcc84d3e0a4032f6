// The linearized operator around the global Maxwellian: checks the
// dissipation identity on random functions and the three block eigenvalues.
//
// ```bash
// cargo run --release --example linearized
// ```

use std::sync::Arc;

use esbgk::linearized::{block_eigenvalues, Block, LinearizedBasis};
use esbgk::VelocityGrid;

pub fn run_example() -> esbgk::Result<()> {
    let basis = LinearizedBasis::new(Arc::new(VelocityGrid::centered(20, 7.0)?))?;
    println!(
        "basis dimensions {} / {} / {}, one dependent normal-stress generator dropped: {}",
        basis.block(Block::Conserved).len(),
        basis.block(Block::NormalStress).len(),
        basis.block(Block::Shear).len(),
        basis.discarded(Block::NormalStress) == 1
    );

    let g = basis.random_function(1, 0);
    println!(
        "{:>6} {:>14} {:>14} {:>14} {:>10}",
        "nu", "-<Lg,g>", "dissipation", "remainder", "mismatch"
    );
    for nu in [-0.45, -0.1, 0.0, 0.5, 0.9] {
        let d = basis.dirichlet_form(&g, nu)?;
        println!(
            "{nu:>6.2} {:>14.6e} {:>14.6e} {:>14.6e} {:>10.1e}",
            d.lhs,
            d.dissipation,
            d.remainder,
            d.mismatch()
        );
        let r = basis.block_eigen_residuals(&g, nu)?;
        assert!(
            r.iter().all(|&x| x < 1e-8),
            "eigen residuals {r:?} at nu = {nu}"
        );
    }
    println!(
        "block eigenvalues at nu = 0.5: {:?}",
        block_eigenvalues(0.5)
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> esbgk::Result<()> {
    run_example()
}

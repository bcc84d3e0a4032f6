// Certifies the entropy inequalities on a small seeded ensemble of Gaussian
// mixtures, then shows what a deliberately impossible tolerance reports.
//
// ```bash
// cargo run --release --example certify
// ```

use esbgk::certify::{certify, CertifyConfig, Tolerances};
use esbgk::cli::certification_table;

pub fn run_example() -> esbgk::Result<()> {
    let cfg = CertifyConfig {
        grid_n: 32,
        count: 4,
        seed: 7,
        ..Default::default()
    };
    let rep = certify(&cfg)?;
    print!("{}", certification_table(&rep));
    assert!(rep.passed());

    // Quadrature noise sits far above 1e-20, so this run must report failures.
    let strict = CertifyConfig {
        tolerances: Tolerances::uniform(1e-20),
        count: 1,
        ..cfg
    };
    let rep = certify(&strict)?;
    let worst = rep
        .worst_violation
        .as_ref()
        .expect("strict tolerance is violated");
    println!(
        "\nwith tolerance 1e-20: {} violations, worst is {} at case {} and nu = {}",
        rep.violations,
        worst.inequality.name(),
        worst.mixture.case,
        worst.nu
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> esbgk::Result<()> {
    run_example()
}

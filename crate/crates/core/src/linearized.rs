//! Linearized ES-BGK relaxation around the global Maxwellian
//! `m = (2 pi)^{-3/2} exp(-|v|^2 / 2)` in the variable `g`, `f = m + sqrt(m) g`:
//!
//! ```text
//! L_nu g = ((P0 g - g) + nu (P1 g + P2 g)) / (1 - nu)
//! ```
//!
//! `P0` projects onto `{1, v, |v|^2} sqrt(m)`, `P1` onto
//! `{3 v_i^2 - |v|^2} sqrt(m)` and `P2` onto `{v_i v_j, i < j} sqrt(m)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::check_nu;
use crate::vgrid::{Vec3, VelocityGrid};

/// Generators whose Gram-Schmidt residual falls below this fraction of their
/// norm are dropped as linearly dependent.
pub const DEPENDENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    /// `{1, v, |v|^2}`: collision invariants.
    Conserved,
    /// `{3 v_i^2 - |v|^2}`: traceless normal stresses.
    NormalStress,
    /// `{v_i v_j, i < j}`: shear stresses.
    Shear,
}

impl Block {
    pub const ALL: [Block; 3] = [Block::Conserved, Block::NormalStress, Block::Shear];

    fn generators(self) -> Vec<fn(Vec3) -> f64> {
        fn r2(v: Vec3) -> f64 {
            v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
        }
        match self {
            Block::Conserved => vec![|_| 1.0, |v| v[0], |v| v[1], |v| v[2], r2],
            Block::NormalStress => vec![
                |v| 3.0 * v[0] * v[0] - r2(v),
                |v| 3.0 * v[1] * v[1] - r2(v),
                |v| 3.0 * v[2] * v[2] - r2(v),
            ],
            Block::Shear => vec![|v| v[0] * v[1], |v| v[0] * v[2], |v| v[1] * v[2]],
        }
    }
}

/// Orthonormal bases of the three blocks under `<a, b> = sum_k w a_k b_k`.
#[derive(Debug, Clone)]
pub struct LinearizedBasis {
    grid: Arc<VelocityGrid>,
    m: Vec<f64>,
    sqrt_m: Vec<f64>,
    blocks: [Vec<Vec<f64>>; 3],
    discarded: [usize; 3],
}

/// Both sides of the linearized dissipation identity
/// `-<L g, g> = ||(I - P0) g||^2 / (1 - nu) - nu ||(P1 + P2) g||^2 / (1 - nu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletForm {
    pub nu: f64,
    /// `-<L_nu g, g>` from the operator.
    pub lhs: f64,
    /// `dissipation - remainder` from the projections.
    pub rhs: f64,
    /// `||(I - P0) g||^2 / (1 - nu)`.
    pub dissipation: f64,
    /// `nu ||(P1 + P2) g||^2 / (1 - nu)`; carries the sign of `nu`.
    pub remainder: f64,
}

impl DirichletForm {
    pub fn mismatch(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

impl LinearizedBasis {
    pub fn new(grid: Arc<VelocityGrid>) -> Result<Self> {
        let norm = (2.0 * PI).powf(-1.5);
        let m = grid.sample(|v| norm * (-0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp());
        let sqrt_m: Vec<f64> = m.iter().map(|x| x.sqrt()).collect();
        let w = grid.weight();

        let mut blocks: [Vec<Vec<f64>>; 3] = Default::default();
        let mut discarded = [0; 3];
        for (bi, block) in Block::ALL.iter().enumerate() {
            for gen in block.generators() {
                let mut vec: Vec<f64> = grid
                    .velocities()
                    .zip(&sqrt_m)
                    .map(|(v, s)| gen(v) * s)
                    .collect();
                let n0 = inner_w(w, &vec, &vec).sqrt();
                for b in &blocks[bi] {
                    let c = inner_w(w, b, &vec);
                    vec.iter_mut().zip(b).for_each(|(x, bk)| *x -= c * bk);
                }
                let n = inner_w(w, &vec, &vec).sqrt();
                if n < DEPENDENCE_TOL * n0 {
                    discarded[bi] += 1;
                    continue;
                }
                vec.iter_mut().for_each(|x| *x /= n);
                blocks[bi].push(vec);
            }
        }
        let dims = blocks.each_ref().map(|b| b.len());
        if dims != [5, 2, 3] {
            return Err(Error::InvalidConfig(format!(
                "velocity grid too coarse to resolve the moment blocks (dimensions {dims:?})"
            )));
        }
        Ok(Self {
            grid,
            m,
            sqrt_m,
            blocks,
            discarded,
        })
    }

    pub fn grid(&self) -> &Arc<VelocityGrid> {
        &self.grid
    }

    pub fn maxwellian(&self) -> &[f64] {
        &self.m
    }

    pub fn sqrt_maxwellian(&self) -> &[f64] {
        &self.sqrt_m
    }

    pub fn block(&self, block: Block) -> &[Vec<f64>] {
        &self.blocks[block as usize]
    }

    /// Generators dropped per block as dependent.
    pub fn discarded(&self, block: Block) -> usize {
        self.discarded[block as usize]
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        inner_w(self.grid.weight(), a, b)
    }

    pub fn norm_sq(&self, a: &[f64]) -> f64 {
        self.inner(a, a)
    }

    /// Gram matrix of the concatenated bases, in block order.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let all: Vec<&Vec<f64>> = self.blocks.iter().flatten().collect();
        all.iter()
            .map(|a| all.iter().map(|b| self.inner(a, b)).collect())
            .collect()
    }

    /// Largest `|<b, c>|` between a conserved basis vector and a stress basis vector.
    pub fn cross_block_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in self.block(Block::Conserved) {
            for b in self
                .block(Block::NormalStress)
                .iter()
                .chain(self.block(Block::Shear))
            {
                worst = worst.max(self.inner(a, b).abs());
            }
        }
        worst
    }

    pub fn project(&self, block: Block, g: &[f64]) -> Result<Vec<f64>> {
        self.check_len(g)?;
        let mut out = vec![0.0; g.len()];
        for b in self.block(block) {
            let c = self.inner(b, g);
            out.iter_mut().zip(b).for_each(|(o, bk)| *o += c * bk);
        }
        Ok(out)
    }

    pub fn apply_l(&self, g: &[f64], nu: f64) -> Result<Vec<f64>> {
        check_nu(nu)?;
        let p0 = self.project(Block::Conserved, g)?;
        let p1 = self.project(Block::NormalStress, g)?;
        let p2 = self.project(Block::Shear, g)?;
        let s = 1.0 / (1.0 - nu);
        Ok((0..g.len())
            .map(|k| s * ((p0[k] - g[k]) + nu * (p1[k] + p2[k])))
            .collect())
    }

    pub fn dirichlet_form(&self, g: &[f64], nu: f64) -> Result<DirichletForm> {
        let lg = self.apply_l(g, nu)?;
        let lhs = -self.inner(&lg, g);
        let p0 = self.project(Block::Conserved, g)?;
        let p1 = self.project(Block::NormalStress, g)?;
        let p2 = self.project(Block::Shear, g)?;
        let non_conserved: Vec<f64> = g.iter().zip(&p0).map(|(a, b)| a - b).collect();
        let stress: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a + b).collect();
        let dissipation = self.norm_sq(&non_conserved) / (1.0 - nu);
        let remainder = nu * self.norm_sq(&stress) / (1.0 - nu);
        Ok(DirichletForm {
            nu,
            lhs,
            rhs: dissipation - remainder,
            dissipation,
            remainder,
        })
    }

    /// Component of `g` orthogonal to all three blocks.
    pub fn complement(&self, g: &[f64]) -> Result<Vec<f64>> {
        let mut out = g.to_vec();
        for block in Block::ALL {
            let p = self.project(block, g)?;
            out.iter_mut().zip(p).for_each(|(o, pk)| *o -= pk);
        }
        Ok(out)
    }

    /// Rayleigh quotient `<L g, g> / <g, g>`.
    pub fn rayleigh(&self, g: &[f64], nu: f64) -> Result<f64> {
        let lg = self.apply_l(g, nu)?;
        Ok(self.inner(&lg, g) / self.norm_sq(g))
    }

    /// `||L x - lambda x|| / ||x||` for the conserved, stress and complement
    /// components `x` of `g`, with `lambda` from [`block_eigenvalues`]; zero
    /// for a component that vanishes.
    pub fn block_eigen_residuals(&self, g: &[f64], nu: f64) -> Result<[f64; 3]> {
        let p1 = self.project(Block::NormalStress, g)?;
        let p2 = self.project(Block::Shear, g)?;
        let parts = [
            self.project(Block::Conserved, g)?,
            p1.iter().zip(&p2).map(|(a, b)| a + b).collect(),
            self.complement(g)?,
        ];
        let lambdas = block_eigenvalues(nu);
        let floor = 1e-14 * self.norm_sq(g).sqrt();
        let mut out = [0.0; 3];
        for (i, x) in parts.iter().enumerate() {
            let nx = self.norm_sq(x).sqrt();
            if nx <= floor {
                continue;
            }
            let lx = self.apply_l(x, nu)?;
            let r: Vec<f64> = lx.iter().zip(x).map(|(a, b)| a - lambdas[i] * b).collect();
            out[i] = self.norm_sq(&r).sqrt() / nx;
        }
        Ok(out)
    }

    /// Seeded test function: `sqrt(m)` times a random polynomial of degree
    /// four plus small white noise, so every block is populated.
    pub fn random_function(&self, seed: u64, index: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let coef: [f64; 35] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let noise = 1e-2 * self.sqrt_m.iter().copied().fold(0.0, f64::max);
        self.grid
            .velocities()
            .zip(&self.sqrt_m)
            .map(|(v, s)| {
                let mut acc = 0.0;
                let mut c = coef.iter();
                for a in 0..=4usize {
                    for b in 0..=(4 - a) {
                        for d in 0..=(4 - a - b) {
                            acc += c.next().unwrap()
                                * v[0].powi(a as i32)
                                * v[1].powi(b as i32)
                                * v[2].powi(d as i32);
                        }
                    }
                }
                s * acc + noise * rng.gen_range(-1.0..1.0)
            })
            .collect()
    }

    fn check_len(&self, g: &[f64]) -> Result<()> {
        if g.len() != self.grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// Exact eigenvalues of `L_nu` on the conserved block, the stress blocks and
/// the remaining complement.
pub fn block_eigenvalues(nu: f64) -> [f64; 3] {
    [0.0, -1.0, -1.0 / (1.0 - nu)]
}

fn inner_w(w: f64, a: &[f64], b: &[f64]) -> f64 {
    w * crate::vgrid::dot(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis() -> LinearizedBasis {
        LinearizedBasis::new(Arc::new(VelocityGrid::centered(24, 7.0).unwrap())).unwrap()
    }

    fn random_g(b: &LinearizedBasis, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        b.sqrt_maxwellian()
            .iter()
            .map(|s| s * rng.gen_range(-1.0..1.0) * 3.0 + rng.gen_range(-1e-3..1e-3))
            .collect()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn gram_is_identity_and_one_generator_dropped() {
        let b = basis();
        let gram = b.gram();
        assert_eq!(gram.len(), 10);
        for (i, row) in gram.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((x - t).abs() < 1e-8);
            }
        }
        assert_eq!(b.discarded(Block::NormalStress), 1);
        assert_eq!(b.discarded(Block::Conserved), 0);
        assert!(b.cross_block_defect() < 1e-8);
    }

    #[test]
    fn projections_of_basis_members() {
        let b = basis();
        let sqrt_m = b.sqrt_maxwellian().to_vec();
        let p0 = b.project(Block::Conserved, &sqrt_m).unwrap();
        assert!(max_abs_diff(&p0, &sqrt_m) < 1e-8);
        assert!(b.norm_sq(&b.project(Block::NormalStress, &sqrt_m).unwrap()) < 1e-16);
        assert!(b.norm_sq(&b.project(Block::Shear, &sqrt_m).unwrap()) < 1e-16);

        let g: Vec<f64> = b
            .grid()
            .velocities()
            .zip(&sqrt_m)
            .map(|(v, s)| v[0] * v[1] * s)
            .collect();
        assert!(max_abs_diff(&b.project(Block::Shear, &g).unwrap(), &g) < 1e-8);
        assert!(b.norm_sq(&b.project(Block::Conserved, &g).unwrap()) < 1e-16);
        assert!(b.norm_sq(&b.project(Block::NormalStress, &g).unwrap()) < 1e-16);
    }

    #[test]
    fn projection_is_idempotent_and_self_adjoint() {
        let b = basis();
        let g = random_g(&b, 1);
        let h = random_g(&b, 2);
        for block in Block::ALL {
            let pg = b.project(block, &g).unwrap();
            let ppg = b.project(block, &pg).unwrap();
            assert!(max_abs_diff(&pg, &ppg) < 1e-10);
            let ph = b.project(block, &h).unwrap();
            assert!((b.inner(&pg, &h) - b.inner(&g, &ph)).abs() < 1e-10);
        }
    }

    #[test]
    fn pythagoras() {
        let b = basis();
        let g = random_g(&b, 3);
        let p0 = b.project(Block::Conserved, &g).unwrap();
        let p1 = b.project(Block::NormalStress, &g).unwrap();
        let p2 = b.project(Block::Shear, &g).unwrap();
        let stress: Vec<f64> = p1.iter().zip(&p2).map(|(a, c)| a + c).collect();
        let rest = b.complement(&g).unwrap();
        let total = b.norm_sq(&p0) + b.norm_sq(&stress) + b.norm_sq(&rest);
        // raw sums, independent of the inner-product helper
        let w = b.grid().weight();
        let raw: f64 = w * g.iter().map(|x| x * x).sum::<f64>();
        assert!((total - raw).abs() < 1e-8 * (1.0 + raw));
    }

    #[test]
    fn block_eigenvalues_hold() {
        let b = basis();
        let g = random_g(&b, 4);
        let stress: Vec<f64> = {
            let p1 = b.project(Block::NormalStress, &g).unwrap();
            let p2 = b.project(Block::Shear, &g).unwrap();
            p1.iter().zip(&p2).map(|(a, c)| a + c).collect()
        };
        let conserved = b.project(Block::Conserved, &g).unwrap();
        let rest = b.complement(&g).unwrap();
        for nu in [-0.45, 0.0, 0.3, 0.9] {
            let lc = b.apply_l(&conserved, nu).unwrap();
            assert!(b.norm_sq(&lc).sqrt() < 1e-8 * b.norm_sq(&conserved).sqrt());
            let ls = b.apply_l(&stress, nu).unwrap();
            let want: Vec<f64> = stress.iter().map(|x| -x).collect();
            assert!(max_abs_diff(&ls, &want) < 1e-10);
            let lr = b.apply_l(&rest, nu).unwrap();
            let want: Vec<f64> = rest.iter().map(|x| -x / (1.0 - nu)).collect();
            assert!(max_abs_diff(&lr, &want) < 1e-10);
        }
    }

    #[test]
    fn dirichlet_identity_on_examples() {
        let b = basis();
        let sqrt_m = b.sqrt_maxwellian().to_vec();
        let d = b.dirichlet_form(&sqrt_m, 0.5).unwrap();
        assert!(d.lhs.abs() < 1e-10 && d.rhs.abs() < 1e-10);

        let g: Vec<f64> = b
            .grid()
            .velocities()
            .zip(&sqrt_m)
            .map(|(v, s)| v[0] * v[1] * s)
            .collect();
        let d = b.dirichlet_form(&g, 0.5).unwrap();
        let n2 = b.norm_sq(&g);
        // L g = -g on the shear block
        assert!((d.lhs - n2).abs() < 1e-10);
        assert!((d.rhs - n2).abs() < 1e-10);
        assert!((d.dissipation - 2.0 * n2).abs() < 1e-10);
        assert!((d.remainder - n2).abs() < 1e-10);
    }

    #[test]
    fn remainder_sign_follows_nu() {
        let b = basis();
        let g = random_g(&b, 5);
        for nu in [-0.45, -0.1, 0.0, 0.25, 0.95] {
            let d = b.dirichlet_form(&g, nu).unwrap();
            assert!(nu * d.remainder >= 0.0);
            assert!(d.mismatch() < 1e-8 * (1.0 + d.lhs.abs()));
        }
    }

    #[test]
    fn random_functions_populate_every_block() {
        let b = basis();
        let g = b.random_function(9, 0);
        assert_eq!(g, b.random_function(9, 0));
        assert_ne!(g, b.random_function(9, 1));
        for block in Block::ALL {
            assert!(b.norm_sq(&b.project(block, &g).unwrap()) > 1e-6);
        }
        assert!(b.norm_sq(&b.complement(&g).unwrap()) > 1e-6);
        for nu in [-0.45, 0.5] {
            let r = b.block_eigen_residuals(&g, nu).unwrap();
            assert!(r.iter().all(|&x| x < 1e-8), "{r:?}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let b = basis();
        assert!(b.apply_l(&[0.0; 3], 0.0).is_err());
        assert!(b.apply_l(&vec![0.0; b.grid().len()], 1.0).is_err());
        assert!(LinearizedBasis::new(Arc::new(VelocityGrid::centered(2, 3.0).unwrap())).is_err());
    }
}

//! Seeded generators for test data and instance corpora.
//!
//! Every generator takes the RNG explicitly; equal seeds give bit-identical
//! output on every platform.

// f64 math in no_std
use alloc::vec::Vec;
#[allow(unused_imports)]
use nalgebra::ComplexField as _;

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{AlgebraElement, MatrixAlgebra};
use crate::cpmap::{CpMap, KrausBlock};
use crate::linalg::{CMat, CVec, C64};
use crate::module::HilbertModuleSpace;

/// The generator used throughout.
pub type Rng = ChaCha8Rng;

/// Generator seeded from a `u64`.
pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix of independent standard complex normals (`E|z|² = 1`).
pub fn gaussian(rng: &mut Rng, rows: usize, cols: usize) -> CMat {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re = normal(rng);
        let im = normal(rng);
        C64::new(re * s, im * s)
    })
}

/// Random coordinate vector.
pub fn coords(rng: &mut Rng, n: usize) -> CVec {
    gaussian(rng, n, 1).column(0).into_owned()
}

/// Uniform integer in `lo..=hi`.
pub fn range(rng: &mut Rng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}

/// Fresh `u64` for seeding a derived stream.
pub fn next_seed(rng: &mut Rng) -> u64 {
    rng.random()
}

/// Random isometry `rows × cols` (`rows ≥ cols`) from the QR factor of a
/// Gaussian matrix, with phases fixed so the law is unitarily invariant.
pub fn isometry(rng: &mut Rng, rows: usize, cols: usize) -> CMat {
    assert!(rows >= cols, "isometry needs rows >= cols");
    if cols == 0 {
        return CMat::zeros(rows, 0);
    }
    let g = gaussian(rng, rows, cols);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..cols {
        let d = r[(k, k)];
        let n = d.norm();
        if n > 0.0 {
            let phase = d / n;
            for i in 0..rows {
                q[(i, k)] *= phase;
            }
        }
    }
    q
}

/// Random unitary.
pub fn unitary(rng: &mut Rng, n: usize) -> CMat {
    isometry(rng, n, n)
}

/// Random element with Gaussian blocks.
pub fn element(rng: &mut Rng, alg: &MatrixAlgebra) -> AlgebraElement {
    let blocks = alg.block_dims().iter().map(|&n| gaussian(rng, n, n)).collect();
    alg.element(blocks).expect("blocks conform")
}

/// Random positive element `b*b`.
pub fn positive(rng: &mut Rng, alg: &MatrixAlgebra) -> AlgebraElement {
    let b = element(rng, alg);
    &b.adjoint() * &b
}

/// Random unitary element.
pub fn unitary_element(rng: &mut Rng, alg: &MatrixAlgebra) -> AlgebraElement {
    let blocks = alg.block_dims().iter().map(|&n| unitary(rng, n)).collect();
    alg.element(blocks).expect("blocks conform")
}

/// Random algebra with `1..=max_blocks` blocks of size `1..=max_n`.
pub fn algebra(rng: &mut Rng, max_blocks: usize, max_n: usize) -> MatrixAlgebra {
    let r = range(rng, 1, max_blocks.max(1));
    let blocks = (0..r).map(|_| range(rng, 1, max_n.max(1))).collect();
    MatrixAlgebra::new(blocks).expect("positive block sizes")
}

/// Random module with multiplicities `mᵢ ≤ max_rows` (each `≥ 1` when `full`,
/// not all zero otherwise), ambient rows `kᵢ ∈ [mᵢ, max_rows]`, random
/// isometries `Wᵢ` and a random orthonormal basis.
pub fn module(rng: &mut Rng, alg: &MatrixAlgebra, max_rows: usize, full: bool) -> HilbertModuleSpace {
    let max_rows = max_rows.max(1);
    let r = alg.num_blocks();
    let mut m: Vec<usize> = (0..r).map(|_| range(rng, if full { 1 } else { 0 }, max_rows)).collect();
    if m.iter().all(|&x| x == 0) {
        m[0] = 1;
    }
    module_with(rng, alg, &m, max_rows)
}

/// Random module with prescribed multiplicities and ambient rows in
/// `[mᵢ, max(mᵢ, max_rows)]`.
pub fn module_with(rng: &mut Rng, alg: &MatrixAlgebra, m: &[usize], max_rows: usize) -> HilbertModuleSpace {
    let rows: Vec<usize> = m.iter().map(|&mi| range(rng, mi, max_rows.max(mi))).collect();
    let w: Vec<CMat> = m.iter().zip(&rows).map(|(&mi, &k)| isometry(rng, k, mi)).collect();
    let d: usize = m.iter().zip(alg.block_dims()).map(|(a, b)| a * b).sum();
    let u = unitary(rng, d);
    HilbertModuleSpace::from_parts(alg.clone(), rows, w, u)
}

/// Random CP map with Kraus rank `1..=max_rank` for every block pair.
pub fn cp_map(rng: &mut Rng, dom: &MatrixAlgebra, cod: &MatrixAlgebra, max_rank: usize) -> CpMap {
    let mut blocks = Vec::new();
    for (i, &n) in dom.block_dims().iter().enumerate() {
        for (j, &c) in cod.block_dims().iter().enumerate() {
            let rank = range(rng, 1, max_rank.max(1));
            let scale = C64::new(1.0 / (rank as f64 * n as f64).sqrt(), 0.0);
            let ops = (0..rank).map(|_| gaussian(rng, n, c) * scale).collect();
            blocks.push(KrausBlock {
                domain_block: i,
                codomain_block: j,
                operators: ops,
            });
        }
    }
    CpMap::from_kraus(dom, cod, &blocks).expect("Kraus shapes conform")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn seeds_are_reproducible() {
        let a = gaussian(&mut seeded(1), 3, 3);
        let b = gaussian(&mut seeded(1), 3, 3);
        assert_eq!(a, b);
        assert_ne!(a, gaussian(&mut seeded(2), 3, 3));
    }

    #[test]
    fn isometries_are_isometric() {
        let mut rng = seeded(9);
        for (r, c) in [(3, 1), (4, 4), (6, 2)] {
            assert!(linalg::isometry_defect(&isometry(&mut rng, r, c)) < 1e-13);
        }
    }

    #[test]
    fn random_modules_have_requested_fullness() {
        let mut rng = seeded(10);
        for _ in 0..20 {
            let alg = algebra(&mut rng, 3, 3);
            assert!(module(&mut rng, &alg, 2, true).is_full());
            assert!(module(&mut rng, &alg, 2, false).dim() > 0);
        }
    }
}

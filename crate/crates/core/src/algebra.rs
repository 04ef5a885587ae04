//! Finite-dimensional C*-algebras `M_{n₁} ⊕ … ⊕ M_{n_r}`.
//!
//! The complex basis of an algebra is the list of matrix units, ordered by
//! block, then row-major inside each block. Coordinate vectors and action
//! matrices elsewhere in the crate refer to this ordering.

use alloc::format;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64, ONE, ZERO};

/// Direct sum of full matrix blocks.
///
/// The empty sum is allowed only through [`MatrixAlgebra::zero`]; it models
/// `𝔅ᵃ` of the zero module.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MatrixAlgebra {
    blocks: Vec<usize>,
}

impl MatrixAlgebra {
    /// Builds `⊕ M_{nᵢ}`. Every `nᵢ` must be positive and the list non-empty.
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidAlgebra("no blocks".into()));
        }
        if blocks.contains(&0) {
            return Err(Error::InvalidAlgebra(format!("zero block in {blocks:?}")));
        }
        Ok(MatrixAlgebra { blocks })
    }

    /// The single block `M_n`.
    pub fn full(n: usize) -> Self {
        assert!(n > 0, "block size must be positive");
        MatrixAlgebra { blocks: alloc::vec![n] }
    }

    /// The zero algebra (no blocks).
    pub fn zero() -> Self {
        MatrixAlgebra { blocks: Vec::new() }
    }

    pub(crate) fn from_blocks_unchecked(blocks: Vec<usize>) -> Self {
        MatrixAlgebra { blocks }
    }

    /// Block sizes `(n₁,…,n_r)`.
    pub fn block_dims(&self) -> &[usize] {
        &self.blocks
    }

    /// Number of blocks.
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// True for the zero algebra.
    pub fn is_zero(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Complex dimension `Σ nᵢ²`.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    /// Coordinate offset of block `i`.
    pub fn offset(&self, i: usize) -> usize {
        self.blocks[..i].iter().map(|n| n * n).sum()
    }

    /// Coordinate index of the matrix unit `e_{pq}` in block `i`.
    pub fn index(&self, i: usize, p: usize, q: usize) -> usize {
        self.offset(i) + p * self.blocks[i] + q
    }

    /// Inverse of [`MatrixAlgebra::index`].
    pub fn unit_of(&self, mut k: usize) -> (usize, usize, usize) {
        for (i, &n) in self.blocks.iter().enumerate() {
            if k < n * n {
                return (i, k / n, k % n);
            }
            k -= n * n;
        }
        panic!("basis index out of range");
    }

    /// The unit `1`.
    pub fn identity(&self) -> AlgebraElement {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self.blocks.iter().map(|&n| CMat::identity(n, n)).collect(),
        }
    }

    /// The element `0`.
    pub fn zero_element(&self) -> AlgebraElement {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self.blocks.iter().map(|&n| CMat::zeros(n, n)).collect(),
        }
    }

    /// Central projection onto block `i`.
    pub fn block_unit(&self, i: usize) -> AlgebraElement {
        let mut z = self.zero_element();
        let n = self.blocks[i];
        z.blocks[i] = CMat::identity(n, n);
        z
    }

    /// Matrix unit `e_{pq}` of block `i`.
    pub fn matrix_unit(&self, i: usize, p: usize, q: usize) -> AlgebraElement {
        let mut z = self.zero_element();
        z.blocks[i][(p, q)] = ONE;
        z
    }

    /// The `k`-th basis element.
    pub fn basis_element(&self, k: usize) -> AlgebraElement {
        let (i, p, q) = self.unit_of(k);
        self.matrix_unit(i, p, q)
    }

    /// Element from explicit blocks.
    pub fn element(&self, blocks: Vec<CMat>) -> Result<AlgebraElement> {
        if blocks.len() != self.blocks.len() || blocks.iter().zip(&self.blocks).any(|(b, &n)| b.shape() != (n, n)) {
            return Err(Error::Shape(format!(
                "element blocks do not conform to {:?}",
                self.blocks
            )));
        }
        Ok(AlgebraElement {
            algebra: self.clone(),
            blocks,
        })
    }

    /// Element from coordinates over the matrix-unit basis.
    pub fn from_coords(&self, v: &CVec) -> AlgebraElement {
        assert_eq!(v.len(), self.dim(), "coordinate length");
        let mut blocks = Vec::with_capacity(self.blocks.len());
        let mut off = 0;
        for &n in &self.blocks {
            blocks.push(CMat::from_fn(n, n, |p, q| v[off + p * n + q]));
            off += n * n;
        }
        AlgebraElement {
            algebra: self.clone(),
            blocks,
        }
    }

    /// `M_k(A)` realized as `⊕ M_{k·nᵢ}` with entry `(s,t)` of block `i` at
    /// rows `s·nᵢ…`, columns `t·nᵢ…`.
    pub fn amplify(&self, k: usize) -> MatrixAlgebra {
        MatrixAlgebra {
            blocks: self.blocks.iter().map(|n| n * k).collect(),
        }
    }

    /// Unitalization `Ã ≅ A ⊕ ℂ`.
    pub fn unitalize(&self) -> Unitalization {
        unitalize_algebra(self)
    }
}

/// An element of a [`MatrixAlgebra`], stored block-wise.
///
/// Arithmetic operators panic if the operands belong to different algebras.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    algebra: MatrixAlgebra,
    blocks: Vec<CMat>,
}

impl AlgebraElement {
    /// Parent algebra.
    pub fn algebra(&self) -> &MatrixAlgebra {
        &self.algebra
    }

    /// Blocks, one `nᵢ × nᵢ` matrix per block.
    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    /// Block `i`.
    pub fn block(&self, i: usize) -> &CMat {
        &self.blocks[i]
    }

    /// Coordinates over the matrix-unit basis.
    pub fn coords(&self) -> CVec {
        let mut v = CVec::zeros(self.algebra.dim());
        let mut off = 0;
        for b in &self.blocks {
            let n = b.nrows();
            for p in 0..n {
                for q in 0..n {
                    v[off + p * n + q] = b[(p, q)];
                }
            }
            off += n * n;
        }
        v
    }

    /// `a*`.
    pub fn adjoint(&self) -> Self {
        self.map(|b| b.adjoint())
    }

    /// Scalar multiple.
    pub fn scale(&self, z: C64) -> Self {
        self.map(|b| b * z)
    }

    fn map(&self, f: impl Fn(&CMat) -> CMat) -> Self {
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(&CMat, &CMat) -> CMat) -> Self {
        assert_eq!(self.algebra, other.algebra, "elements of different algebras");
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
        }
    }

    /// C*-norm: the largest singular value over all blocks.
    pub fn operator_norm(&self) -> f64 {
        self.blocks.iter().map(linalg::op_norm).fold(0.0, f64::max)
    }

    /// Positivity test with symmetrization.
    ///
    /// True iff `‖a − a*‖ ≤ tol·(1+‖a‖)` and every eigenvalue of `½(a+a*)` is at
    /// least `−tol·(1+‖a‖)`.
    pub fn is_positive(&self, tol: f64) -> bool {
        let scale = tol * (1.0 + self.operator_norm());
        self.blocks.iter().all(|b| {
            linalg::op_norm(&(b - b.adjoint())) <= scale && linalg::eigh(b).0.first().is_none_or(|&l| l >= -scale)
        })
    }

    /// Applies a real function to the spectrum of each (Hermitian) block.
    pub fn hermitian_fn(&self, f: impl Fn(f64) -> f64 + Copy) -> Self {
        self.map(|b| linalg::hermitian_fn(b, f))
    }

    /// Norm of the difference `‖self − other‖`.
    pub fn distance(&self, other: &Self) -> f64 {
        (self - other).operator_norm()
    }

    /// Trace summed over blocks.
    pub fn trace(&self) -> C64 {
        self.blocks.iter().map(|b| b.trace()).fold(ZERO, |a, b| a + b)
    }
}

impl<'a> Add<&'a AlgebraElement> for &'a AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.zip(rhs, |a, b| a + b)
    }
}

impl<'a> Sub<&'a AlgebraElement> for &'a AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.zip(rhs, |a, b| a - b)
    }
}

impl<'a> Mul<&'a AlgebraElement> for &'a AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.zip(rhs, |a, b| a * b)
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.map(|b| -b)
    }
}

/// Two-sided ideal of a block algebra, given by the blocks it contains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealDescriptor {
    algebra: MatrixAlgebra,
    present: Vec<usize>,
}

impl IdealDescriptor {
    /// Ideal spanned by the listed blocks.
    pub fn new(algebra: MatrixAlgebra, mut present: Vec<usize>) -> Result<Self> {
        present.sort_unstable();
        present.dedup();
        if present.iter().any(|&i| i >= algebra.num_blocks()) {
            return Err(Error::Shape("ideal block out of range".into()));
        }
        Ok(IdealDescriptor { algebra, present })
    }

    /// Ambient algebra.
    pub fn algebra(&self) -> &MatrixAlgebra {
        &self.algebra
    }

    /// Indices of the blocks contained in the ideal.
    pub fn present_blocks(&self) -> &[usize] {
        &self.present
    }

    /// True iff the ideal is the whole algebra.
    pub fn is_full(&self) -> bool {
        self.present.len() == self.algebra.num_blocks()
    }

    /// True iff the ideal is zero.
    pub fn is_empty(&self) -> bool {
        self.present.is_empty()
    }

    /// Unit of the ideal, a central projection.
    pub fn unit(&self) -> AlgebraElement {
        let mut z = self.algebra.zero_element();
        for &i in &self.present {
            let n = self.algebra.blocks[i];
            z.blocks[i] = CMat::identity(n, n);
        }
        z
    }
}

/// The unitalization `Ã`, realized as `A ⊕ ℂ`.
///
/// Under this identification `b + λ1̃ ↦ (b + λ1, λ)`; the adjoined unit is
/// `(1, 1)` and the character vanishing on `A` reads the last block.
#[derive(Debug, Clone)]
pub struct Unitalization {
    base: MatrixAlgebra,
    algebra: MatrixAlgebra,
}

/// Builds `Ã = A ⊕ ℂ` with its embedding and character.
pub fn unitalize_algebra(base: &MatrixAlgebra) -> Unitalization {
    let mut blocks = base.blocks.clone();
    blocks.push(1);
    Unitalization {
        base: base.clone(),
        algebra: MatrixAlgebra { blocks },
    }
}

impl Unitalization {
    /// The unitalized algebra.
    pub fn algebra(&self) -> &MatrixAlgebra {
        &self.algebra
    }

    /// The original algebra.
    pub fn base(&self) -> &MatrixAlgebra {
        &self.base
    }

    /// `b ↦ (b, 0)`.
    pub fn embed(&self, b: &AlgebraElement) -> AlgebraElement {
        assert_eq!(b.algebra, self.base);
        let mut blocks = b.blocks.clone();
        blocks.push(CMat::zeros(1, 1));
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks,
        }
    }

    /// The adjoined unit `1̃`.
    pub fn unit(&self) -> AlgebraElement {
        self.algebra.identity()
    }

    /// The character `δ` with `δ(A) = 0`, `δ(1̃) = 1`.
    pub fn character(&self, x: &AlgebraElement) -> C64 {
        x.blocks.last().expect("unitalization has a scalar block")[(0, 0)]
    }

    /// Splits `x` as `b + λ1̃`.
    pub fn decompose(&self, x: &AlgebraElement) -> (AlgebraElement, C64) {
        let lambda = self.character(x);
        let r = self.base.num_blocks();
        let blocks = x.blocks[..r]
            .iter()
            .map(|c| c - CMat::identity(c.nrows(), c.ncols()) * lambda)
            .collect();
        (
            AlgebraElement {
                algebra: self.base.clone(),
                blocks,
            },
            lambda,
        )
    }
}

//! Right Hilbert modules over block algebras.
//!
//! A module lives inside an ambient space `⊕ᵢ M_{kᵢ,nᵢ}(ℂ)` as a right-invariant
//! subspace. Ambient elements are flattened block by block, row-major inside
//! each block. Every module carries
//!
//! - an orthonormal ℂ-basis for the trace form `Σᵢ tr(xᵢ* yᵢ)`, and
//! - its standard form: isometries `Wᵢ` (`kᵢ × mᵢ`) such that the module is
//!   exactly `{x : xᵢ ∈ Wᵢ·M_{mᵢ,nᵢ}}`.
//!
//! Module coordinates always refer to the orthonormal basis. Standard
//! coordinates `y = Wᵢ* xᵢ` are reached through [`HilbertModuleSpace::to_standard`].

// f64 math in no_std
use alloc::format;
use alloc::vec::Vec;
use core::ops::{Add, Sub};
#[allow(unused_imports)]
use nalgebra::ComplexField as _;

use crate::algebra::{AlgebraElement, IdealDescriptor, MatrixAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{self, re, CMat, CVec, C64, ONE};
use crate::random;

/// An element of an ambient space `⊕ M_{kᵢ,nᵢ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleElement {
    blocks: Vec<CMat>,
}

impl ModuleElement {
    /// Wraps ambient blocks.
    pub fn new(blocks: Vec<CMat>) -> Self {
        ModuleElement { blocks }
    }

    /// Ambient blocks.
    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    /// Scalar multiple.
    pub fn scale(&self, z: C64) -> Self {
        ModuleElement {
            blocks: self.blocks.iter().map(|b| b * z).collect(),
        }
    }

    /// Right multiplication by an algebra element, block-wise.
    pub fn mul_right(&self, b: &AlgebraElement) -> Self {
        ModuleElement {
            blocks: self.blocks.iter().zip(b.blocks()).map(|(x, b)| x * b).collect(),
        }
    }

    /// `⊕ᵢ xᵢ* yᵢ` as an element of `algebra`.
    pub fn inner_in(&self, other: &Self, algebra: &MatrixAlgebra) -> Result<AlgebraElement> {
        if self.blocks.len() != other.blocks.len()
            || self
                .blocks
                .iter()
                .zip(&other.blocks)
                .any(|(a, b)| a.shape() != b.shape())
        {
            return Err(Error::Shape("inner product of elements of different shapes".into()));
        }
        algebra.element(
            self.blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a.adjoint() * b)
                .collect(),
        )
    }
}

impl<'a> Add<&'a ModuleElement> for &'a ModuleElement {
    type Output = ModuleElement;
    fn add(self, rhs: &ModuleElement) -> ModuleElement {
        ModuleElement {
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a ModuleElement> for &'a ModuleElement {
    type Output = ModuleElement;
    fn sub(self, rhs: &ModuleElement) -> ModuleElement {
        ModuleElement {
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a - b).collect(),
        }
    }
}

/// A right Hilbert module over a [`MatrixAlgebra`].
#[derive(Debug, Clone)]
pub struct HilbertModuleSpace {
    algebra: MatrixAlgebra,
    rows: Vec<usize>,
    basis: CMat,
    w: Vec<CMat>,
    to_std: CMat,
    right: Vec<CMat>,
}

fn ambient_offsets(alg: &MatrixAlgebra, rows: &[usize]) -> Vec<usize> {
    let mut off = Vec::with_capacity(rows.len() + 1);
    let mut acc = 0;
    for (k, n) in rows.iter().zip(alg.block_dims()) {
        off.push(acc);
        acc += k * n;
    }
    off.push(acc);
    off
}

impl HilbertModuleSpace {
    fn check_rows(algebra: &MatrixAlgebra, rows: &[usize]) -> Result<()> {
        if rows.len() != algebra.num_blocks() {
            return Err(Error::Shape(format!(
                "{} ambient row counts for {} blocks",
                rows.len(),
                algebra.num_blocks()
            )));
        }
        Ok(())
    }

    /// Assembles a module from its standard form and a unitary change of
    /// coordinates `std = to_std · coords`.
    pub(crate) fn from_parts(algebra: MatrixAlgebra, rows: Vec<usize>, w: Vec<CMat>, to_std: CMat) -> Self {
        let n = algebra.block_dims().to_vec();
        let amb = ambient_offsets(&algebra, &rows);
        let dim: usize = w.iter().zip(&n).map(|(w, n)| w.ncols() * n).sum();
        assert_eq!(to_std.shape(), (dim, dim));
        let mut q_std = CMat::zeros(amb[rows.len()], dim);
        let mut so = 0;
        for i in 0..n.len() {
            let (k, m, ni) = (rows[i], w[i].ncols(), n[i]);
            for r in 0..m {
                for c in 0..ni {
                    for rho in 0..k {
                        q_std[(amb[i] + rho * ni + c, so + r * ni + c)] = w[i][(rho, r)];
                    }
                }
            }
            so += m * ni;
        }
        let basis = q_std * &to_std;
        let mut module = HilbertModuleSpace {
            algebra,
            rows,
            basis,
            w,
            to_std,
            right: Vec::new(),
        };
        module.right = (0..module.algebra.dim())
            .map(|u| {
                let (i, p, q) = module.algebra.unit_of(u);
                let a = module.std_rows(i, q);
                let b = module.std_rows(i, p);
                a.adjoint() * b
            })
            .collect();
        module
    }

    /// Rows `(i, r, col)` of `to_std` for all `r`, stacked.
    fn std_rows(&self, i: usize, col: usize) -> CMat {
        let ni = self.algebra.block_dims()[i];
        let m = self.w[i].ncols();
        let off = self.std_offset(i);
        CMat::from_fn(m, self.dim(), |r, a| self.to_std[(off + r * ni + col, a)])
    }

    fn std_offset(&self, i: usize) -> usize {
        self.w[..i]
            .iter()
            .zip(self.algebra.block_dims())
            .map(|(w, n)| w.ncols() * n)
            .sum()
    }

    /// The smallest right-invariant subspace containing `generators`.
    ///
    /// Rank is decided by singular values above `tol · σ_max`. An empty
    /// generator list gives the zero module.
    pub fn make_module(
        algebra: &MatrixAlgebra,
        rows: &[usize],
        generators: &[ModuleElement],
        tol: f64,
    ) -> Result<Self> {
        Self::check_rows(algebra, rows)?;
        let n = algebra.block_dims();
        for g in generators {
            if g.blocks.len() != n.len() || g.blocks.iter().enumerate().any(|(i, b)| b.shape() != (rows[i], n[i])) {
                return Err(Error::Shape("generator does not conform to the ambient".into()));
            }
        }
        let spans: Vec<CMat> = (0..n.len())
            .map(|i| {
                let mut cat = CMat::zeros(rows[i], generators.len() * n[i]);
                for (g, gen) in generators.iter().enumerate() {
                    cat.view_mut((0, g * n[i]), (rows[i], n[i])).copy_from(&gen.blocks[i]);
                }
                cat
            })
            .collect();
        let w = Self::standard_isometries(&spans, tol);
        let dim: usize = w.iter().zip(n).map(|(w, n)| w.ncols() * n).sum();
        Ok(Self::from_parts(
            algebra.clone(),
            rows.to_vec(),
            w,
            CMat::identity(dim, dim),
        ))
    }

    /// Column-space bases of each block with one global cutoff.
    fn standard_isometries(spans: &[CMat], tol: f64) -> Vec<CMat> {
        let svds: Vec<linalg::Svd> = spans.iter().map(linalg::svd).collect();
        let smax = svds.iter().filter_map(|d| d.s.first().copied()).fold(0.0, f64::max);
        svds.iter()
            .map(|d| {
                let r = if smax <= f64::MIN_POSITIVE {
                    0
                } else {
                    d.s.iter().take_while(|&&s| s > tol * smax).count()
                };
                d.u.columns(0, r).into_owned()
            })
            .collect()
    }

    /// Adopts an explicit orthonormal basis (ambient vectors as columns).
    ///
    /// Fails unless the basis is orthonormal and spans a right-invariant
    /// subspace, both to `tol`.
    pub fn from_orthonormal_basis(algebra: &MatrixAlgebra, rows: &[usize], basis: CMat, tol: f64) -> Result<Self> {
        Self::check_rows(algebra, rows)?;
        let amb = ambient_offsets(algebra, rows);
        let n = algebra.block_dims();
        if basis.nrows() != amb[n.len()] {
            return Err(Error::Shape(format!(
                "basis vectors have length {}, ambient dimension is {}",
                basis.nrows(),
                amb[n.len()]
            )));
        }
        let d = basis.ncols();
        let defect = if d == 0 { 0.0 } else { linalg::isometry_defect(&basis) };
        if defect > tol.max(1e-12) {
            return Err(Error::InvalidModule {
                what: "basis is not orthonormal",
                residual: defect,
            });
        }
        let spans: Vec<CMat> = (0..n.len())
            .map(|i| {
                let mut cat = CMat::zeros(rows[i], d * n[i]);
                for a in 0..d {
                    for rho in 0..rows[i] {
                        for c in 0..n[i] {
                            cat[(rho, a * n[i] + c)] = basis[(amb[i] + rho * n[i] + c, a)];
                        }
                    }
                }
                cat
            })
            .collect();
        let w = Self::standard_isometries(&spans, tol);
        let std_dim: usize = w.iter().zip(n).map(|(w, n)| w.ncols() * n).sum();
        if std_dim != d {
            return Err(Error::InvalidModule {
                what: "span is not right-invariant",
                residual: (std_dim as f64 - d as f64).abs(),
            });
        }
        let probe = Self::from_parts(algebra.clone(), rows.to_vec(), w.clone(), CMat::identity(d, d));
        let to_std = probe.basis.adjoint() * &basis;
        let res = linalg::max_abs(&(&probe.basis * &to_std - &basis));
        if res > tol.max(1e-12) * 10.0 {
            return Err(Error::InvalidModule {
                what: "span is not right-invariant",
                residual: res,
            });
        }
        Ok(Self::from_parts(algebra.clone(), rows.to_vec(), w, to_std))
    }

    /// The whole ambient `⊕ M_{kᵢ,nᵢ}`.
    pub fn full(algebra: &MatrixAlgebra, rows: &[usize]) -> Result<Self> {
        Self::check_rows(algebra, rows)?;
        let w: Vec<CMat> = rows.iter().map(|&k| CMat::identity(k, k)).collect();
        let d: usize = rows.iter().zip(algebra.block_dims()).map(|(k, n)| k * n).sum();
        Ok(Self::from_parts(
            algebra.clone(),
            rows.to_vec(),
            w,
            CMat::identity(d, d),
        ))
    }

    /// The algebra as a module over itself.
    pub fn algebra_module(algebra: &MatrixAlgebra) -> Self {
        Self::full(algebra, algebra.block_dims()).expect("row counts match blocks")
    }

    /// The zero submodule of the given ambient.
    pub fn zero(algebra: &MatrixAlgebra, rows: &[usize]) -> Result<Self> {
        Self::make_module(algebra, rows, &[], 1.0)
    }

    /// Coefficient algebra.
    pub fn algebra(&self) -> &MatrixAlgebra {
        &self.algebra
    }

    /// Ambient row counts `(k₁,…,k_r)`.
    pub fn ambient_rows(&self) -> &[usize] {
        &self.rows
    }

    /// Complex dimension.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Length of flattened ambient vectors.
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Orthonormal basis, one ambient vector per column.
    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    /// Standard-form multiplicities `mᵢ`.
    pub fn multiplicities(&self) -> Vec<usize> {
        self.w.iter().map(|w| w.ncols()).collect()
    }

    /// Standard-form isometries `Wᵢ`.
    pub fn standard_isometries_ref(&self) -> &[CMat] {
        &self.w
    }

    /// Unitary taking module coordinates to standard coordinates.
    pub fn to_standard(&self) -> &CMat {
        &self.to_std
    }

    /// Standard-coordinate index of `(block, row, column)`.
    pub fn std_index(&self, i: usize, r: usize, c: usize) -> usize {
        self.std_offset(i) + r * self.algebra.block_dims()[i] + c
    }

    /// Standard blocks `yᵢ` (`mᵢ × nᵢ`) of a coordinate vector.
    pub fn std_blocks(&self, x: &CVec) -> Vec<CMat> {
        let y = &self.to_std * x;
        let n = self.algebra.block_dims();
        let mut off = 0;
        self.w
            .iter()
            .zip(n)
            .map(|(w, &ni)| {
                let m = w.ncols();
                let b = CMat::from_fn(m, ni, |r, c| y[off + r * ni + c]);
                off += m * ni;
                b
            })
            .collect()
    }

    /// Coordinates from standard blocks.
    pub fn from_std_blocks(&self, blocks: &[CMat]) -> CVec {
        let mut y = CVec::zeros(self.dim());
        let mut off = 0;
        for b in blocks {
            for r in 0..b.nrows() {
                for c in 0..b.ncols() {
                    y[off + r * b.ncols() + c] = b[(r, c)];
                }
            }
            off += b.nrows() * b.ncols();
        }
        self.to_std.adjoint() * y
    }

    /// Ambient element with the given coordinates.
    pub fn element(&self, x: &CVec) -> ModuleElement {
        let v = &self.basis * x;
        let n = self.algebra.block_dims();
        let mut off = 0;
        let blocks = self
            .rows
            .iter()
            .zip(n)
            .map(|(&k, &ni)| {
                let b = CMat::from_fn(k, ni, |r, c| v[off + r * ni + c]);
                off += k * ni;
                b
            })
            .collect();
        ModuleElement { blocks }
    }

    /// Flattened ambient vector of an element.
    pub fn ambient_vector(&self, x: &ModuleElement) -> Result<CVec> {
        let n = self.algebra.block_dims();
        if x.blocks.len() != n.len()
            || x.blocks
                .iter()
                .enumerate()
                .any(|(i, b)| b.shape() != (self.rows[i], n[i]))
        {
            return Err(Error::Shape("element does not conform to the ambient".into()));
        }
        let mut v = CVec::zeros(self.ambient_dim());
        let mut off = 0;
        for b in &x.blocks {
            for r in 0..b.nrows() {
                for c in 0..b.ncols() {
                    v[off + r * b.ncols() + c] = b[(r, c)];
                }
            }
            off += b.nrows() * b.ncols();
        }
        Ok(v)
    }

    /// Coordinates of an element, rejecting elements outside the module.
    pub fn coords(&self, x: &ModuleElement, tol: f64) -> Result<CVec> {
        let v = self.ambient_vector(x)?;
        let c = self.basis.adjoint() * &v;
        let res = (&self.basis * &c - &v).norm();
        if res > tol * (1.0 + v.norm()) {
            return Err(Error::NotInModule { residual: res });
        }
        Ok(c)
    }

    /// `k`-th basis vector as coordinates.
    pub fn unit_coords(&self, k: usize) -> CVec {
        let mut e = CVec::zeros(self.dim());
        e[k] = ONE;
        e
    }

    /// `⟨x,y⟩` for coordinate vectors.
    pub fn inner_coords(&self, x: &CVec, y: &CVec) -> AlgebraElement {
        let bx = self.std_blocks(x);
        let by = self.std_blocks(y);
        let blocks = bx.iter().zip(&by).map(|(a, b)| a.adjoint() * b).collect();
        self.algebra.element(blocks).expect("standard blocks conform")
    }

    /// `⟨x,y⟩` for ambient elements of this module.
    pub fn inner_product(&self, x: &ModuleElement, y: &ModuleElement) -> Result<AlgebraElement> {
        self.ambient_vector(x)?;
        self.ambient_vector(y)?;
        x.inner_in(y, &self.algebra)
    }

    /// `‖x‖ = √‖⟨x,x⟩‖`.
    pub fn element_norm(&self, x: &ModuleElement) -> Result<f64> {
        Ok(self.inner_product(x, x)?.operator_norm().sqrt())
    }

    /// `‖x‖` for a coordinate vector.
    pub fn norm_coords(&self, x: &CVec) -> f64 {
        self.std_blocks(x).iter().map(linalg::op_norm).fold(0.0, f64::max)
    }

    /// Matrix of `x ↦ xb` on coordinates.
    pub fn right_action(&self, b: &AlgebraElement) -> CMat {
        let blocks: Vec<CMat> = self
            .w
            .iter()
            .zip(b.blocks())
            .map(|(w, bi)| linalg::kron(&CMat::identity(w.ncols(), w.ncols()), &bi.transpose()))
            .collect();
        self.to_std.adjoint() * linalg::block_diag(&blocks) * &self.to_std
    }

    /// Right actions of the matrix units, in algebra basis order.
    pub fn right_unit_actions(&self) -> &[CMat] {
        &self.right
    }

    /// Matrix on coordinates of an ambient-linear map that preserves the module.
    pub fn operator_from_ambient(&self, f: impl Fn(&CVec) -> CVec) -> CMat {
        let cols: Vec<CVec> = (0..self.dim())
            .map(|k| self.basis.adjoint() * f(&self.basis.column(k).into_owned()))
            .collect();
        if cols.is_empty() {
            return CMat::zeros(0, 0);
        }
        CMat::from_columns(&cols)
    }

    /// Range ideal `cls⟨E,E⟩`.
    ///
    /// For each block, the span of the `i`-th components of `⟨yᵢ,yᵢ′⟩` is
    /// `span{e_{cc′}}` as soon as `mᵢ > 0`, where `mᵢ` was decided by a rank test.
    pub fn range_ideal(&self) -> IdealDescriptor {
        let present = self
            .w
            .iter()
            .enumerate()
            .filter(|(_, w)| w.ncols() > 0)
            .map(|(i, _)| i)
            .collect();
        IdealDescriptor::new(self.algebra.clone(), present).expect("indices in range")
    }

    /// True iff the range ideal is the whole algebra.
    pub fn is_full(&self) -> bool {
        self.range_ideal().is_full()
    }

    /// Re-realizes the module in the ambient `⊕ M_{mᵢ,nᵢ}`, keeping coordinates.
    pub fn standardize(&self) -> Self {
        let w = self.w.iter().map(|w| CMat::identity(w.ncols(), w.ncols())).collect();
        Self::from_parts(self.algebra.clone(), self.multiplicities(), w, self.to_std.clone())
    }

    /// `𝔅ᵃ(E) ≅ ⊕_{mᵢ>0} M_{mᵢ}` with its representation on coordinates.
    pub fn adjointable_operators(&self) -> AdjointableOperators {
        let active: Vec<usize> = (0..self.w.len()).filter(|&i| self.w[i].ncols() > 0).collect();
        let blocks = active.iter().map(|&i| self.w[i].ncols()).collect();
        AdjointableOperators {
            algebra: MatrixAlgebra::from_blocks_unchecked(blocks),
            active,
            n: self.algebra.block_dims().to_vec(),
            m: self.multiplicities(),
            to_std: self.to_std.clone(),
        }
    }

    /// Linking algebra `𝔅ᵃ(ℬ ⊕ E)` with its corner embeddings.
    pub fn linking_algebra(&self) -> LinkingAlgebraView {
        LinkingAlgebraView::new(self)
    }

    /// Dual module `E*` over `𝔅ᵃ(E)`.
    pub fn dual_module(&self) -> DualModule {
        DualModule::new(self)
    }

    /// `x = w_α·|x|^α` with `w_α = x·|x|^{−α}` on the support of `|x|`.
    ///
    /// Singular values below `tol · σ_max` are treated as zero.
    pub fn alpha_factor(&self, x: &CVec, alpha: f64, tol: f64) -> AlphaFactor {
        let y = self.std_blocks(x);
        let svds: Vec<linalg::Svd> = y.iter().map(linalg::svd).collect();
        let smax = svds.iter().filter_map(|d| d.s.first().copied()).fold(0.0, f64::max);
        let cut = tol * smax;
        let mut wb = Vec::with_capacity(y.len());
        let mut pb = Vec::with_capacity(y.len());
        for (yi, d) in y.iter().zip(&svds) {
            let (m, n) = yi.shape();
            let mut wi = CMat::zeros(m, n);
            let mut pi = CMat::zeros(n, n);
            for (k, &s) in d.s.iter().enumerate() {
                if s <= cut || s <= f64::MIN_POSITIVE {
                    continue;
                }
                let u = d.u.column(k);
                let v = d.v.column(k);
                wi += u * v.adjoint() * re(s.powf(1.0 - alpha));
                pi += v * v.adjoint() * re(s.powf(alpha));
            }
            wb.push(wi);
            pb.push(pi);
        }
        AlphaFactor {
            w: self.from_std_blocks(&wb),
            abs_pow: self.algebra.element(pb).expect("blocks conform"),
        }
    }

    /// Searches for `ξ` with `⟨ξ,ξ⟩ = 1` among basis vectors and 32 seeded
    /// random combinations; `None` means none was found.
    pub fn find_unit_vector(&self, seed: u64, tol: f64) -> Option<CVec> {
        let n = self.algebra.block_dims();
        if self.w.iter().zip(n).any(|(w, &ni)| w.ncols() < ni) {
            return None;
        }
        let mut rng = random::seeded(seed);
        let d = self.dim();
        let candidates = (0..d)
            .map(|k| self.unit_coords(k))
            .chain((0..32).map(|_| random::gaussian(&mut rng, d, 1).column(0).into_owned()));
        for x in candidates {
            let y = self.std_blocks(&x);
            let svds: Vec<linalg::Svd> = y.iter().map(linalg::svd).collect();
            let smax = svds.iter().filter_map(|d| d.s.first().copied()).fold(0.0, f64::max);
            let invertible = svds
                .iter()
                .zip(n)
                .all(|(d, &ni)| d.s.len() == ni && d.s[ni - 1] > tol * smax);
            if smax > 0.0 && invertible {
                let polar: Vec<CMat> = svds.iter().map(|d| &d.u * d.v.adjoint()).collect();
                return Some(self.from_std_blocks(&polar));
            }
        }
        None
    }

    /// `M_k(E)` over `M_k(ℬ)`, coordinates ordered `(s·k + t)·dim + a`.
    pub fn amplify(&self, k: usize) -> Self {
        let n = self.algebra.block_dims();
        let alg = self.algebra.amplify(k);
        let rows: Vec<usize> = self.rows.iter().map(|r| r * k).collect();
        let amb = ambient_offsets(&self.algebra, &self.rows);
        let amb_k = ambient_offsets(&alg, &rows);
        let d = self.dim();
        let mut basis = CMat::zeros(amb_k[n.len()], k * k * d);
        for s in 0..k {
            for t in 0..k {
                for a in 0..d {
                    let col = (s * k + t) * d + a;
                    for i in 0..n.len() {
                        for rho in 0..self.rows[i] {
                            for c in 0..n[i] {
                                let src = amb[i] + rho * n[i] + c;
                                let dst = amb_k[i] + (s * self.rows[i] + rho) * (k * n[i]) + t * n[i] + c;
                                basis[(dst, col)] = self.basis[(src, a)];
                            }
                        }
                    }
                }
            }
        }
        Self::from_orthonormal_basis(&alg, &rows, basis, 1e-10).expect("amplified basis is valid")
    }

    /// Column sum `Eᵏ`, coordinates ordered `s·dim + a`.
    pub fn power(&self, k: usize) -> Self {
        let n = self.algebra.block_dims();
        let rows: Vec<usize> = self.rows.iter().map(|r| r * k).collect();
        let amb = ambient_offsets(&self.algebra, &self.rows);
        let amb_k = ambient_offsets(&self.algebra, &rows);
        let d = self.dim();
        let mut basis = CMat::zeros(amb_k[n.len()], k * d);
        for s in 0..k {
            for a in 0..d {
                for i in 0..n.len() {
                    for rho in 0..self.rows[i] {
                        for c in 0..n[i] {
                            let src = amb[i] + rho * n[i] + c;
                            let dst = amb_k[i] + (s * self.rows[i] + rho) * n[i] + c;
                            basis[(dst, s * d + a)] = self.basis[(src, a)];
                        }
                    }
                }
            }
        }
        Self::from_orthonormal_basis(&self.algebra, &rows, basis, 1e-10).expect("column sum basis is valid")
    }
}

/// Result of [`HilbertModuleSpace::alpha_factor`].
#[derive(Debug, Clone)]
pub struct AlphaFactor {
    /// Coordinates of `w_α`.
    pub w: CVec,
    /// `|x|^α`.
    pub abs_pow: AlgebraElement,
}

/// `𝔅ᵃ(E)` as an abstract block algebra plus its representation on `E`.
///
/// Block `β` of the abstract algebra is `M_{m_i}` for the `β`-th module
/// block `i` with `mᵢ > 0`; it acts by `yᵢ ↦ a·yᵢ` on standard blocks.
#[derive(Debug, Clone)]
pub struct AdjointableOperators {
    algebra: MatrixAlgebra,
    active: Vec<usize>,
    n: Vec<usize>,
    m: Vec<usize>,
    to_std: CMat,
}

impl AdjointableOperators {
    /// Abstract algebra `⊕ M_{mᵢ}`.
    pub fn algebra(&self) -> &MatrixAlgebra {
        &self.algebra
    }

    /// Module block index of each abstract block.
    pub fn active_blocks(&self) -> &[usize] {
        &self.active
    }

    /// Operator on module coordinates.
    pub fn to_operator(&self, a: &AlgebraElement) -> CMat {
        let mut blocks = Vec::with_capacity(self.n.len());
        let mut beta = 0;
        for i in 0..self.n.len() {
            if self.m[i] == 0 {
                continue;
            }
            blocks.push(linalg::kron(a.block(beta), &CMat::identity(self.n[i], self.n[i])));
            beta += 1;
        }
        self.to_std.adjoint() * linalg::block_diag(&blocks) * &self.to_std
    }

    /// Nearest abstract element to an operator (partial trace over `nᵢ`).
    pub fn from_operator(&self, op: &CMat) -> AlgebraElement {
        let s = &self.to_std * op * self.to_std.adjoint();
        let mut blocks = Vec::with_capacity(self.active.len());
        let mut off = 0;
        for i in 0..self.n.len() {
            let (m, n) = (self.m[i], self.n[i]);
            if m == 0 {
                continue;
            }
            let b = CMat::from_fn(m, m, |r, rp| {
                (0..n).map(|c| s[(off + r * n + c, off + rp * n + c)]).sum::<C64>() / re(n as f64)
            });
            blocks.push(b);
            off += m * n;
        }
        self.algebra.element(blocks).expect("blocks conform")
    }

    /// Distance of an operator from the represented algebra.
    pub fn membership_residual(&self, op: &CMat) -> f64 {
        linalg::max_abs(&(op - self.to_operator(&self.from_operator(op))))
    }

    /// Operators of the matrix units, in abstract basis order.
    pub fn representation(&self) -> Vec<CMat> {
        (0..self.algebra.dim())
            .map(|k| self.to_operator(&self.algebra.basis_element(k)))
            .collect()
    }
}

/// Which corner of a linking algebra a matrix unit belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    /// Unit `e_{pq}` of block `i` of `ℬ`.
    Base {
        /// Block.
        i: usize,
        /// Row.
        p: usize,
        /// Column.
        q: usize,
    },
    /// The standard element with `yᵢ = e_{rc}`.
    Module {
        /// Block.
        i: usize,
        /// Standard row.
        r: usize,
        /// Column.
        c: usize,
    },
    /// The adjoint of the standard element with `yᵢ = e_{rc}`.
    Dual {
        /// Block.
        i: usize,
        /// Standard row.
        r: usize,
        /// Column.
        c: usize,
    },
    /// Unit `e_{ab}` of abstract block `beta` of `𝔅ᵃ(E)`.
    Operators {
        /// Abstract block.
        beta: usize,
        /// Row.
        a: usize,
        /// Column.
        b: usize,
    },
}

/// The extended linking algebra `[ℬ E*; E 𝔅ᵃ(E)] = 𝔅ᵃ(ℬ ⊕ E)`.
///
/// It is realized as `adjointable_operators` of the direct sum `ℬ ⊕ E`,
/// whose standard form in block `i` is `diag(1, Wᵢ)`; block `i` of the
/// linking algebra is `M_{nᵢ+mᵢ}` with `ℬ` in the upper-left corner.
#[derive(Debug, Clone)]
pub struct LinkingAlgebraView {
    module: HilbertModuleSpace,
    sum: HilbertModuleSpace,
    ops: AdjointableOperators,
    module_ops: AdjointableOperators,
}

impl LinkingAlgebraView {
    fn new(e: &HilbertModuleSpace) -> Self {
        let alg = e.algebra.clone();
        let n = alg.block_dims().to_vec();
        let m = e.multiplicities();
        let rows: Vec<usize> = n.iter().zip(&e.rows).map(|(a, b)| a + b).collect();
        let w: Vec<CMat> = (0..n.len())
            .map(|i| linalg::block_diag(&[CMat::identity(n[i], n[i]), e.w[i].clone()]))
            .collect();
        let db = alg.dim();
        let d = db + e.dim();
        let mut to_std = CMat::zeros(d, d);
        let mut off = 0;
        for i in 0..n.len() {
            let ni = n[i];
            for r in 0..ni + m[i] {
                for c in 0..ni {
                    let row = off + r * ni + c;
                    if r < ni {
                        to_std[(row, alg.index(i, r, c))] = ONE;
                    } else {
                        let src = e.std_index(i, r - ni, c);
                        for a in 0..e.dim() {
                            to_std[(row, db + a)] = e.to_std[(src, a)];
                        }
                    }
                }
            }
            off += (ni + m[i]) * ni;
        }
        let sum = HilbertModuleSpace::from_parts(alg, rows, w, to_std);
        let ops = sum.adjointable_operators();
        LinkingAlgebraView {
            module: e.clone(),
            module_ops: e.adjointable_operators(),
            sum,
            ops,
        }
    }

    /// The linking algebra `⊕ M_{nᵢ+mᵢ}`.
    pub fn algebra(&self) -> &MatrixAlgebra {
        self.ops.algebra()
    }

    /// The module `E`.
    pub fn module(&self) -> &HilbertModuleSpace {
        &self.module
    }

    /// `ℬ ⊕ E`, coordinates ordered as `ℬ` then `E`.
    pub fn direct_sum(&self) -> &HilbertModuleSpace {
        &self.sum
    }

    /// Representation of the linking algebra on `ℬ ⊕ E`.
    pub fn operators(&self) -> &AdjointableOperators {
        &self.ops
    }

    /// `𝔅ᵃ(E)`.
    pub fn module_operators(&self) -> &AdjointableOperators {
        &self.module_ops
    }

    fn nm(&self, i: usize) -> (usize, usize) {
        (self.module.algebra.block_dims()[i], self.module.w[i].ncols())
    }

    fn empty_blocks(&self) -> Vec<CMat> {
        self.algebra().block_dims().iter().map(|&s| CMat::zeros(s, s)).collect()
    }

    fn wrap(&self, blocks: Vec<CMat>) -> AlgebraElement {
        self.algebra().element(blocks).expect("linking blocks conform")
    }

    /// Corner membership of the `k`-th matrix unit.
    pub fn corner_of(&self, k: usize) -> Corner {
        let (i, p, q) = self.algebra().unit_of(k);
        let (n, _) = self.nm(i);
        match (p < n, q < n) {
            (true, true) => Corner::Base { i, p, q },
            (false, true) => Corner::Module { i, r: p - n, c: q },
            (true, false) => Corner::Dual { i, r: q - n, c: p },
            (false, false) => {
                let beta = self.module_ops.active.iter().position(|&j| j == i).expect("active");
                Corner::Operators {
                    beta,
                    a: p - n,
                    b: q - n,
                }
            }
        }
    }

    /// `b ↦ [b 0; 0 0]`.
    pub fn embed11(&self, b: &AlgebraElement) -> AlgebraElement {
        let mut blocks = self.empty_blocks();
        for (i, bl) in blocks.iter_mut().enumerate() {
            let (n, _) = self.nm(i);
            bl.view_mut((0, 0), (n, n)).copy_from(b.block(i));
        }
        self.wrap(blocks)
    }

    /// `x ↦ [0 0; x 0]`.
    pub fn embed21(&self, x: &CVec) -> AlgebraElement {
        let y = self.module.std_blocks(x);
        let mut blocks = self.empty_blocks();
        for (i, bl) in blocks.iter_mut().enumerate() {
            let (n, m) = self.nm(i);
            bl.view_mut((n, 0), (m, n)).copy_from(&y[i]);
        }
        self.wrap(blocks)
    }

    /// `x ↦ [0 x*; 0 0]`.
    pub fn embed12(&self, x: &CVec) -> AlgebraElement {
        self.embed21(x).adjoint()
    }

    /// `a ↦ [0 0; 0 a]`.
    pub fn embed22(&self, a: &AlgebraElement) -> AlgebraElement {
        let mut blocks = self.empty_blocks();
        for (beta, &i) in self.module_ops.active.iter().enumerate() {
            let (n, m) = self.nm(i);
            blocks[i].view_mut((n, n), (m, m)).copy_from(a.block(beta));
        }
        self.wrap(blocks)
    }

    /// Upper-left corner.
    pub fn corner11(&self, l: &AlgebraElement) -> AlgebraElement {
        let blocks = (0..self.module.algebra.num_blocks())
            .map(|i| {
                let (n, _) = self.nm(i);
                l.block(i).view((0, 0), (n, n)).into_owned()
            })
            .collect();
        self.module.algebra.element(blocks).expect("blocks conform")
    }

    /// Lower-left corner as coordinates in `E`.
    pub fn corner21(&self, l: &AlgebraElement) -> CVec {
        let y: Vec<CMat> = (0..self.module.algebra.num_blocks())
            .map(|i| {
                let (n, m) = self.nm(i);
                l.block(i).view((n, 0), (m, n)).into_owned()
            })
            .collect();
        self.module.from_std_blocks(&y)
    }

    /// The `x` whose adjoint sits in the upper-right corner.
    pub fn corner12(&self, l: &AlgebraElement) -> CVec {
        self.corner21(&l.adjoint())
    }

    /// Lower-right corner as an element of `𝔅ᵃ(E)`.
    pub fn corner22(&self, l: &AlgebraElement) -> AlgebraElement {
        let blocks = self
            .module_ops
            .active
            .iter()
            .map(|&i| {
                let (n, m) = self.nm(i);
                l.block(i).view((n, n), (m, m)).into_owned()
            })
            .collect();
        self.module_ops.algebra.element(blocks).expect("blocks conform")
    }
}

/// The dual `E*` as a full module over `𝔅ᵃ(E)`.
///
/// In abstract block `β` (module block `i`) the ambient is `M_{nᵢ,mᵢ}` and
/// `x*` has block `yᵢ*`.
#[derive(Debug, Clone)]
pub struct DualModule {
    module: HilbertModuleSpace,
    base: MatrixAlgebra,
    source: HilbertModuleSpace,
    active: Vec<usize>,
}

impl DualModule {
    fn new(e: &HilbertModuleSpace) -> Self {
        let ops = e.adjointable_operators();
        let rows: Vec<usize> = ops.active.iter().map(|&i| e.algebra.block_dims()[i]).collect();
        let module = HilbertModuleSpace::full(ops.algebra(), &rows).expect("rows match blocks");
        DualModule {
            module,
            base: e.algebra.clone(),
            source: e.clone(),
            active: ops.active,
        }
    }

    /// `E*` as a module over `𝔅ᵃ(E)`.
    pub fn module(&self) -> &HilbertModuleSpace {
        &self.module
    }

    /// The algebra `ℬ` acting on the left by `b·x* = (xb*)*`.
    pub fn base(&self) -> &MatrixAlgebra {
        &self.base
    }

    /// `x ↦ x*` on coordinates (conjugate-linear).
    pub fn conjugate(&self, x: &CVec) -> CVec {
        let y = self.source.std_blocks(x);
        let blocks: Vec<CMat> = self.active.iter().map(|&i| y[i].adjoint()).collect();
        self.module.from_std_blocks(&blocks)
    }

    /// Inverse of [`DualModule::conjugate`].
    pub fn unconjugate(&self, xs: &CVec) -> CVec {
        let ys = self.module.std_blocks(xs);
        let n = self.base.block_dims();
        let m = self.source.multiplicities();
        let mut y: Vec<CMat> = (0..n.len()).map(|i| CMat::zeros(m[i], n[i])).collect();
        for (beta, &i) in self.active.iter().enumerate() {
            y[i] = ys[beta].adjoint();
        }
        self.source.from_std_blocks(&y)
    }

    /// Left action of the `ℬ` matrix units on `E*` coordinates.
    pub fn base_action(&self) -> Vec<CMat> {
        (0..self.base.dim())
            .map(|u| {
                let (i, p, q) = self.base.unit_of(u);
                let beta = self.active.iter().position(|&j| j == i);
                let mut blocks: Vec<CMat> = self
                    .active
                    .iter()
                    .map(|&j| {
                        let nj = self.base.block_dims()[j];
                        CMat::zeros(nj, nj)
                    })
                    .collect();
                if let Some(beta) = beta {
                    blocks[beta][(p, q)] = ONE;
                }
                let opblocks: Vec<CMat> = blocks
                    .iter()
                    .zip(self.active.iter())
                    .map(|(b, &j)| {
                        let mj = self.source.w[j].ncols();
                        linalg::kron(b, &CMat::identity(mj, mj))
                    })
                    .collect();
                let s = linalg::block_diag(&opblocks);
                let t = self.module.to_standard();
                t.adjoint() * s * t
            })
            .collect()
    }
}

/// Zero of the given length.
#[cfg(test)]
pub(crate) fn zeros(n: usize) -> CVec {
    CVec::zeros(n)
}

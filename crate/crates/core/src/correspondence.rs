//! Correspondences and their interior tensor product.
//!
//! A correspondence is a right Hilbert module together with a left action of
//! a block algebra, stored as one matrix on module coordinates per matrix
//! unit of the left algebra.
//!
//! The tensor product `E ⊙ F` is built structurally. Write `εᵢᵣ` for the
//! standard element of `E` with `yᵢ = e_{r0}` and `Pᵢ = L_F(e⁽ⁱ⁾₀₀)`. Every
//! elementary tensor reduces to sums of `εᵢᵣ ⊙ g` with `g ∈ range Pᵢ`, and
//! these are mutually orthogonal with `⟨εᵢᵣ ⊙ g, εᵢᵣ ⊙ g′⟩ = ⟨g, g′⟩`. An
//! orthonormal basis `Gᵢ` of each `range Pᵢ` therefore gives an orthonormal
//! basis of the quotient, `dim E ⊙ F = Σᵢ mᵢ · rank Pᵢ`. [`scalar_gram`]
//! provides the traced Gram form of the algebraic tensor product for
//! independent verification.

// f64 math in no_std
use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use nalgebra::ComplexField as _;

use crate::algebra::{AlgebraElement, MatrixAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{self, re, CMat, CVec};
use crate::module::HilbertModuleSpace;
use crate::random;

/// A ℬ-𝒞 correspondence.
#[derive(Debug, Clone)]
pub struct Correspondence {
    module: HilbertModuleSpace,
    left_algebra: MatrixAlgebra,
    left: Vec<CMat>,
}

const PROBE_SEED: u64 = 0x5eed_c0de;

impl Correspondence {
    /// Validated constructor.
    ///
    /// Checks multiplicativity, `*`-compatibility, unitality and commutation
    /// with the right action on seeded random probes; any residual above
    /// `tol · scale` is rejected.
    pub fn new(module: HilbertModuleSpace, left_algebra: MatrixAlgebra, left: Vec<CMat>, tol: f64) -> Result<Self> {
        let c = Self::new_unchecked(module, left_algebra, left)?;
        let (mult, adj, unit, comm) = c.residuals();
        let d = c.module.dim() as f64;
        let scale = 1.0 + d.sqrt();
        if unit > tol * scale {
            return Err(Error::InvalidCorrespondence {
                identity: "1·y = y",
                residual: unit,
            });
        }
        if mult > tol * scale * 10.0 {
            return Err(Error::InvalidCorrespondence {
                identity: "(ab)·y = a·(b·y)",
                residual: mult,
            });
        }
        if adj > tol * scale {
            return Err(Error::InvalidCorrespondence {
                identity: "<a·y, y'> = <y, a*·y'>",
                residual: adj,
            });
        }
        if comm > tol * scale * 10.0 {
            return Err(Error::InvalidCorrespondence {
                identity: "a·(yc) = (a·y)c",
                residual: comm,
            });
        }
        Ok(c)
    }

    /// Constructor that checks shapes only; for left actions that are
    /// legitimately non-unital (such as `ℬ` acting on `E*` for non-full `E`).
    pub fn new_unchecked(module: HilbertModuleSpace, left_algebra: MatrixAlgebra, left: Vec<CMat>) -> Result<Self> {
        let d = module.dim();
        if left.len() != left_algebra.dim() || left.iter().any(|l| l.shape() != (d, d)) {
            return Err(Error::Shape(format!(
                "left action needs {} matrices of size {d}x{d}",
                left_algebra.dim()
            )));
        }
        Ok(Correspondence {
            module,
            left_algebra,
            left,
        })
    }

    /// `(multiplicativity, adjoint, unitality, commutation)` residuals,
    /// each a maximal entry modulus on seeded probes.
    pub fn residuals(&self) -> (f64, f64, f64, f64) {
        let d = self.module.dim();
        let mut rng = random::seeded(PROBE_SEED);
        let mut mult: f64 = 0.0;
        let mut adj: f64 = 0.0;
        let mut comm: f64 = 0.0;
        for _ in 0..3 {
            let a = random::element(&mut rng, &self.left_algebra);
            let b = random::element(&mut rng, &self.left_algebra);
            let c = random::element(&mut rng, self.module.algebra());
            let la = self.left_action(&a);
            let lb = self.left_action(&b);
            let s = 1.0 + a.operator_norm() * b.operator_norm();
            mult = mult.max(linalg::max_abs(&(self.left_action(&(&a * &b)) - &la * &lb)) / s);
            adj =
                adj.max(linalg::max_abs(&(self.left_action(&a.adjoint()) - la.adjoint())) / (1.0 + a.operator_norm()));
            let rc = self.module.right_action(&c);
            comm = comm.max(linalg::max_abs(&(&la * &rc - &rc * &la)) / (1.0 + a.operator_norm() * c.operator_norm()));
        }
        let unit = linalg::max_abs(&(self.left_action(&self.left_algebra.identity()) - CMat::identity(d, d)));
        (mult, adj, unit, comm)
    }

    /// `ℬ` as a correspondence over itself.
    pub fn identity(alg: &MatrixAlgebra) -> Self {
        let module = HilbertModuleSpace::algebra_module(alg);
        let left = (0..alg.dim())
            .map(|u| left_multiplication(alg, &alg.basis_element(u)))
            .collect();
        Correspondence {
            module,
            left_algebra: alg.clone(),
            left,
        }
    }

    /// `ℬ` with left action `b·y = (u*bu)y`.
    pub fn twisted(alg: &MatrixAlgebra, u: &AlgebraElement) -> Result<Self> {
        let module = HilbertModuleSpace::algebra_module(alg);
        let left = (0..alg.dim())
            .map(|k| {
                let b = alg.basis_element(k);
                left_multiplication(alg, &(&(&u.adjoint() * &b) * u))
            })
            .collect();
        Self::new(module, alg.clone(), left, 1e-9)
    }

    /// `E` as a `𝔅ᵃ(E)`-ℬ correspondence.
    pub fn from_operators(e: &HilbertModuleSpace) -> Self {
        let ops = e.adjointable_operators();
        Correspondence {
            module: e.clone(),
            left_algebra: ops.algebra().clone(),
            left: ops.representation(),
        }
    }

    /// Underlying right module.
    pub fn module(&self) -> &HilbertModuleSpace {
        &self.module
    }

    /// Left algebra.
    pub fn left_algebra(&self) -> &MatrixAlgebra {
        &self.left_algebra
    }

    /// Right algebra.
    pub fn right_algebra(&self) -> &MatrixAlgebra {
        self.module.algebra()
    }

    /// Left action of the matrix units.
    pub fn left_units(&self) -> &[CMat] {
        &self.left
    }

    /// Complex dimension.
    pub fn dim(&self) -> usize {
        self.module.dim()
    }

    /// Matrix of `y ↦ a·y`.
    pub fn left_action(&self, a: &AlgebraElement) -> CMat {
        let d = self.module.dim();
        let mut out = CMat::zeros(d, d);
        for (k, z) in a.coords().iter().enumerate() {
            if z.norm() != 0.0 {
                out += &self.left[k] * *z;
            }
        }
        out
    }

    /// Dimension of `span{a·y}` over matrix units `a` and basis vectors `y`.
    pub fn nondegenerate_span_dim(&self, tol: f64) -> usize {
        let d = self.dim();
        if d == 0 {
            return 0;
        }
        let mut cat = CMat::zeros(d, d * self.left.len());
        for (k, l) in self.left.iter().enumerate() {
            cat.view_mut((0, k * d), (d, d)).copy_from(l);
        }
        linalg::rank(&cat, tol)
    }

    /// True iff the left action is nondegenerate.
    pub fn is_nondegenerate(&self, tol: f64) -> bool {
        self.nondegenerate_span_dim(tol) == self.dim()
    }
}

/// Left multiplication by `b` on `ℬ` in matrix-unit coordinates.
pub fn left_multiplication(alg: &MatrixAlgebra, b: &AlgebraElement) -> CMat {
    let d = alg.dim();
    let mut out = CMat::zeros(d, d);
    for k in 0..d {
        let col = (b * &alg.basis_element(k)).coords();
        out.set_column(k, &col);
    }
    out
}

/// The interior tensor product `E ⊙ F` of a ℬ-module with a ℬ-𝒞
/// correspondence, with optional left action inherited from `E`.
#[derive(Debug, Clone)]
pub struct TensorProduct {
    left: HilbertModuleSpace,
    right: Correspondence,
    module: HilbertModuleSpace,
    range: Vec<CMat>,
    proj: Vec<Vec<CMat>>,
    offsets: Vec<usize>,
    corr: Option<Correspondence>,
}

impl TensorProduct {
    /// `E ⊙ F` as a right 𝒞-module.
    pub fn new(e: &HilbertModuleSpace, f: &Correspondence, tol: f64) -> Result<Self> {
        if e.algebra() != f.left_algebra() {
            return Err(Error::Shape(format!(
                "middle algebras differ: {:?} vs {:?}",
                e.algebra().block_dims(),
                f.left_algebra().block_dims()
            )));
        }
        let b = e.algebra();
        let n = b.block_dims();
        let m = e.multiplicities();
        let fm = f.module();
        let df = fm.dim();
        let mut range = Vec::with_capacity(n.len());
        let mut proj = Vec::with_capacity(n.len());
        let mut offsets = Vec::with_capacity(n.len() + 1);
        let mut off = 0;
        for i in 0..n.len() {
            offsets.push(off);
            let p = &f.left[b.index(i, 0, 0)];
            let g = if m[i] == 0 || df == 0 {
                CMat::zeros(df, 0)
            } else {
                linalg::range_basis(p, tol)
            };
            let gd = g.adjoint();
            proj.push((0..n[i]).map(|c| &gd * &f.left[b.index(i, 0, c)]).collect());
            off += m[i] * g.ncols();
            range.push(g);
        }
        offsets.push(off);
        let dim = off;

        // Realize inside (Σ mᵢ) stacked copies of F's standard ambient.
        let c_alg = fm.algebra();
        let cd = c_alg.block_dims();
        let fmult = fm.multiplicities();
        let slots: usize = m.iter().sum();
        let rows: Vec<usize> = fmult.iter().map(|k| k * slots).collect();
        let amb_block: Vec<usize> = fmult.iter().zip(cd).map(|(k, c)| k * c).collect();
        let mut amb_off = Vec::with_capacity(cd.len());
        let mut acc = 0;
        for a in &amb_block {
            amb_off.push(acc);
            acc += a * slots;
        }
        let mut basis = CMat::zeros(acc, dim);
        let mut slot = 0;
        for i in 0..n.len() {
            let g = &range[i];
            let gstd = fm.to_standard() * g;
            for r in 0..m[i] {
                for l in 0..g.ncols() {
                    let col = offsets[i] + r * g.ncols() + l;
                    let mut so = 0;
                    for j in 0..cd.len() {
                        for t in 0..amb_block[j] {
                            basis[(amb_off[j] + slot * amb_block[j] + t, col)] = gstd[(so + t, l)];
                        }
                        so += amb_block[j];
                    }
                }
                slot += 1;
            }
        }
        let module = HilbertModuleSpace::from_orthonormal_basis(c_alg, &rows, basis, 1e-8)?.standardize();
        Ok(TensorProduct {
            left: e.clone(),
            right: f.clone(),
            module,
            range,
            proj,
            offsets,
            corr: None,
        })
    }

    /// `E ⊙ F` of correspondences, carrying the left action of `E`.
    pub fn of_correspondences(e: &Correspondence, f: &Correspondence, tol: f64) -> Result<Self> {
        let mut tp = Self::new(e.module(), f, tol)?;
        let left = e.left.iter().map(|l| tp.lift_left(l)).collect();
        tp.corr = Some(Correspondence::new_unchecked(
            tp.module.clone(),
            e.left_algebra.clone(),
            left,
        )?);
        Ok(tp)
    }

    /// The tensor product as a right module.
    pub fn module(&self) -> &HilbertModuleSpace {
        &self.module
    }

    /// The tensor product as a correspondence, when built from one.
    pub fn correspondence(&self) -> Option<&Correspondence> {
        self.corr.as_ref()
    }

    /// Left factor.
    pub fn left_factor(&self) -> &HilbertModuleSpace {
        &self.left
    }

    /// Right factor.
    pub fn right_factor(&self) -> &Correspondence {
        &self.right
    }

    /// Complex dimension.
    pub fn dim(&self) -> usize {
        self.module.dim()
    }

    /// Basis `Gᵢ` of `range L_F(e⁽ⁱ⁾₀₀)`.
    pub fn range_basis(&self, i: usize) -> &CMat {
        &self.range[i]
    }

    /// Coordinate index of `εᵢᵣ ⊙ Gᵢ[:,l]`.
    pub fn index(&self, i: usize, r: usize, l: usize) -> usize {
        self.offsets[i] + r * self.range[i].ncols() + l
    }

    /// Coordinates of `εᵢᵣ` in `E`.
    pub fn eps(&self, i: usize, r: usize) -> CVec {
        let k = self.left.std_index(i, r, 0);
        self.left.to_standard().row(k).adjoint()
    }

    /// Coordinates of `x ⊙ y`.
    pub fn tensor(&self, x: &CVec, y: &CVec) -> CVec {
        let ys = self.left.to_standard() * x;
        let n = self.left.algebra().block_dims();
        let m = self.left.multiplicities();
        let mut out = CVec::zeros(self.dim());
        for i in 0..n.len() {
            let g = self.range[i].ncols();
            if g == 0 || m[i] == 0 {
                continue;
            }
            let my: Vec<CVec> = self.proj[i].iter().map(|p| p * y).collect();
            for r in 0..m[i] {
                let mut acc = CVec::zeros(g);
                for (c, v) in my.iter().enumerate() {
                    let z = ys[self.left.std_index(i, r, c)];
                    if z.norm() != 0.0 {
                        acc += v * z;
                    }
                }
                out.rows_mut(self.offsets[i] + r * g, g).copy_from(&acc);
            }
        }
        out
    }

    /// Class of the algebraic tensor `Σ u[a,b] e_a ⊗ f_b`.
    pub fn project(&self, u: &CMat) -> CVec {
        let y = self.left.to_standard() * u;
        let n = self.left.algebra().block_dims();
        let m = self.left.multiplicities();
        let mut out = CVec::zeros(self.dim());
        for i in 0..n.len() {
            let g = self.range[i].ncols();
            for r in 0..m[i] {
                let mut acc = CVec::zeros(g);
                for c in 0..n[i] {
                    let row = y.row(self.left.std_index(i, r, c)).transpose();
                    acc += &self.proj[i][c] * row;
                }
                out.rows_mut(self.offsets[i] + r * g, g).copy_from(&acc);
            }
        }
        out
    }

    /// Matrix of `a ⊗ b ↦ a ⊙ b` on the algebraic tensor product (index `a·dim F + b`).
    pub fn projection_matrix(&self) -> CMat {
        let de = self.left.dim();
        let df = self.right.dim();
        let mut p = CMat::zeros(self.dim(), de * df);
        for a in 0..de {
            let ea = self.left.unit_coords(a);
            for b in 0..df {
                p.set_column(a * df + b, &self.tensor(&ea, &self.right.module().unit_coords(b)));
            }
        }
        p
    }

    /// Right inverse `S` of [`TensorProduct::projection_matrix`], columns
    /// `εᵢᵣ ⊗ Gᵢ[:,l]`.
    pub fn section(&self) -> CMat {
        let de = self.left.dim();
        let df = self.right.dim();
        let mut s = CMat::zeros(de * df, self.dim());
        self.for_each_column(|col, eps, g| {
            s.set_column(col, &linalg::kron_vec(eps, &g));
        });
        s
    }

    fn for_each_column(&self, mut f: impl FnMut(usize, &CVec, CVec)) {
        let m = self.left.multiplicities();
        for (i, &mi) in m.iter().enumerate() {
            for r in 0..mi {
                let eps = self.eps(i, r);
                for l in 0..self.range[i].ncols() {
                    f(self.index(i, r, l), &eps, self.range[i].column(l).into_owned());
                }
            }
        }
    }

    /// `A ⊙ id` for a right-ℬ-linear `A` on `E`.
    pub fn lift_left(&self, a: &CMat) -> CMat {
        self.map_from(self, a)
    }

    /// `id ⊙ B` for a left-ℬ-linear `B` on `F`.
    pub fn lift_right(&self, b: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim(), self.dim());
        self.for_each_column(|col, eps, g| {
            out.set_column(col, &self.tensor(eps, &(b * g)));
        });
        out
    }

    /// `A ⊙ id : src → self` for `A` from `src`'s left factor to this one's;
    /// both products must share the right factor.
    pub fn map_from(&self, src: &TensorProduct, a: &CMat) -> CMat {
        assert_eq!(src.right.dim(), self.right.dim(), "right factors differ");
        let mut out = CMat::zeros(self.dim(), src.dim());
        src.for_each_column(|col, eps, g| {
            out.set_column(col, &self.tensor(&(a * eps), &g));
        });
        out
    }

    /// `⟨x ⊙ y, x′ ⊙ y′⟩` computed in the factors, for verification.
    pub fn factor_inner(&self, x: &CVec, y: &CVec, xp: &CVec, yp: &CVec) -> AlgebraElement {
        let b = self.left.inner_coords(x, xp);
        let ly = self.right.left_action(&b) * yp;
        self.right.module().inner_coords(y, &ly)
    }
}

/// Traced Gram form of the algebraic tensor product `E ⊗ F`:
/// block `(a, a′)` is `L_F(⟨e_a, e_a′⟩)`, index `a·dim F + b`.
pub fn scalar_gram(e: &HilbertModuleSpace, f: &Correspondence) -> CMat {
    let de = e.dim();
    let df = f.dim();
    let mut g = CMat::zeros(de * df, de * df);
    for a in 0..de {
        for ap in 0..de {
            let b = e.inner_coords(&e.unit_coords(a), &e.unit_coords(ap));
            g.view_mut((a * df, ap * df), (df, df)).copy_from(&f.left_action(&b));
        }
    }
    g
}

/// One bound of [`haagerup_norm_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct HaagerupBound {
    /// Exponent used in the factorization.
    pub alpha: f64,
    /// `‖X′‖ · ‖Y′‖`.
    pub bound: f64,
    /// Norm of the rewritten row.
    pub row_norm: f64,
    /// Norm of the rewritten column.
    pub column_norm: f64,
    /// `‖Σ x′ₛ ⊙ y′ₛ − Σ xₛ ⊙ yₛ‖`.
    pub reconstruction: f64,
}

/// Norm of `Σ xₛ ⊙ yₛ` in the tensor product.
pub fn tensor_norm(tp: &TensorProduct, xs: &[CVec], ys: &[CVec]) -> f64 {
    let mut u = CVec::zeros(tp.dim());
    for (x, y) in xs.iter().zip(ys) {
        u += tp.tensor(x, y);
    }
    tp.module().norm_coords(&u)
}

/// Factorization bounds `‖X′‖·‖Y′‖ ≥ ‖Σ xₛ ⊙ yₛ‖` with `X′ = X|X|^{−α}` and
/// `Y′ = |X|^α Y`, where `X = (x₁ … x_k)` is a row over `M_k(ℬ)`.
///
/// Singular values of `X` below `tol · σ_max` are dropped.
pub fn haagerup_norm_check(
    tp: &TensorProduct,
    xs: &[CVec],
    ys: &[CVec],
    alphas: &[f64],
    tol: f64,
) -> Result<Vec<HaagerupBound>> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::Shape("need equally many left and right factors".into()));
    }
    let e = tp.left_factor();
    let f = tp.right_factor();
    let b = e.algebra();
    let n = b.block_dims();
    let k = xs.len();
    let target: CVec = xs
        .iter()
        .zip(ys)
        .fold(CVec::zeros(tp.dim()), |acc, (x, y)| acc + tp.tensor(x, y));
    let std: Vec<Vec<CMat>> = xs.iter().map(|x| e.std_blocks(x)).collect();
    let rows: Vec<CMat> = (0..n.len())
        .map(|i| {
            let m = std[0][i].nrows();
            let mut cat = CMat::zeros(m, k * n[i]);
            for (s, blocks) in std.iter().enumerate() {
                cat.view_mut((0, s * n[i]), (m, n[i])).copy_from(&blocks[i]);
            }
            cat
        })
        .collect();
    let svds: Vec<linalg::Svd> = rows.iter().map(linalg::svd).collect();
    let smax = svds.iter().filter_map(|d| d.s.first().copied()).fold(0.0, f64::max);
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let mut w_rows = Vec::with_capacity(n.len());
        let mut p_rows = Vec::with_capacity(n.len());
        let mut row_norm: f64 = 0.0;
        for (i, d) in svds.iter().enumerate() {
            let (m, cols) = rows[i].shape();
            let mut w = CMat::zeros(m, cols);
            let mut p = CMat::zeros(cols, cols);
            for (q, &s) in d.s.iter().enumerate() {
                if s <= tol * smax || s <= f64::MIN_POSITIVE {
                    continue;
                }
                w += d.u.column(q) * d.v.column(q).adjoint() * re(s.powf(1.0 - alpha));
                p += d.v.column(q) * d.v.column(q).adjoint() * re(s.powf(alpha));
                row_norm = row_norm.max(s.powf(1.0 - alpha));
            }
            w_rows.push(w);
            p_rows.push(p);
        }
        let ws: Vec<CVec> = (0..k)
            .map(|s| {
                let blocks: Vec<CMat> = (0..n.len())
                    .map(|i| w_rows[i].columns(s * n[i], n[i]).into_owned())
                    .collect();
                e.from_std_blocks(&blocks)
            })
            .collect();
        let yps: Vec<CVec> = (0..k)
            .map(|s| {
                let mut acc = CVec::zeros(f.dim());
                for (t, y) in ys.iter().enumerate() {
                    let blocks: Vec<CMat> = (0..n.len())
                        .map(|i| p_rows[i].view((s * n[i], t * n[i]), (n[i], n[i])).into_owned())
                        .collect();
                    let bst = b.element(blocks).expect("blocks conform");
                    acc += f.left_action(&bst) * y;
                }
                acc
            })
            .collect();
        let mut col = f.module().algebra().zero_element();
        for y in &yps {
            col = &col + &f.module().inner_coords(y, y);
        }
        let column_norm = col.operator_norm().sqrt();
        let rebuilt: CVec = ws
            .iter()
            .zip(&yps)
            .fold(CVec::zeros(tp.dim()), |acc, (w, y)| acc + tp.tensor(w, y));
        out.push(HaagerupBound {
            alpha,
            bound: row_norm * column_norm,
            row_norm,
            column_norm,
            reconstruction: tp.module().norm_coords(&(rebuilt - &target)),
        });
    }
    Ok(out)
}

/// The unitary `ℬ ⊙ F → F`, `b ⊙ y ↦ b·y`; the left factor must be
/// [`HilbertModuleSpace::algebra_module`].
pub fn absorb_left_algebra(tp: &TensorProduct) -> CMat {
    let f = tp.right_factor();
    let b = tp.left_factor().algebra();
    let mut out = CMat::zeros(f.dim(), tp.dim());
    let m = tp.left_factor().multiplicities();
    for (i, &mi) in m.iter().enumerate() {
        for r in 0..mi {
            let eps = tp.eps(i, r);
            let l = f.left_action(&b.from_coords(&eps));
            for q in 0..tp.range_basis(i).ncols() {
                out.set_column(tp.index(i, r, q), &(&l * tp.range_basis(i).column(q)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use proptest::prelude::*;

    #[test]
    fn algebra_over_itself_is_valid() {
        for n in 1..4 {
            let b = MatrixAlgebra::full(n);
            let c = Correspondence::identity(&b);
            Correspondence::new(c.module().clone(), b.clone(), c.left_units().to_vec(), 1e-12).unwrap();
        }
    }

    #[test]
    fn twisted_correspondence_is_valid() {
        let mut rng = random::seeded(41);
        let b = MatrixAlgebra::new(alloc::vec![2, 1]).unwrap();
        let u = random::unitary_element(&mut rng, &b);
        let c = Correspondence::twisted(&b, &u).unwrap();
        let (mult, adj, unit, comm) = c.residuals();
        assert!(mult.max(adj).max(unit).max(comm) < 1e-12);
    }

    #[test]
    fn projection_as_unit_is_rejected() {
        let b = MatrixAlgebra::full(2);
        let c = Correspondence::identity(&b);
        let p = left_multiplication(&b, &b.matrix_unit(0, 0, 0));
        let left: Vec<CMat> = c.left_units().iter().map(|l| &p * l * &p).collect();
        let err = Correspondence::new(c.module().clone(), b, left, 1e-9).unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidCorrespondence {
                identity: "1·y = y",
                ..
            }
        ));
    }

    #[test]
    fn algebra_absorbs_on_the_left() {
        let mut rng = random::seeded(42);
        let b = MatrixAlgebra::new(alloc::vec![2, 1]).unwrap();
        let c = MatrixAlgebra::full(2);
        let tau = random::cp_map(&mut rng, &b, &c, 2);
        let f = tau.gns(1e-10).unwrap().correspondence;
        let tp = TensorProduct::of_correspondences(&Correspondence::identity(&b), &f, 1e-10).unwrap();
        assert_eq!(tp.dim(), f.dim());
        let j = absorb_left_algebra(&tp);
        assert!(linalg::isometry_defect(&j) < 1e-10);
        // b ⊙ y ↦ b·y preserves the 𝒞-valued inner product
        let bm = HilbertModuleSpace::algebra_module(&b);
        for _ in 0..5 {
            let x = random::coords(&mut rng, bm.dim());
            let y = random::coords(&mut rng, f.dim());
            let u = tp.tensor(&x, &y);
            let bx = b.from_coords(&x);
            let image = f.left_action(&bx) * &y;
            assert!((&j * &u - &image).norm() < 1e-10);
        }
    }

    #[test]
    fn module_tensor_algebra_is_module() {
        let mut rng = random::seeded(43);
        let b = MatrixAlgebra::new(alloc::vec![1, 2]).unwrap();
        let e = random::module(&mut rng, &b, 2, false);
        let tp = TensorProduct::new(&e, &Correspondence::identity(&b), 1e-10).unwrap();
        assert_eq!(tp.dim(), e.dim());
        for _ in 0..5 {
            let x = random::coords(&mut rng, e.dim());
            let xp = random::coords(&mut rng, e.dim());
            let one = HilbertModuleSpace::algebra_module(&b).from_std_blocks(b.identity().blocks());
            let u = tp.tensor(&x, &one);
            let up = tp.tensor(&xp, &one);
            let lhs = tp.module().inner_coords(&u, &up);
            assert!(lhs.distance(&e.inner_coords(&x, &xp)) < 1e-10);
        }
    }

    #[test]
    fn rectangular_matrices_compose() {
        for (k, n, m) in [(2, 3, 1), (1, 2, 2), (3, 2, 2)] {
            let bk = MatrixAlgebra::full(k);
            let bn = MatrixAlgebra::full(n);
            let bm = MatrixAlgebra::full(m);
            let e = HilbertModuleSpace::full(&bn, &[k]).unwrap();
            let f_mod = HilbertModuleSpace::full(&bm, &[n]).unwrap();
            let f = Correspondence::new(
                f_mod.clone(),
                bn.clone(),
                f_mod.adjointable_operators().representation(),
                1e-10,
            )
            .unwrap();
            let e_corr = Correspondence::from_operators(&e);
            assert_eq!(e_corr.left_algebra(), &bk);
            let tp = TensorProduct::of_correspondences(&e_corr, &f, 1e-10).unwrap();
            assert_eq!(tp.dim(), k * m);
            let g = scalar_gram(&e, &f);
            assert_eq!(linalg::rank(&g, 1e-10), k * m);
        }
    }

    #[test]
    fn scalar_gram_factors_through_the_quotient() {
        let mut rng = random::seeded(44);
        for _ in 0..10 {
            let b = random::algebra(&mut rng, 2, 2);
            let c = random::algebra(&mut rng, 2, 2);
            let e = random::module(&mut rng, &b, 2, false);
            let tau = random::cp_map(&mut rng, &b, &c, 2);
            let f = tau.gns(1e-10).unwrap().correspondence;
            let tp = TensorProduct::new(&e, &f, 1e-10).unwrap();
            let p = tp.projection_matrix();
            let g = scalar_gram(&e, &f);
            assert!(linalg::max_abs(&(p.adjoint() * &p - &g)) < 1e-10);
            assert_eq!(linalg::rank(&g, 1e-9), tp.dim());
            let s = tp.section();
            assert!(linalg::max_abs(&(&p * &s - CMat::identity(tp.dim(), tp.dim()))) < 1e-10);
            // retained spectrum of the quotient Gram is bounded away from zero
            let (vals, _) = linalg::eigh(&g);
            let top = vals.last().copied().unwrap_or(0.0);
            let kept: Vec<f64> = vals.into_iter().filter(|&l| l > 1e-9 * top).collect();
            assert_eq!(kept.len(), tp.dim());
        }
    }

    #[test]
    fn tensor_inner_product_matches_factors() {
        let mut rng = random::seeded(45);
        let b = MatrixAlgebra::new(alloc::vec![2, 1]).unwrap();
        let c = MatrixAlgebra::full(2);
        let e = random::module(&mut rng, &b, 2, true);
        let f = random::cp_map(&mut rng, &b, &c, 2).gns(1e-10).unwrap().correspondence;
        let tp = TensorProduct::new(&e, &f, 1e-10).unwrap();
        for _ in 0..10 {
            let x = random::coords(&mut rng, e.dim());
            let y = random::coords(&mut rng, f.dim());
            let xp = random::coords(&mut rng, e.dim());
            let yp = random::coords(&mut rng, f.dim());
            let lhs = tp.module().inner_coords(&tp.tensor(&x, &y), &tp.tensor(&xp, &yp));
            let rhs = tp.factor_inner(&x, &y, &xp, &yp);
            assert!(lhs.distance(&rhs) < 1e-10 * (1.0 + rhs.operator_norm()));
        }
    }

    #[test]
    fn lifts_agree_with_elementary_tensors() {
        let mut rng = random::seeded(46);
        let b = MatrixAlgebra::full(2);
        let e = random::module(&mut rng, &b, 3, true);
        let tau = random::cp_map(&mut rng, &b, &MatrixAlgebra::full(1), 2);
        let f = tau.gns(1e-10).unwrap().correspondence;
        let tp = TensorProduct::of_correspondences(&Correspondence::from_operators(&e), &f, 1e-10).unwrap();
        let ops = e.adjointable_operators();
        let a = ops.to_operator(&random::element(&mut rng, ops.algebra()));
        let x = random::coords(&mut rng, e.dim());
        let y = random::coords(&mut rng, f.dim());
        let lifted = tp.lift_left(&a) * tp.tensor(&x, &y);
        assert!((lifted - tp.tensor(&(&a * &x), &y)).norm() < 1e-10);
        let cc = random::element(&mut rng, f.right_algebra());
        let right = tp.lift_right(&f.module().right_action(&cc)) * tp.tensor(&x, &y);
        let direct = tp.module().right_action(&cc) * tp.tensor(&x, &y);
        assert!((right - direct).norm() < 1e-10);
        let corr = tp.correspondence().unwrap();
        let (mult, adj, unit, comm) = corr.residuals();
        assert!(mult.max(adj).max(unit).max(comm) < 1e-10);
    }

    #[test]
    fn middle_algebra_mismatch_is_rejected() {
        let e = HilbertModuleSpace::algebra_module(&MatrixAlgebra::full(2));
        let f = Correspondence::identity(&MatrixAlgebra::full(3));
        assert!(matches!(TensorProduct::new(&e, &f, 1e-9), Err(Error::Shape(_))));
    }

    #[test]
    fn haagerup_unit_vectors() {
        let b = MatrixAlgebra::full(2);
        let e = HilbertModuleSpace::algebra_module(&b);
        let f = Correspondence::identity(&b);
        let tp = TensorProduct::new(&e, &f, 1e-10).unwrap();
        let xi = e.find_unit_vector(0, 1e-9).unwrap();
        let zeta = f.module().find_unit_vector(1, 1e-9).unwrap();
        assert!((tensor_norm(&tp, core::slice::from_ref(&xi), core::slice::from_ref(&zeta)) - 1.0).abs() < 1e-12);
        for h in haagerup_norm_check(&tp, &[xi], &[zeta], &[0.5, 0.9, 0.999], 1e-12).unwrap() {
            assert!((h.bound - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn haagerup_sweep_is_monotone_and_converges() {
        let mut rng = random::seeded(47);
        let b = MatrixAlgebra::new(alloc::vec![2, 1]).unwrap();
        let c = MatrixAlgebra::full(2);
        for _ in 0..10 {
            let e = random::module(&mut rng, &b, 2, true);
            let f = random::cp_map(&mut rng, &b, &c, 2).gns(1e-10).unwrap().correspondence;
            let tp = TensorProduct::new(&e, &f, 1e-10).unwrap();
            let x = random::coords(&mut rng, e.dim());
            let x = &x / C64::from(e.norm_coords(&x));
            let y = random::coords(&mut rng, f.dim());
            let y = &y / C64::from(f.module().norm_coords(&y));
            let norm = tensor_norm(&tp, core::slice::from_ref(&x), core::slice::from_ref(&y));
            let alphas = [0.5, 0.7, 0.9, 0.99, 0.999];
            let hs = haagerup_norm_check(&tp, &[x], &[y], &alphas, 1e-13).unwrap();
            for w in hs.windows(2) {
                assert!(w[1].bound <= w[0].bound + 1e-12);
            }
            for h in &hs {
                assert!(h.bound >= norm - 1e-12);
                assert!(h.reconstruction < 1e-9);
            }
            assert!(hs[4].bound - norm <= 1e-3);
        }
    }

    #[test]
    fn haagerup_sums_bound_the_norm() {
        let mut rng = random::seeded(48);
        let b = MatrixAlgebra::full(2);
        let e = random::module(&mut rng, &b, 2, true);
        let f = random::cp_map(&mut rng, &b, &b, 2).gns(1e-10).unwrap().correspondence;
        let tp = TensorProduct::new(&e, &f, 1e-10).unwrap();
        let xs: Vec<CVec> = (0..3).map(|_| random::coords(&mut rng, e.dim())).collect();
        let ys: Vec<CVec> = (0..3).map(|_| random::coords(&mut rng, f.dim())).collect();
        let norm = tensor_norm(&tp, &xs, &ys);
        for h in haagerup_norm_check(&tp, &xs, &ys, &[0.5, 0.9], 1e-13).unwrap() {
            assert!(h.bound >= norm - 1e-10);
            assert!(h.reconstruction < 1e-9 * (1.0 + norm));
        }
    }

    use crate::linalg::C64;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn tensor_is_associative(seed in 0u64..1000) {
            let mut rng = random::seeded(seed);
            let b = MatrixAlgebra::full(random::range(&mut rng, 1, 2));
            let c = random::algebra(&mut rng, 2, 2);
            let d = MatrixAlgebra::full(random::range(&mut rng, 1, 2));
            let e = random::module(&mut rng, &b, 2, true);
            let f = random::cp_map(&mut rng, &b, &c, 2).gns(1e-10).unwrap().correspondence;
            let g = random::cp_map(&mut rng, &c, &d, 1).gns(1e-10).unwrap().correspondence;
            let ef = TensorProduct::new(&e, &f, 1e-10).unwrap();
            let ef_g = TensorProduct::new(ef.module(), &g, 1e-10).unwrap();
            let fg = TensorProduct::of_correspondences(&f, &g, 1e-10).unwrap();
            let e_fg = TensorProduct::new(&e, fg.correspondence().unwrap(), 1e-10).unwrap();
            prop_assert_eq!(ef_g.dim(), e_fg.dim());
            // (x⊙y)⊙z ↦ x⊙(y⊙z) preserves D-valued inner products
            for _ in 0..3 {
                let x = random::coords(&mut rng, e.dim());
                let y = random::coords(&mut rng, f.dim());
                let z = random::coords(&mut rng, g.dim());
                let xp = random::coords(&mut rng, e.dim());
                let yp = random::coords(&mut rng, f.dim());
                let zp = random::coords(&mut rng, g.dim());
                let l = ef_g.tensor(&ef.tensor(&x, &y), &z);
                let lp = ef_g.tensor(&ef.tensor(&xp, &yp), &zp);
                let r = e_fg.tensor(&x, &fg.tensor(&y, &z));
                let rp = e_fg.tensor(&xp, &fg.tensor(&yp, &zp));
                let a = ef_g.module().inner_coords(&l, &lp);
                let bb = e_fg.module().inner_coords(&r, &rp);
                prop_assert!(a.distance(&bb) <= 1e-9 * (1.0 + a.operator_norm()));
            }
        }

        #[test]
        fn left_and_right_actions_commute(seed in 0u64..1000) {
            let mut rng = random::seeded(seed);
            let b = random::algebra(&mut rng, 2, 2);
            let c = random::algebra(&mut rng, 2, 2);
            let e = random::module(&mut rng, &b, 2, true);
            let f = random::cp_map(&mut rng, &b, &c, 2).gns(1e-10).unwrap().correspondence;
            let tp = TensorProduct::of_correspondences(&Correspondence::from_operators(&e), &f, 1e-10).unwrap();
            let corr = tp.correspondence().unwrap();
            let a = corr.left_action(&random::element(&mut rng, corr.left_algebra()));
            let r = tp.module().right_action(&random::element(&mut rng, &c));
            prop_assert!(linalg::max_abs(&(&a * &r - &r * &a)) <= 1e-10 * (1.0 + linalg::op_norm(&a) * linalg::op_norm(&r)));
        }
    }
}

//! Linear maps between block algebras, with Choi and Kraus data and the GNS
//! correspondence of a completely positive map.
//!
//! Choi convention: for domain block `i` and codomain block `j`,
//! `C[(p,r),(q,s)] = τ(e⁽ⁱ⁾_{pq})ⱼ[r,s]`, unnormalized, double index
//! `p·cⱼ + r`. Kraus convention: `τ(b)ⱼ = Σ K* bᵢ K` with `K` of shape
//! `nᵢ × cⱼ`.

// f64 math in no_std
use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use nalgebra::ComplexField as _;

use crate::algebra::{AlgebraElement, MatrixAlgebra};
use crate::correspondence::Correspondence;
use crate::error::{Error, Result};
use crate::linalg::{self, re, CMat, CVec, ZERO};
use crate::module::{HilbertModuleSpace, ModuleElement};
use crate::report::Check;

/// A linear map between block algebras, stored on matrix-unit bases.
#[derive(Debug, Clone, PartialEq)]
pub struct CpMap {
    domain: MatrixAlgebra,
    codomain: MatrixAlgebra,
    action: CMat,
}

/// Kraus operators of one block pair.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausBlock {
    /// Domain block `i`.
    pub domain_block: usize,
    /// Codomain block `j`.
    pub codomain_block: usize,
    /// Operators of shape `nᵢ × cⱼ`.
    pub operators: Vec<CMat>,
}

/// Choi matrix of one block pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiBlock {
    /// Domain block `i`.
    pub domain_block: usize,
    /// Codomain block `j`.
    pub codomain_block: usize,
    /// The `nᵢcⱼ × nᵢcⱼ` matrix.
    pub matrix: CMat,
}

/// Outcome of the Choi positivity test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpCertificate {
    /// Whether every Choi block is positive semidefinite to tolerance.
    pub completely_positive: bool,
    /// Most negative eigenvalue over all blocks (or `−‖C − C*‖` if larger in modulus).
    pub min_eigenvalue: f64,
    /// Largest eigenvalue modulus over all blocks.
    pub max_eigenvalue: f64,
    /// Domain block of the witness.
    pub domain_block: usize,
    /// Codomain block of the witness.
    pub codomain_block: usize,
}

/// GNS data `(𝔉, ζ)` of a CP map.
#[derive(Debug, Clone)]
pub struct Gns {
    /// The ℬ-𝒞 correspondence `𝔉`.
    pub correspondence: Correspondence,
    /// Cyclic vector `ζ`.
    pub zeta: CVec,
    /// Cyclic identity and cyclicity residuals.
    pub checks: Vec<Check>,
}

impl CpMap {
    /// Map from its action matrix (`dim 𝒞 × dim ℬ`, column `k` = image of unit `k`).
    pub fn new(domain: &MatrixAlgebra, codomain: &MatrixAlgebra, action: CMat) -> Result<Self> {
        if action.shape() != (codomain.dim(), domain.dim()) {
            return Err(Error::Shape(format!(
                "action is {}x{}, expected {}x{}",
                action.nrows(),
                action.ncols(),
                codomain.dim(),
                domain.dim()
            )));
        }
        Ok(CpMap {
            domain: domain.clone(),
            codomain: codomain.clone(),
            action,
        })
    }

    /// Map determined by its values on matrix units.
    pub fn from_fn(
        domain: &MatrixAlgebra,
        codomain: &MatrixAlgebra,
        f: impl Fn(&AlgebraElement) -> AlgebraElement,
    ) -> Self {
        let mut action = CMat::zeros(codomain.dim(), domain.dim());
        for k in 0..domain.dim() {
            let v = f(&domain.basis_element(k));
            assert_eq!(v.algebra(), codomain, "image lies in the wrong algebra");
            action.set_column(k, &v.coords());
        }
        CpMap {
            domain: domain.clone(),
            codomain: codomain.clone(),
            action,
        }
    }

    /// Identity map.
    pub fn identity(alg: &MatrixAlgebra) -> Self {
        let d = alg.dim();
        CpMap {
            domain: alg.clone(),
            codomain: alg.clone(),
            action: CMat::identity(d, d),
        }
    }

    /// Zero map.
    pub fn zero(domain: &MatrixAlgebra, codomain: &MatrixAlgebra) -> Self {
        CpMap {
            domain: domain.clone(),
            codomain: codomain.clone(),
            action: CMat::zeros(codomain.dim(), domain.dim()),
        }
    }

    /// Trace `M_n → ℂ`.
    pub fn trace(n: usize) -> Self {
        let dom = MatrixAlgebra::full(n);
        Self::from_fn(&dom, &MatrixAlgebra::full(1), |b| {
            MatrixAlgebra::full(1)
                .element(alloc::vec![CMat::from_element(1, 1, b.trace())])
                .expect("1x1")
        })
    }

    /// `b ↦ tr(b)/n · 1` on `M_n`.
    pub fn normalized_trace_state(n: usize) -> Self {
        let alg = MatrixAlgebra::full(n);
        Self::from_fn(&alg, &alg, |b| alg.identity().scale(b.trace() / re(n as f64)))
    }

    /// Transpose on `M_n` (positive, not completely positive for `n ≥ 2`).
    pub fn transpose(n: usize) -> Self {
        let alg = MatrixAlgebra::full(n);
        Self::from_fn(&alg, &alg, |b| {
            alg.element(alloc::vec![b.block(0).transpose()]).expect("square")
        })
    }

    /// `b ↦ u* b u` for `u` in the same algebra.
    pub fn conjugation(u: &AlgebraElement) -> Self {
        let alg = u.algebra().clone();
        Self::from_fn(&alg, &alg, |b| &(&u.adjoint() * b) * u)
    }

    /// `b ↦ Σ K* b K` per block pair.
    pub fn from_kraus(domain: &MatrixAlgebra, codomain: &MatrixAlgebra, blocks: &[KrausBlock]) -> Result<Self> {
        let n = domain.block_dims();
        let c = codomain.block_dims();
        let mut action = CMat::zeros(codomain.dim(), domain.dim());
        for kb in blocks {
            let (i, j) = (kb.domain_block, kb.codomain_block);
            if i >= n.len() || j >= c.len() {
                return Err(Error::Shape(format!("block pair ({i},{j}) out of range")));
            }
            for k in &kb.operators {
                if k.shape() != (n[i], c[j]) {
                    return Err(Error::Shape(format!(
                        "Kraus operator for ({i},{j}) must be {}x{}",
                        n[i], c[j]
                    )));
                }
                for p in 0..n[i] {
                    for q in 0..n[i] {
                        let col = domain.index(i, p, q);
                        for r in 0..c[j] {
                            for s in 0..c[j] {
                                action[(codomain.index(j, r, s), col)] += k[(p, r)].conj() * k[(q, s)];
                            }
                        }
                    }
                }
            }
        }
        Ok(CpMap {
            domain: domain.clone(),
            codomain: codomain.clone(),
            action,
        })
    }

    /// Map from Choi blocks; missing pairs are zero.
    pub fn from_choi(domain: &MatrixAlgebra, codomain: &MatrixAlgebra, blocks: &[ChoiBlock]) -> Result<Self> {
        let n = domain.block_dims();
        let c = codomain.block_dims();
        let mut action = CMat::zeros(codomain.dim(), domain.dim());
        for cb in blocks {
            let (i, j) = (cb.domain_block, cb.codomain_block);
            if i >= n.len() || j >= c.len() || cb.matrix.shape() != (n[i] * c[j], n[i] * c[j]) {
                return Err(Error::Shape(format!("Choi block ({i},{j}) has the wrong shape")));
            }
            for p in 0..n[i] {
                for q in 0..n[i] {
                    for r in 0..c[j] {
                        for s in 0..c[j] {
                            action[(codomain.index(j, r, s), domain.index(i, p, q))] =
                                cb.matrix[(p * c[j] + r, q * c[j] + s)];
                        }
                    }
                }
            }
        }
        Ok(CpMap {
            domain: domain.clone(),
            codomain: codomain.clone(),
            action,
        })
    }

    /// Domain algebra.
    pub fn domain(&self) -> &MatrixAlgebra {
        &self.domain
    }

    /// Codomain algebra.
    pub fn codomain(&self) -> &MatrixAlgebra {
        &self.codomain
    }

    /// Action matrix.
    pub fn action(&self) -> &CMat {
        &self.action
    }

    /// `τ(b)`.
    pub fn apply(&self, b: &AlgebraElement) -> AlgebraElement {
        assert_eq!(b.algebra(), &self.domain, "argument lies in the wrong algebra");
        self.codomain.from_coords(&(&self.action * b.coords()))
    }

    /// Choi matrix of block pair `(i, j)`.
    pub fn choi_block(&self, i: usize, j: usize) -> CMat {
        let n = self.domain.block_dims()[i];
        let c = self.codomain.block_dims()[j];
        CMat::from_fn(n * c, n * c, |row, col| {
            let (p, r) = (row / c, row % c);
            let (q, s) = (col / c, col % c);
            self.action[(self.codomain.index(j, r, s), self.domain.index(i, p, q))]
        })
    }

    /// All Choi blocks, domain-major.
    pub fn choi(&self) -> Vec<ChoiBlock> {
        let mut out = Vec::new();
        for i in 0..self.domain.num_blocks() {
            for j in 0..self.codomain.num_blocks() {
                out.push(ChoiBlock {
                    domain_block: i,
                    codomain_block: j,
                    matrix: self.choi_block(i, j),
                });
            }
        }
        out
    }

    /// Choi positivity test: every block Hermitian to `tol·(1 + λ_max)` and
    /// with eigenvalues `≥ −tol·λ_max`.
    pub fn certificate(&self, tol: f64) -> CpCertificate {
        let mut min = f64::INFINITY;
        let mut max: f64 = 0.0;
        let mut herm: f64 = 0.0;
        let mut at = (0, 0);
        for cb in self.choi() {
            let h = linalg::max_abs(&(&cb.matrix - cb.matrix.adjoint()));
            herm = herm.max(h);
            let (vals, _) = linalg::eigh(&cb.matrix);
            for &l in &vals {
                max = max.max(l.abs());
            }
            if let Some(&l) = vals.first() {
                if l < min {
                    min = l;
                    at = (cb.domain_block, cb.codomain_block);
                }
            }
        }
        if !min.is_finite() {
            min = 0.0;
        }
        let hermitian = herm <= tol * (1.0 + max);
        let reported = if hermitian { min } else { min.min(-herm) };
        CpCertificate {
            completely_positive: hermitian && min >= -tol * max,
            min_eigenvalue: reported,
            max_eigenvalue: max,
            domain_block: at.0,
            codomain_block: at.1,
        }
    }

    /// True iff the Choi test passes.
    pub fn is_completely_positive(&self, tol: f64) -> bool {
        self.certificate(tol).completely_positive
    }

    fn require_cp(&self, tol: f64) -> Result<CpCertificate> {
        let cert = self.certificate(tol);
        if !cert.completely_positive {
            return Err(Error::NotCompletelyPositive {
                min_eigenvalue: cert.min_eigenvalue,
                domain_block: cert.domain_block,
                codomain_block: cert.codomain_block,
            });
        }
        Ok(cert)
    }

    /// Kraus operators; eigenvalues `≤ tol·λ_max` are dropped.
    pub fn kraus(&self, tol: f64) -> Result<Vec<KrausBlock>> {
        let cert = self.require_cp(tol)?;
        let cut = tol * cert.max_eigenvalue;
        let c = self.codomain.block_dims();
        let n = self.domain.block_dims();
        let mut out = Vec::new();
        for cb in self.choi() {
            let (i, j) = (cb.domain_block, cb.codomain_block);
            let (vals, vecs) = linalg::eigh(&cb.matrix);
            let mut ops = Vec::new();
            for (k, &l) in vals.iter().enumerate().rev() {
                if l <= cut || l <= 0.0 {
                    continue;
                }
                let s = l.sqrt();
                ops.push(CMat::from_fn(n[i], c[j], |p, r| {
                    (vecs[(p * c[j] + r, k)] * re(s)).conj()
                }));
            }
            out.push(KrausBlock {
                domain_block: i,
                codomain_block: j,
                operators: ops,
            });
        }
        Ok(out)
    }

    /// Total number of Kraus operators at `tol`.
    pub fn kraus_rank(&self, tol: f64) -> Result<usize> {
        Ok(self.kraus(tol)?.iter().map(|k| k.operators.len()).sum())
    }

    /// `‖τ‖ = ‖τ(1)‖` for CP maps.
    pub fn cp_norm(&self, tol: f64) -> Result<f64> {
        self.require_cp(tol)?;
        Ok(self.apply(&self.domain.identity()).operator_norm())
    }

    /// `τ_k : M_k(ℬ) → M_k(𝒞)`, applied entry-wise.
    pub fn amplify(&self, k: usize) -> Self {
        let dom = self.domain.amplify(k);
        let cod = self.codomain.amplify(k);
        let n = self.domain.block_dims().to_vec();
        let c = self.codomain.block_dims().to_vec();
        Self::from_fn(&dom, &cod, |x| {
            let mut out: Vec<CMat> = c.iter().map(|&cj| CMat::zeros(k * cj, k * cj)).collect();
            for s in 0..k {
                for t in 0..k {
                    let blocks = (0..n.len())
                        .map(|i| x.block(i).view((s * n[i], t * n[i]), (n[i], n[i])).into_owned())
                        .collect();
                    let y = self.apply(&self.domain.element(blocks).expect("entry blocks"));
                    for (j, o) in out.iter_mut().enumerate() {
                        o.view_mut((s * c[j], t * c[j]), (c[j], c[j])).copy_from(y.block(j));
                    }
                }
            }
            cod.element(out).expect("amplified blocks")
        })
    }

    /// `self ∘ first`.
    pub fn compose(&self, first: &CpMap) -> Result<Self> {
        if first.codomain != self.domain {
            return Err(Error::Shape("composition of maps with mismatched algebras".into()));
        }
        Ok(CpMap {
            domain: first.domain.clone(),
            codomain: self.codomain.clone(),
            action: &self.action * &first.action,
        })
    }

    /// `τᵗ` for an endomorphic map (`τ⁰ = id`).
    pub fn power(&self, t: usize) -> Result<Self> {
        if self.domain != self.codomain {
            return Err(Error::Shape("powers need domain = codomain".into()));
        }
        let mut out = Self::identity(&self.domain);
        for _ in 0..t {
            out = self.compose(&out)?;
        }
        Ok(out)
    }

    /// Largest entry modulus of the difference of action matrices.
    pub fn distance(&self, other: &CpMap) -> f64 {
        if self.action.shape() != other.action.shape() {
            return f64::INFINITY;
        }
        linalg::max_abs(&(&self.action - &other.action))
    }

    /// `(multiplicativity, adjoint, unitality)` residuals over matrix units.
    pub fn homomorphism_residuals(&self) -> (f64, f64, f64) {
        let d = self.domain.dim();
        let images: Vec<AlgebraElement> = (0..d).map(|k| self.apply(&self.domain.basis_element(k))).collect();
        let mut mult: f64 = 0.0;
        let mut adj: f64 = 0.0;
        for a in 0..d {
            let (i, p, q) = self.domain.unit_of(a);
            let star = self.domain.index(i, q, p);
            adj = adj.max(images[a].adjoint().distance(&images[star]));
            for b in 0..d {
                let (i2, p2, q2) = self.domain.unit_of(b);
                let prod = &images[a] * &images[b];
                let expected = if i == i2 && q == p2 {
                    images[self.domain.index(i, p, q2)].clone()
                } else {
                    self.codomain.zero_element()
                };
                mult = mult.max(prod.distance(&expected));
            }
        }
        let unit = self.apply(&self.domain.identity()).distance(&self.codomain.identity());
        (mult, adj, unit)
    }

    /// The unitalized map `τ̃ : ℬ̃ → 𝒞̃` with `τ̃(1̃) = ‖τ‖1̃`, realized on
    /// `ℬ ⊕ ℂ → 𝒞 ⊕ ℂ` as `(c, λ) ↦ (τ(c − λ1) + λ‖τ‖1, λ‖τ‖)`.
    pub fn unitalize(&self, tol: f64) -> Result<Self> {
        let norm = self.cp_norm(tol)?;
        let ub = self.domain.unitalize();
        let uc = self.codomain.unitalize();
        Ok(Self::from_fn(ub.algebra(), uc.algebra(), |x| {
            let (b, lambda) = ub.decompose(x);
            let img = uc.embed(&self.apply(&b));
            &img + &uc.unit().scale(lambda * re(norm))
        }))
    }

    /// GNS correspondence `𝔉` and cyclic vector `ζ` with `⟨ζ, bζ⟩ = τ(b)`.
    ///
    /// `𝔉` is the closed span of `(b ⊗ 1)ζc` inside the ambient
    /// `⊕ⱼ M_{Rⱼ,cⱼ}`, `Rⱼ = Σᵢ nᵢ rᵢⱼ` (rows ordered `(i, p, k)`), where
    /// `ζⱼ` stacks the rows of the Kraus operators.
    pub fn gns(&self, tol: f64) -> Result<Gns> {
        let kraus = self.kraus(tol)?;
        let n = self.domain.block_dims().to_vec();
        let c = self.codomain.block_dims();
        let nb = n.len();
        let nc = c.len();
        // rank[i][j] and per-codomain row offsets of domain block i
        let mut rank = alloc::vec![alloc::vec![0usize; nc]; nb];
        for kb in &kraus {
            rank[kb.domain_block][kb.codomain_block] = kb.operators.len();
        }
        let mut row_off = alloc::vec![alloc::vec![0usize; nc]; nb];
        let mut rows = alloc::vec![0usize; nc];
        for j in 0..nc {
            for i in 0..nb {
                row_off[i][j] = rows[j];
                rows[j] += n[i] * rank[i][j];
            }
        }
        let mut zeta: Vec<CMat> = (0..nc).map(|j| CMat::zeros(rows[j], c[j])).collect();
        for kb in &kraus {
            let (i, j) = (kb.domain_block, kb.codomain_block);
            let r = kb.operators.len();
            for (k, op) in kb.operators.iter().enumerate() {
                for p in 0..n[i] {
                    for s in 0..c[j] {
                        zeta[j][(row_off[i][j] + p * r + k, s)] = op[(p, s)];
                    }
                }
            }
        }
        let left_ambient = |u: usize, x: &[CMat]| -> Vec<CMat> {
            let (i, a, b) = self.domain.unit_of(u);
            (0..nc)
                .map(|j| {
                    let mut out = CMat::zeros(rows[j], c[j]);
                    let r = rank[i][j];
                    for k in 0..r {
                        let src = row_off[i][j] + b * r + k;
                        let dst = row_off[i][j] + a * r + k;
                        out.row_mut(dst).copy_from(&x[j].row(src));
                    }
                    out
                })
                .collect()
        };
        let gens: Vec<ModuleElement> = (0..self.domain.dim())
            .map(|u| ModuleElement::new(left_ambient(u, &zeta)))
            .collect();
        let module = HilbertModuleSpace::make_module(&self.codomain, &rows, &gens, tol)?;
        let left: Vec<CMat> = (0..self.domain.dim())
            .map(|u| {
                let d = module.dim();
                let mut m = CMat::zeros(d, d);
                for k in 0..d {
                    let el = module.element(&module.unit_coords(k));
                    let img = ModuleElement::new(left_ambient(u, el.blocks()));
                    let v = module.ambient_vector(&img).expect("ambient shape");
                    m.set_column(k, &(module.basis().adjoint() * v));
                }
                m
            })
            .collect();
        let zeta_el = ModuleElement::new(zeta);
        let zeta_coords = module.coords(&zeta_el, 1e-8)?;
        let correspondence = Correspondence::new(module, self.domain.clone(), left, tol.max(1e-10))?;

        let mut cyc: f64 = 0.0;
        let scale = 1.0 + self.apply(&self.domain.identity()).operator_norm();
        let m = correspondence.module();
        let mut span = Vec::new();
        for u in 0..self.domain.dim() {
            let bz = &correspondence.left_units()[u] * &zeta_coords;
            let lhs = m.inner_coords(&zeta_coords, &bz);
            cyc = cyc.max(lhs.distance(&self.apply(&self.domain.basis_element(u))));
            for r in m.right_unit_actions() {
                span.push(r * &bz);
            }
        }
        let dim = m.dim();
        let span_dim = if dim == 0 {
            0
        } else {
            linalg::rank(&CMat::from_columns(&span), tol)
        };
        let checks = alloc::vec![
            Check::new("gns_cyclic_identity", cyc, 1e-10 * scale),
            Check::new("gns_cyclicity", (dim as f64 - span_dim as f64).abs(), 0.0)
                .with_witness(format!("span {span_dim}, module {dim}")),
        ];
        Ok(Gns {
            correspondence,
            zeta: zeta_coords,
            checks,
        })
    }
}

/// `x ↦ x*` applied block-wise; used to test `τ(b*) = τ(b)*`.
pub fn adjoint_defect(m: &CpMap, b: &AlgebraElement) -> f64 {
    m.apply(&b.adjoint()).distance(&m.apply(b).adjoint())
}

/// Element `z·1` of a block algebra.
pub fn scalar(alg: &MatrixAlgebra, z: f64) -> AlgebraElement {
    alg.identity().scale(if z == 0.0 { ZERO } else { re(z) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn choi_of_identity_is_rank_one() {
        let c = CpMap::identity(&MatrixAlgebra::full(2)).choi_block(0, 0);
        let (vals, _) = linalg::eigh(&c);
        let expected = [0.0, 0.0, 0.0, 2.0];
        for (a, b) in vals.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn choi_of_zero_map_is_zero() {
        let b = MatrixAlgebra::new(vec![2, 1]).unwrap();
        for cb in CpMap::zero(&b, &b).choi() {
            assert!(linalg::max_abs(&cb.matrix) == 0.0);
        }
        assert!(CpMap::zero(&b, &b).is_completely_positive(1e-12));
    }

    #[test]
    fn transpose_choi_is_swap() {
        let t = CpMap::transpose(2);
        let (vals, _) = linalg::eigh(&t.choi_block(0, 0));
        let expected = [-1.0, 1.0, 1.0, 1.0];
        for (a, b) in vals.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let cert = t.certificate(1e-9);
        assert!(!cert.completely_positive);
        assert!((cert.min_eigenvalue + 1.0).abs() < 1e-12);
        assert!(matches!(t.kraus(1e-9), Err(Error::NotCompletelyPositive { .. })));
        assert!(t.cp_norm(1e-9).is_err());
    }

    #[test]
    fn kraus_examples() {
        for n in 1..4 {
            let id = CpMap::identity(&MatrixAlgebra::full(n));
            let k = id.kraus(1e-10).unwrap();
            assert_eq!(k[0].operators.len(), 1);
            // single Kraus operator is a unimodular multiple of 1
            let op = &k[0].operators[0];
            let phase = op[(0, 0)];
            assert!((phase.norm() - 1.0).abs() < 1e-12);
            assert!(linalg::max_abs(&(op - CMat::identity(n, n) * phase)) < 1e-12);
            let tr = CpMap::trace(n);
            assert_eq!(tr.kraus_rank(1e-10).unwrap(), n);
        }
    }

    #[test]
    fn kraus_reconstructs_random_maps() {
        let mut rng = random::seeded(51);
        for _ in 0..20 {
            let b = random::algebra(&mut rng, 2, 3);
            let c = random::algebra(&mut rng, 2, 3);
            let m = random::cp_map(&mut rng, &b, &c, 3);
            assert!(m.is_completely_positive(1e-10));
            let k = m.kraus(1e-12).unwrap();
            let back = CpMap::from_kraus(&b, &c, &k).unwrap();
            assert!(back.distance(&m) < 1e-10);
        }
    }

    #[test]
    fn norms() {
        assert!((CpMap::trace(3).cp_norm(1e-9).unwrap() - 3.0).abs() < 1e-12);
        assert!((CpMap::identity(&MatrixAlgebra::full(3)).cp_norm(1e-9).unwrap() - 1.0).abs() < 1e-12);
        let mut rng = random::seeded(52);
        let b = MatrixAlgebra::full(2);
        let c = MatrixAlgebra::new(vec![1, 2]).unwrap();
        let ops = vec![random::gaussian(&mut rng, 2, 2), random::gaussian(&mut rng, 2, 2)];
        let kb = KrausBlock {
            domain_block: 0,
            codomain_block: 1,
            operators: ops.clone(),
        };
        let m = CpMap::from_kraus(&b, &c, &[kb]).unwrap();
        let s: CMat = ops
            .iter()
            .map(|k| k.adjoint() * k)
            .fold(CMat::zeros(2, 2), |a, x| a + x);
        assert!((m.cp_norm(1e-9).unwrap() - linalg::op_norm(&s)).abs() < 1e-12);
    }

    #[test]
    fn amplification() {
        let mut rng = random::seeded(53);
        let b = MatrixAlgebra::new(vec![2, 1]).unwrap();
        let id = CpMap::identity(&b);
        assert!(id.amplify(3).distance(&CpMap::identity(&b.amplify(3))) < 1e-15);
        let m = random::cp_map(&mut rng, &b, &MatrixAlgebra::full(2), 2);
        let m2 = m.amplify(2);
        assert!(m2.is_completely_positive(1e-10));
        assert!((m2.cp_norm(1e-9).unwrap() - m.cp_norm(1e-9).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn composition() {
        let mut rng = random::seeded(54);
        let b = MatrixAlgebra::full(2);
        let m = random::cp_map(&mut rng, &b, &b, 2);
        assert!(CpMap::identity(&b).compose(&m).unwrap().distance(&m) < 1e-15);
        let mm = m.compose(&m).unwrap();
        assert!(mm.is_completely_positive(1e-10));
        let n = m.cp_norm(1e-9).unwrap();
        assert!(mm.cp_norm(1e-9).unwrap() <= n * n + 1e-12);
        let other = random::cp_map(&mut rng, &MatrixAlgebra::full(3), &b, 1);
        assert!(other.compose(&m).is_err());
    }

    #[test]
    fn unitalization_examples() {
        let b = MatrixAlgebra::full(2);
        let id = CpMap::identity(&b);
        let u = id.unitalize(1e-9).unwrap();
        let ua = b.unitalize();
        assert!(u.apply(&ua.unit()).distance(&ua.unit()) < 1e-12);
        let half = CpMap::from_fn(&b, &b, |x| x.scale(re(0.5)));
        let uh = half.unitalize(1e-9).unwrap();
        assert!(uh.apply(&ua.unit()).distance(&ua.unit().scale(re(0.5))) < 1e-12);
        assert!(uh.is_completely_positive(1e-10));
    }

    #[test]
    fn homomorphism_residuals_detect_homomorphisms() {
        let mut rng = random::seeded(55);
        let b = MatrixAlgebra::new(vec![2, 2]).unwrap();
        let u = random::unitary_element(&mut rng, &b);
        let (m, a, one) = CpMap::conjugation(&u).homomorphism_residuals();
        assert!(m.max(a).max(one) < 1e-12);
        let (m, _, _) = CpMap::normalized_trace_state(2).homomorphism_residuals();
        assert!(m > 0.1);
    }

    #[test]
    fn gns_of_identity() {
        let b = MatrixAlgebra::new(vec![1, 2]).unwrap();
        let g = CpMap::identity(&b).gns(1e-10).unwrap();
        assert_eq!(g.correspondence.dim(), b.dim());
        let f = g.correspondence.module();
        assert!(f.inner_coords(&g.zeta, &g.zeta).distance(&b.identity()) < 1e-12);
        assert!(g.checks.iter().all(|c| c.pass));
    }

    #[test]
    fn gns_of_conjugation_has_rank_one_kraus() {
        let mut rng = random::seeded(56);
        let b = MatrixAlgebra::full(3);
        let u = random::unitary_element(&mut rng, &b);
        let tau = CpMap::conjugation(&u);
        assert_eq!(tau.kraus_rank(1e-10).unwrap(), 1);
        let g = tau.gns(1e-10).unwrap();
        assert_eq!(g.correspondence.dim(), 9);
        assert!(g.checks.iter().all(|c| c.pass));
    }

    #[test]
    fn gns_of_trace() {
        for n in 1..4 {
            let g = CpMap::trace(n).gns(1e-10).unwrap();
            assert_eq!(g.correspondence.dim(), n * n);
            assert!(g.checks.iter().all(|c| c.pass));
        }
    }

    #[test]
    fn gns_rejects_non_cp() {
        assert!(CpMap::transpose(2).gns(1e-9).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn choi_round_trip(seed in 0u64..10_000) {
            let mut rng = random::seeded(seed);
            let b = random::algebra(&mut rng, 2, 3);
            let c = random::algebra(&mut rng, 2, 3);
            let action = random::gaussian(&mut rng, c.dim(), b.dim());
            let m = CpMap::new(&b, &c, action).unwrap();
            let back = CpMap::from_choi(&b, &c, &m.choi()).unwrap();
            prop_assert!(back.distance(&m) <= 1e-12);
        }

        #[test]
        fn cp_maps_preserve_adjoints_and_positivity(seed in 0u64..10_000) {
            let mut rng = random::seeded(seed);
            let b = random::algebra(&mut rng, 2, 3);
            let c = random::algebra(&mut rng, 2, 3);
            let m = random::cp_map(&mut rng, &b, &c, 2);
            let x = random::element(&mut rng, &b);
            prop_assert!(adjoint_defect(&m, &x) <= 1e-10 * (1.0 + x.operator_norm()));
            let p = random::positive(&mut rng, &b);
            prop_assert!(m.apply(&p).is_positive(1e-10));
        }

        #[test]
        fn gns_cyclic_identity(seed in 0u64..10_000) {
            let mut rng = random::seeded(seed);
            let b = random::algebra(&mut rng, 2, 2);
            let c = random::algebra(&mut rng, 2, 2);
            let m = random::cp_map(&mut rng, &b, &c, 2);
            let g = m.gns(1e-10).unwrap();
            for chk in &g.checks {
                prop_assert!(chk.pass, "{:?}", chk);
            }
        }

        #[test]
        fn unitalization_restricts_and_scales(seed in 0u64..10_000) {
            let mut rng = random::seeded(seed);
            let b = random::algebra(&mut rng, 2, 2);
            let c = random::algebra(&mut rng, 2, 2);
            let m = random::cp_map(&mut rng, &b, &c, 2);
            let u = m.unitalize(1e-9).unwrap();
            prop_assert!(u.is_completely_positive(1e-9));
            let ub = b.unitalize();
            let uc = c.unitalize();
            let norm = m.cp_norm(1e-9).unwrap();
            prop_assert!(u.apply(&ub.unit()).distance(&uc.unit().scale(re(norm))) <= 1e-12);
            let x = random::element(&mut rng, &b);
            prop_assert!(u.apply(&ub.embed(&x)).distance(&uc.embed(&m.apply(&x))) <= 1e-12 * (1.0 + x.operator_norm()));
        }
    }
}

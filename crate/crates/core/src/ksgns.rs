//! Factorizations `𝒯 = Ξ*(• ⊙ id_𝔉)Ξ` of CP maps `𝒯 : 𝔅ᵃ(E) → 𝔅ᵃ(F)`.
//!
//! With `(𝔰𝔈, Ξ₀)` the GNS data of `𝒯`, the correspondence is
//! `𝔉 = E* ⊙ 𝔰𝔈 ⊙ F` and `Ξ` is `y ↦ Ξ₀ ⊙ y` followed by the unitary
//! `𝔰𝔈 ⊙ F ≅ E ⊙ 𝔉`, `(x′x*)·w ↦ x′ ⊙ (x* ⊙ w)`. Strictness is automatic in
//! finite dimension; only the equivalent nondegeneracy is checked.

use alloc::format;
use alloc::vec::Vec;

use crate::algebra::MatrixAlgebra;
use crate::correspondence::{Correspondence, TensorProduct};
use crate::cpmap::{CpMap, Gns};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::modmap::{assemble_blockmap, ModuleMap};
use crate::module::{Corner, HilbertModuleSpace, LinkingAlgebraView};
use crate::report::Check;

fn std_unit(e: &HilbertModuleSpace, i: usize, r: usize, c: usize) -> CVec {
    e.to_standard().row(e.std_index(i, r, c)).adjoint()
}

fn from_cols(cols: &[CVec], rows: usize) -> CMat {
    if cols.is_empty() {
        return CMat::zeros(rows, 0);
    }
    CMat::from_columns(cols)
}

fn check_shapes(s: &CpMap, e: &HilbertModuleSpace, f: &HilbertModuleSpace) -> Result<()> {
    if s.domain() != e.adjointable_operators().algebra() || s.codomain() != f.adjointable_operators().algebra() {
        return Err(Error::Shape("map does not act between the operator algebras".into()));
    }
    Ok(())
}

/// GNS data `(𝔰𝔈, Ξ₀)` of `S : 𝔅ᵃ(E) → 𝔅ᵃ(F)`.
pub fn gns_on_operators(s: &CpMap, e: &HilbertModuleSpace, f: &HilbertModuleSpace, tol: f64) -> Result<Gns> {
    check_shapes(s, e, f)?;
    s.gns(tol)
}

/// `𝔰𝔈 ⊙ F` as a `𝔅ᵃ(E)`-`𝒞` correspondence.
fn gns_tensor_f(sg: &Gns, f: &HilbertModuleSpace, tol: f64) -> Result<TensorProduct> {
    TensorProduct::of_correspondences(&sg.correspondence, &Correspondence::from_operators(f), tol)
}

/// Whether `𝔅ᵃ(E)` acts nondegenerately on `𝔰𝔈 ⊙ F`.
pub fn nondegeneracy_check(s: &CpMap, e: &HilbertModuleSpace, f: &HilbertModuleSpace, tol: f64) -> Result<bool> {
    let sg = gns_on_operators(s, e, f, tol)?;
    let h = gns_tensor_f(&sg, f, tol)?;
    Ok(h.correspondence()
        .expect("built from correspondences")
        .is_nondegenerate(tol))
}

/// Output of [`ksgns_decompose`].
#[derive(Debug, Clone)]
pub struct KsgnsResult {
    /// `𝔉 = E* ⊙ 𝔰𝔈 ⊙ F` as a ℬ-𝒞 correspondence.
    pub corr: Correspondence,
    /// `E ⊙ 𝔉`.
    pub tensor: TensorProduct,
    /// `Ξ : F → E ⊙ 𝔉`.
    pub xi: ModuleMap,
    /// The unitary `𝔰𝔈 ⊙ F → E ⊙ 𝔉`, cached.
    pub identification: CMat,
    /// `max_a ‖Ξ*(a ⊙ id)Ξ − S(a)‖` over operator units.
    pub residual: f64,
    /// False when `E` is not full, where `𝔉` is not determined by `S`.
    pub unique: bool,
    /// Named residuals.
    pub checks: Vec<Check>,
}

/// `S = Ξ*(• ⊙ id_𝔉)Ξ`.
pub fn ksgns_decompose(s: &CpMap, e: &HilbertModuleSpace, f: &HilbertModuleSpace, tol: f64) -> Result<KsgnsResult> {
    let sg = gns_on_operators(s, e, f, tol)?;
    let ops_e = e.adjointable_operators();
    let ops_f = f.adjointable_operators();
    let h = gns_tensor_f(&sg, f, tol)?;
    let hc = h.correspondence().expect("built from correspondences");
    let span = hc.nondegenerate_span_dim(tol);
    if span != hc.dim() {
        return Err(Error::Precondition(format!(
            "left action on the GNS tensor product is degenerate: span {span} of {}",
            hc.dim()
        )));
    }
    let dual = e.dual_module();
    let e_star = Correspondence::new_unchecked(dual.module().clone(), e.algebra().clone(), dual.base_action())?;
    let frak = TensorProduct::of_correspondences(&e_star, hc, tol)?;
    let corr = frak.correspondence().expect("built from correspondences").clone();
    let k = TensorProduct::new(e, &corr, tol)?;

    // (x′x*)·w ↦ x′ ⊙ (x* ⊙ w) with x′, x standard elements, so x′x* is a
    // matrix unit of 𝔅ᵃ(E)
    let oa = ops_e.algebra();
    let mut src = Vec::new();
    let mut dst = Vec::new();
    for (beta, &i) in ops_e.active_blocks().iter().enumerate() {
        let m = oa.block_dims()[beta];
        for rp in 0..m {
            let xp = std_unit(e, i, rp, 0);
            for r in 0..m {
                let xs = dual.conjugate(&std_unit(e, i, r, 0));
                let l = &hc.left_units()[oa.index(beta, rp, r)];
                for w in 0..h.dim() {
                    let wv = h.module().unit_coords(w);
                    src.push(l * &wv);
                    dst.push(k.tensor(&xp, &frak.tensor(&xs, &wv)));
                }
            }
        }
    }
    let x = from_cols(&src, h.dim());
    let y = from_cols(&dst, k.dim());
    let (phi, well) = linalg::solve_right(&x, &y, 1e-10);
    let scale = 1.0 + linalg::max_abs(&y);
    let unitary = if phi.nrows() == phi.ncols() {
        linalg::isometry_defect(&phi).max(linalg::isometry_defect(&phi.adjoint()))
    } else {
        f64::INFINITY
    };
    let mut left = 0.0f64;
    for (u, l) in hc.left_units().iter().enumerate() {
        let a = ops_e.to_operator(&oa.basis_element(u));
        left = left.max(linalg::max_abs(&(&phi * l - k.lift_left(&a) * &phi)));
    }

    let mut xi0 = CMat::zeros(h.dim(), f.dim());
    for c in 0..f.dim() {
        xi0.set_column(c, &h.tensor(&sg.zeta, &f.unit_coords(c)));
    }
    let xi_m = &phi * xi0;
    let s_norm = s.apply(&oa.identity()).operator_norm();
    let mut residual = 0.0f64;
    for u in 0..oa.dim() {
        let a = oa.basis_element(u);
        let rec = xi_m.adjoint() * k.lift_left(&ops_e.to_operator(&a)) * &xi_m;
        residual = residual.max(linalg::op_norm(&(rec - ops_f.to_operator(&s.apply(&a)))));
    }
    let mut checks = sg.checks.clone();
    checks.push(Check::new("identification_well_defined", well, tol * scale));
    checks.push(
        Check::new("identification_unitary", unitary, tol * scale).with_witness(format!(
            "dim 𝔰𝔈⊙F = {}, dim E⊙𝔉 = {}",
            h.dim(),
            k.dim()
        )),
    );
    checks.push(Check::new("identification_left_linear", left, tol * scale));
    checks.push(Check::new("ksgns_reconstruction", residual, tol * s_norm));
    let xi = ModuleMap::new(f, k.module(), xi_m)?;
    Ok(KsgnsResult {
        corr,
        tensor: k,
        xi,
        identification: phi,
        residual,
        unique: e.is_full(),
        checks,
    })
}

/// Output of [`block_decompose`].
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    /// `ξ₁ ∈ 𝔉`.
    pub xi1: CVec,
    /// `ξ₂ : F → E ⊙ 𝔉`.
    pub xi2: ModuleMap,
    /// `T = ξ₂*(• ⊙ ξ₁)`.
    pub t: ModuleMap,
    /// `τ = ⟨ξ₁, •ξ₁⟩`.
    pub tau: CpMap,
    /// `ϑ = ξ₂*(• ⊙ id)ξ₂`.
    pub theta: CpMap,
    /// `𝔉`.
    pub corr: Correspondence,
    /// `E ⊙ 𝔉`.
    pub tensor: TensorProduct,
    /// `‖ξ₂*ξ₂ − 1‖`; zero exactly when the 22-corner is a unital homomorphism.
    pub xi2_isometry_defect: f64,
    /// Named residuals.
    pub checks: Vec<Check>,
}

fn corner_name(c: Corner) -> &'static str {
    match c {
        Corner::Base { .. } => "11",
        Corner::Module { .. } => "21",
        Corner::Dual { .. } => "12",
        Corner::Operators { .. } => "22",
    }
}

/// Largest leak of a block-wise map out of each corner.
fn leakage(big: &CpMap, le: &LinkingAlgebraView, lf: &LinkingAlgebraView) -> (f64, &'static str) {
    let mut worst = (0.0f64, "11");
    for k in 0..le.algebra().dim() {
        let corner = le.corner_of(k);
        let img = big.apply(&le.algebra().basis_element(k));
        let kept = match corner {
            Corner::Base { .. } => lf.embed11(&lf.corner11(&img)),
            Corner::Module { .. } => lf.embed21(&lf.corner21(&img)),
            Corner::Dual { .. } => lf.embed12(&lf.corner12(&img)),
            Corner::Operators { .. } => lf.embed22(&lf.corner22(&img)),
        };
        let r = img.distance(&kept);
        if r > worst.0 {
            worst = (r, corner_name(corner));
        }
    }
    worst
}

/// Diagonal form `Ξ = [ξ₁ 0; 0 ξ₂]` of a block-wise CP map between the
/// linking algebras of `E` (over ℬ) and `F` (over 𝒞).
pub fn block_decompose(
    big: &CpMap,
    e: &HilbertModuleSpace,
    f: &HilbertModuleSpace,
    tol: f64,
) -> Result<BlockDecomposition> {
    let le = e.linking_algebra();
    let lf = f.linking_algebra();
    if big.domain() != le.algebra() || big.codomain() != lf.algebra() {
        return Err(Error::Shape("map does not act between the linking algebras".into()));
    }
    let scale = 1.0 + big.apply(&le.algebra().identity()).operator_norm();
    let (leak, corner) = leakage(big, &le, &lf);
    if leak > tol * scale {
        return Err(Error::NotBlockwise { corner, residual: leak });
    }
    let x = le.direct_sum();
    let y = lf.direct_sum();
    let ks = ksgns_decompose(big, x, y, tol)?;
    let corr = ks.corr.clone();
    let kx = &ks.tensor;
    let b = e.algebra();
    let n = b.block_dims();
    let m = e.multiplicities();
    let te = TensorProduct::new(e, &corr, tol)?;
    let cdim = f.algebra().dim();

    // K coordinates (i, r, l): r < nᵢ is ℬ ⊙ 𝔉, r = nᵢ + r′ is E ⊙ 𝔉 at (i, r′, l)
    let mut j = CMat::zeros(corr.dim(), kx.dim());
    let mut pe = CMat::zeros(te.dim(), kx.dim());
    for i in 0..n.len() {
        let g = kx.range_basis(i);
        for l in 0..g.ncols() {
            for r in 0..n[i] {
                let col = corr.left_action(&b.matrix_unit(i, r, 0)) * g.column(l);
                j.set_column(kx.index(i, r, l), &col);
            }
            for r in 0..m[i] {
                pe[(te.index(i, r, l), kx.index(i, n[i] + r, l))] = crate::linalg::re(1.0);
            }
        }
    }
    let mut pb = CMat::zeros(kx.dim(), kx.dim());
    for (i, &ni) in n.iter().enumerate() {
        for l in 0..kx.range_basis(i).ncols() {
            for r in 0..ni {
                let k = kx.index(i, r, l);
                pb[(k, k)] = crate::linalg::re(1.0);
            }
        }
    }
    let xi = ks.xi.matrix();
    let xi_c = xi.columns(0, cdim).into_owned();
    let xi_f = xi.columns(cdim, f.dim()).into_owned();
    let one_c = f.algebra().identity().coords();
    let xi1 = &j * (&pb * &xi_c * &one_c);
    let xi2_m = &pe * &xi_f;
    let off = linalg::max_abs(&(&pe * &xi_c)).max(linalg::max_abs(&(&pb * &xi_f)));
    // ℬ ⊙ 𝔉 ≅ 𝔉 must carry Ξ(c) to ξ₁c
    let mut c_res = 0.0f64;
    for u in 0..cdim {
        let r = &corr.module().right_unit_actions()[u];
        let v = &j * (&pb * xi_c.column(u));
        c_res = c_res.max((v - r * &xi1).iter().fold(0.0, |a, z| a.max(z.norm())));
    }

    let xi2 = ModuleMap::new(f, te.module(), xi2_m.clone())?;
    let mut t_m = CMat::zeros(f.dim(), e.dim());
    for a in 0..e.dim() {
        t_m.set_column(a, &(xi2_m.adjoint() * te.tensor(&e.unit_coords(a), &xi1)));
    }
    let t = ModuleMap::new(e, f, t_m)?;
    let fm = corr.module();
    let tau = CpMap::from_fn(b, f.algebra(), |bb| {
        fm.inner_coords(&xi1, &(corr.left_action(bb) * &xi1))
    });
    let ops_e = e.adjointable_operators();
    let ops_f = f.adjointable_operators();
    let theta = CpMap::from_fn(ops_e.algebra(), ops_f.algebra(), |a| {
        ops_f.from_operator(&(xi2_m.adjoint() * te.lift_left(&ops_e.to_operator(a)) * &xi2_m))
    });
    let rebuilt = assemble_blockmap(&le, &lf, &tau, &t, &theta);
    let mut corners = [0.0f64; 4];
    for k in 0..le.algebra().dim() {
        let slot = match le.corner_of(k) {
            Corner::Base { .. } => 0,
            Corner::Module { .. } => 1,
            Corner::Dual { .. } => 2,
            Corner::Operators { .. } => 3,
        };
        let d = (rebuilt.action().column(k) - big.action().column(k))
            .iter()
            .fold(0.0f64, |a, z| a.max(z.norm()));
        corners[slot] = corners[slot].max(d);
    }
    let mut checks = ks.checks.clone();
    checks.push(Check::new("xi_off_diagonal", off, tol * scale));
    checks.push(Check::new("xi1_identification", c_res, tol * scale));
    for (name, r) in ["corner11_tau", "corner21_t", "corner12_t_adjoint", "corner22_theta"]
        .iter()
        .zip(corners)
    {
        checks.push(Check::new(name, r, tol * scale));
    }
    let xi2_isometry_defect = linalg::isometry_defect(&xi2_m);
    Ok(BlockDecomposition {
        xi1,
        xi2,
        t,
        tau,
        theta,
        corr,
        tensor: te,
        xi2_isometry_defect,
        checks,
    })
}

/// `[⟨ξ₁,•ξ₁⟩ T*; T ξ₂*(•⊙id)ξ₂]` with `T = ξ₂*(• ⊙ ξ₁)`, for building
/// block-wise CP maps from diagonal data.
pub fn blockmap_from_diagonal(
    e: &HilbertModuleSpace,
    f: &HilbertModuleSpace,
    corr: &Correspondence,
    xi1: &CVec,
    xi2: &CMat,
    tol: f64,
) -> Result<CpMap> {
    let te = TensorProduct::new(e, corr, tol)?;
    if xi2.shape() != (te.dim(), f.dim()) {
        return Err(Error::Shape("ξ₂ must map F into E ⊙ 𝔉".into()));
    }
    let b: &MatrixAlgebra = e.algebra();
    let fm = corr.module();
    let tau = CpMap::from_fn(b, f.algebra(), |bb| fm.inner_coords(xi1, &(corr.left_action(bb) * xi1)));
    let mut t_m = CMat::zeros(f.dim(), e.dim());
    for a in 0..e.dim() {
        t_m.set_column(a, &(xi2.adjoint() * te.tensor(&e.unit_coords(a), xi1)));
    }
    let t = ModuleMap::new(e, f, t_m)?;
    let ops_e = e.adjointable_operators();
    let ops_f = f.adjointable_operators();
    let theta = CpMap::from_fn(ops_e.algebra(), ops_f.algebra(), |a| {
        ops_f.from_operator(&(xi2.adjoint() * te.lift_left(&ops_e.to_operator(a)) * xi2))
    });
    Ok(assemble_blockmap(
        &e.linking_algebra(),
        &f.linking_algebra(),
        &tau,
        &t,
        &theta,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modmap::{cph_extension, generate_tau_map};
    use crate::random;
    use crate::report::all_pass;
    use alloc::vec;
    use proptest::prelude::*;

    fn random_s(seed: u64, max_rows: usize) -> (HilbertModuleSpace, HilbertModuleSpace, CpMap) {
        let mut rng = random::seeded(seed);
        let b = random::algebra(&mut rng, 2, 2);
        let c = random::algebra(&mut rng, 2, 2);
        let e = random::module(&mut rng, &b, max_rows, true);
        let f = random::module(&mut rng, &c, max_rows, true);
        let s = random::cp_map(
            &mut rng,
            e.adjointable_operators().algebra(),
            f.adjointable_operators().algebra(),
            2,
        );
        (e, f, s)
    }

    #[test]
    fn identity_gives_trivial_correspondence() {
        let b = MatrixAlgebra::new(vec![2, 1]).unwrap();
        let e = HilbertModuleSpace::full(&b, &[2, 1]).unwrap();
        let ops = e.adjointable_operators();
        let s = CpMap::identity(ops.algebra());
        let g = gns_on_operators(&s, &e, &e, 1e-10).unwrap();
        assert_eq!(g.correspondence.dim(), ops.algebra().dim());
        assert!(nondegeneracy_check(&s, &e, &e, 1e-10).unwrap());
        let r = ksgns_decompose(&s, &e, &e, 1e-10).unwrap();
        assert!(all_pass(&r.checks), "{:#?}", r.checks);
        assert_eq!(r.corr.dim(), b.dim());
        assert!(r.residual < 1e-10);
        assert!(r.unique);
    }

    #[test]
    fn homomorphisms_have_rank_one_gns() {
        let mut rng = random::seeded(31);
        let b = MatrixAlgebra::full(2);
        let e = random::module_with(&mut rng, &b, &[2], 3);
        let ops = e.adjointable_operators();
        let u = random::unitary_element(&mut rng, ops.algebra());
        let s = CpMap::conjugation(&u);
        assert_eq!(s.kraus_rank(1e-10).unwrap(), 1);
        let r = ksgns_decompose(&s, &e, &e, 1e-10).unwrap();
        assert!(all_pass(&r.checks), "{:#?}", r.checks);
        assert!(linalg::isometry_defect(r.xi.matrix()) < 1e-9);
    }

    #[test]
    fn random_maps_reconstruct() {
        for seed in 0..6 {
            let (e, f, s) = random_s(seed, 2);
            let r = ksgns_decompose(&s, &e, &f, 1e-9).unwrap();
            assert!(all_pass(&r.checks), "seed {seed}: {:#?}", r.checks);
        }
    }

    #[test]
    fn truncated_action_is_degenerate() {
        let b = MatrixAlgebra::full(2);
        let f = Correspondence::identity(&b);
        let mut left = f.left_units().to_vec();
        // drop the action of e₁₁, e₁₀ and e₀₁: only e₀₀ still acts
        for l in left.iter_mut().skip(1) {
            *l = CMat::zeros(l.nrows(), l.ncols());
        }
        let bad = Correspondence::new_unchecked(f.module().clone(), b.clone(), left).unwrap();
        assert!(!bad.is_nondegenerate(1e-10));
        assert!(f.is_nondegenerate(1e-10));
    }

    #[test]
    fn non_blockwise_maps_are_rejected() {
        let b = MatrixAlgebra::full(1);
        let e = HilbertModuleSpace::full(&b, &[1]).unwrap();
        let l = e.linking_algebra();
        // the Choi-positive map b ↦ tr(b)·1/2 mixes all corners
        let mix = CpMap::from_fn(l.algebra(), l.algebra(), |x| {
            l.algebra().identity().scale(x.trace() * crate::linalg::re(0.5))
        });
        assert!(matches!(
            block_decompose(&mix, &e, &e, 1e-9),
            Err(Error::NotBlockwise { .. })
        ));
    }

    #[test]
    fn cph_extension_decomposes_with_isometric_xi2() {
        for seed in 0..3 {
            let mut rng = random::seeded(seed);
            let b = random::algebra(&mut rng, 2, 2);
            let c = random::algebra(&mut rng, 2, 2);
            let e = random::module(&mut rng, &b, 2, true);
            let tau = random::cp_map(&mut rng, &b, &c, 2);
            let g = tau.gns(1e-10).unwrap();
            let (t, tau) = generate_tau_map(&e, &g.correspondence, &g.zeta, 1, seed, 1e-10).unwrap();
            let ext = cph_extension(&t, &tau, 1e-9).unwrap();
            let d = block_decompose(&ext.blockmap, &e, ext.t_ft.codomain(), 1e-9).unwrap();
            assert!(all_pass(&d.checks), "seed {seed}: {:#?}", d.checks);
            assert!(d.xi2_isometry_defect < 1e-9);
            assert!(d.tau.distance(&tau) < 1e-8);
        }
    }

    #[test]
    fn identity_extension_decomposes_to_unit() {
        let b = MatrixAlgebra::full(2);
        let e = HilbertModuleSpace::algebra_module(&b);
        let ext = cph_extension(&ModuleMap::identity(&e), &CpMap::identity(&b), 1e-10).unwrap();
        let d = block_decompose(&ext.blockmap, &e, ext.t_ft.codomain(), 1e-10).unwrap();
        assert!(all_pass(&d.checks), "{:#?}", d.checks);
        assert!(d.xi2_isometry_defect < 1e-9);
        let unit = d.corr.module().inner_coords(&d.xi1, &d.xi1);
        assert!(unit.distance(&b.identity()) < 1e-9);
    }

    #[test]
    fn non_isometric_diagonal_is_recovered() {
        let mut rng = random::seeded(33);
        let b = MatrixAlgebra::new(vec![2, 1]).unwrap();
        let e = random::module_with(&mut rng, &b, &[1, 2], 2);
        let corr = Correspondence::identity(&b);
        let xi1 = random::element(&mut rng, &b).coords();
        let te = TensorProduct::new(&e, &corr, 1e-10).unwrap();
        // ξ₂ = ½·(x ↦ x ⊙ 1), far from isometric
        let one = b.identity().coords();
        let cols: Vec<CVec> = (0..e.dim()).map(|a| te.tensor(&e.unit_coords(a), &one)).collect();
        let xi2 = from_cols(&cols, te.dim()) * crate::linalg::re(0.5);
        let big = blockmap_from_diagonal(&e, &e, &corr, &xi1, &xi2, 1e-10).unwrap();
        assert!(big.is_completely_positive(1e-9));
        let d = block_decompose(&big, &e, &e, 1e-9).unwrap();
        assert!(all_pass(&d.checks), "{:#?}", d.checks);
        assert!(d.xi2_isometry_defect > 0.5);
    }

    #[test]
    fn full_modules_give_equal_dimensions_across_realizations() {
        let mut rng = random::seeded(34);
        let b = MatrixAlgebra::new(vec![1, 2]).unwrap();
        let e1 = random::module_with(&mut rng, &b, &[2, 1], 2);
        let e2 = random::module_with(&mut rng, &b, &[2, 1], 3);
        let ops = e1.adjointable_operators();
        let s = random::cp_map(&mut rng, ops.algebra(), ops.algebra(), 2);
        let r1 = ksgns_decompose(&s, &e1, &e1, 1e-9).unwrap();
        let r2 = ksgns_decompose(&s, &e2, &e2, 1e-9).unwrap();
        assert_eq!(r1.corr.dim(), r2.corr.dim());
        assert!(all_pass(&r1.checks) && all_pass(&r2.checks));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn reconstruction_holds(seed in 0u64..1000) {
            let (e, f, s) = random_s(seed, 2);
            let r = ksgns_decompose(&s, &e, &f, 1e-9).unwrap();
            let norm = s.cp_norm(1e-9).unwrap();
            prop_assert!(r.residual <= 1e-8 * norm);
        }
    }
}

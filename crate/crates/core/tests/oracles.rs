//! Cross-checks against independent computations on ambient matrices.
//!
//! Each oracle recomputes a quantity from raw block matrices (no
//! coordinates, no layouts) and compares it with the library routine.

use modcp_core::algebra::{AlgebraElement, MatrixAlgebra};
use modcp_core::correspondence::{scalar_gram, TensorProduct};
use modcp_core::cpmap::CpMap;
use modcp_core::ksgns::ksgns_decompose;
use modcp_core::linalg::{self, re, CMat};
use modcp_core::modmap::{check_quaternary, check_tau_map, random_tau_map, ModuleMap, TauMapLimits};
use modcp_core::module::{HilbertModuleSpace, ModuleElement};
use modcp_core::random;

fn inner(e: &HilbertModuleSpace, x: &ModuleElement, y: &ModuleElement) -> AlgebraElement {
    // ⟨x, y⟩ = (xᵢ* yᵢ)ᵢ on ambient blocks
    let blocks = x
        .blocks()
        .iter()
        .zip(y.blocks())
        .map(|(a, b)| a.adjoint() * b)
        .collect();
    e.algebra().element(blocks).unwrap()
}

fn image(t: &ModuleMap, x: &ModuleElement) -> ModuleElement {
    let c = t.domain().coords(x, 1e-9).unwrap();
    t.codomain().element(&t.apply(&c))
}

fn basis(e: &HilbertModuleSpace) -> Vec<ModuleElement> {
    (0..e.dim()).map(|k| e.element(&e.unit_coords(k))).collect()
}

/// `max ‖⟨T(y), T(x⟨x′,y′⟩)⟩ − ⟨T(x′⟨x,y⟩), T(y′)⟩‖` by brute force.
fn quaternary_oracle(t: &ModuleMap) -> f64 {
    let e = t.domain();
    let f = t.codomain();
    let xs = basis(e);
    let mut worst = 0.0f64;
    for x in &xs {
        for xp in &xs {
            for y in &xs {
                for yp in &xs {
                    let l = inner(f, &image(t, y), &image(t, &x.mul_right(&inner(e, xp, yp))));
                    let r = inner(f, &image(t, &xp.mul_right(&inner(e, x, y))), &image(t, yp));
                    worst = worst.max(l.distance(&r));
                }
            }
        }
    }
    worst
}

#[test]
fn transpose_maps_rows_to_columns() {
    for n in 2..=4 {
        let t = ModuleMap::transpose(n);
        for k in 0..n {
            let mut row = CMat::zeros(1, n);
            row[(0, k)] = re(1.0);
            let y = image(&t, &ModuleElement::new(vec![row.clone()]));
            assert!(linalg::max_abs(&(&y.blocks()[0] - row.transpose())) < 1e-14);
        }
        // Choi matrix of b ↦ bᵗ is the swap operator, with eigenvalue −1
        let choi = CpMap::transpose(n).choi_block(0, 0);
        let (vals, _) = linalg::eigh(&choi);
        assert!((vals[0] + 1.0).abs() < 1e-12);
        assert!(!CpMap::transpose(n).is_completely_positive(1e-9));
    }
}

#[test]
fn tau_map_residual_matches_ambient_computation() {
    for seed in 0..5 {
        let (t, tau) = random_tau_map(&TauMapLimits::default(), seed, 1e-10).unwrap();
        let xs = basis(t.domain());
        let mut worst = 0.0f64;
        for x in &xs {
            for y in &xs {
                let lhs = inner(t.codomain(), &image(&t, x), &image(&t, y));
                worst = worst.max(lhs.distance(&tau.apply(&inner(t.domain(), x, y))));
            }
        }
        assert!(worst < 1e-12, "seed {seed}: {worst}");
        assert!(check_tau_map(&t, &tau, 1e-10).unwrap().pass);
    }
}

#[test]
fn quaternary_residual_matches_brute_force() {
    let limits = TauMapLimits {
        max_dim: 5,
        ..TauMapLimits::default()
    };
    for seed in 0..4 {
        let (t, _) = random_tau_map(&limits, seed, 1e-10).unwrap();
        assert!(quaternary_oracle(&t) < 1e-12);
        let g = random::gaussian(&mut random::seeded(seed), t.codomain().dim(), t.domain().dim());
        let noisy = ModuleMap::new(t.domain(), t.codomain(), g).unwrap();
        let oracle = quaternary_oracle(&noisy);
        let lib = check_quaternary(&noisy, 1e-9).residual;
        // the library reports the same supremum over basis quadruples
        assert!(
            (oracle - lib).abs() <= 1e-10 * (1.0 + oracle),
            "seed {seed}: {oracle} vs {lib}"
        );
    }
}

#[test]
fn tensor_dimension_is_rank_of_scalar_gram() {
    let mut rng = random::seeded(21);
    for _ in 0..8 {
        let b = random::algebra(&mut rng, 2, 3);
        let c = random::algebra(&mut rng, 2, 2);
        let e = random::module(&mut rng, &b, 2, false);
        let tau = random::cp_map(&mut rng, &b, &c, 2);
        let g = tau.gns(1e-10).unwrap();
        let tp = TensorProduct::new(&e, &g.correspondence, 1e-10).unwrap();
        let gram = scalar_gram(&e, &g.correspondence);
        assert_eq!(tp.dim(), linalg::rank(&gram, 1e-9));
    }
}

#[test]
fn gns_matches_kraus_sum() {
    let mut rng = random::seeded(22);
    for _ in 0..6 {
        let b = random::algebra(&mut rng, 2, 3);
        let c = random::algebra(&mut rng, 2, 3);
        let tau = random::cp_map(&mut rng, &b, &c, 3);
        let kraus = tau.kraus(1e-12).unwrap();
        let g = tau.gns(1e-10).unwrap();
        for u in 0..b.dim() {
            let x = b.basis_element(u);
            // τ(x)_j = Σ K* x_i K over Kraus blocks
            let mut blocks: Vec<CMat> = c.block_dims().iter().map(|&n| CMat::zeros(n, n)).collect();
            for kb in &kraus {
                for k in &kb.operators {
                    blocks[kb.codomain_block] += k.adjoint() * x.block(kb.domain_block) * k;
                }
            }
            let direct = c.element(blocks).unwrap();
            let f = &g.correspondence;
            let via_gns = f.module().inner_coords(&g.zeta, &(f.left_action(&x) * &g.zeta));
            assert!(direct.distance(&via_gns) < 1e-12);
        }
    }
}

#[test]
fn ksgns_on_column_space_has_choi_rank() {
    // E = ℂⁿ over ℂ: 𝔅ᵃ(E) = M_n and the factorization is a minimal
    // Stinespring dilation, so dim 𝔉 equals the Choi rank
    let mut rng = random::seeded(23);
    let c = MatrixAlgebra::full(1);
    for n in 2..=3 {
        let e = HilbertModuleSpace::full(&c, &[n]).unwrap();
        let m = MatrixAlgebra::full(n);
        let s = random::cp_map(&mut rng, &m, &m, 3);
        let mut choi = CMat::zeros(n * n, n * n);
        for p in 0..n {
            for q in 0..n {
                let img = s.apply(&m.matrix_unit(0, p, q));
                choi.view_mut((p * n, q * n), (n, n)).copy_from(img.block(0));
            }
        }
        let rank = linalg::rank(&choi, 1e-10);
        let r = ksgns_decompose(&s, &e, &e, 1e-9).unwrap();
        assert_eq!(r.corr.dim(), rank);
        assert!(r.residual < 1e-10);
    }
}

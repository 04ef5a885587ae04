//! Linear maps between Hilbert modules and the conditions that make them
//! CP-H-extendable: τ-maps, the quaternary and ternary identities, GNS
//! factorization, block-wise CP extensions, left actions and CB norms.
//!
//! All conditions are linear or sesquilinear in each argument, so every
//! check iterates over basis tuples only.

use alloc::format;
use alloc::vec::Vec;

// f64 math in no_std
#[allow(unused_imports)]
use nalgebra::ComplexField as _;

use crate::algebra::{AlgebraElement, IdealDescriptor, MatrixAlgebra};
use crate::correspondence::{Correspondence, TensorProduct};
use crate::cpmap::{CpMap, Gns};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::module::{Corner, HilbertModuleSpace, LinkingAlgebraView, ModuleElement};
use crate::random;
use crate::report::Check;

/// A ℂ-linear map `T : E → F` given by its matrix on coordinates.
#[derive(Debug, Clone)]
pub struct ModuleMap {
    domain: HilbertModuleSpace,
    codomain: HilbertModuleSpace,
    matrix: CMat,
}

impl ModuleMap {
    /// Map from a `dim F × dim E` matrix.
    pub fn new(domain: &HilbertModuleSpace, codomain: &HilbertModuleSpace, matrix: CMat) -> Result<Self> {
        if matrix.shape() != (codomain.dim(), domain.dim()) {
            return Err(Error::Shape(format!(
                "matrix is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                codomain.dim(),
                domain.dim()
            )));
        }
        Ok(ModuleMap {
            domain: domain.clone(),
            codomain: codomain.clone(),
            matrix,
        })
    }

    /// Identity of `E`.
    pub fn identity(e: &HilbertModuleSpace) -> Self {
        ModuleMap {
            domain: e.clone(),
            codomain: e.clone(),
            matrix: CMat::identity(e.dim(), e.dim()),
        }
    }

    /// Zero map.
    pub fn zero(domain: &HilbertModuleSpace, codomain: &HilbertModuleSpace) -> Self {
        ModuleMap {
            domain: domain.clone(),
            codomain: codomain.clone(),
            matrix: CMat::zeros(codomain.dim(), domain.dim()),
        }
    }

    /// `x ↦ xᵗ` from the row module `H* = M_{1,n}` over `M_n` to the
    /// column module `H = M_{n,1}` over `ℂ`.
    pub fn transpose(n: usize) -> Self {
        let e = HilbertModuleSpace::full(&MatrixAlgebra::full(n), &[1]).expect("one block");
        let f = HilbertModuleSpace::full(&MatrixAlgebra::full(1), &[n]).expect("one block");
        let mut p = CMat::zeros(n, n);
        for c in 0..n {
            p[(f.std_index(0, c, 0), e.std_index(0, 0, c))] = C64::new(1.0, 0.0);
        }
        let matrix = f.to_standard().adjoint() * p * e.to_standard();
        ModuleMap {
            domain: e,
            codomain: f,
            matrix,
        }
    }

    /// `x ↦ (wᵢ xᵢ)ᵢ` on ambient blocks; the image of `E` must lie in `F`.
    pub fn left_multiplication(e: &HilbertModuleSpace, f: &HilbertModuleSpace, w: &[CMat], tol: f64) -> Result<Self> {
        if e.algebra() != f.algebra() || w.len() != e.algebra().num_blocks() {
            return Err(Error::Shape(
                "left multiplication needs a common algebra and one matrix per block".into(),
            ));
        }
        for (i, wi) in w.iter().enumerate() {
            if wi.shape() != (f.ambient_rows()[i], e.ambient_rows()[i]) {
                return Err(Error::Shape(format!("multiplier {i} has the wrong shape")));
            }
        }
        let mut matrix = CMat::zeros(f.dim(), e.dim());
        for a in 0..e.dim() {
            let x = e.element(&e.unit_coords(a));
            let y = ModuleElement::new(x.blocks().iter().zip(w).map(|(b, wi)| wi * b).collect());
            matrix.set_column(a, &f.coords(&y, tol)?);
        }
        Ok(ModuleMap {
            domain: e.clone(),
            codomain: f.clone(),
            matrix,
        })
    }

    /// Domain `E`.
    pub fn domain(&self) -> &HilbertModuleSpace {
        &self.domain
    }

    /// Codomain `F`.
    pub fn codomain(&self) -> &HilbertModuleSpace {
        &self.codomain
    }

    /// Matrix on coordinates.
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// `T(x)` on coordinates.
    pub fn apply(&self, x: &CVec) -> CVec {
        &self.matrix * x
    }

    /// `self ∘ first`.
    pub fn compose(&self, first: &ModuleMap) -> Result<Self> {
        if first.codomain.dim() != self.domain.dim() || first.codomain.algebra() != self.domain.algebra() {
            return Err(Error::Shape("composition of maps with mismatched modules".into()));
        }
        Ok(ModuleMap {
            domain: first.domain.clone(),
            codomain: self.codomain.clone(),
            matrix: &self.matrix * &first.matrix,
        })
    }

    /// `z·T`.
    pub fn scale(&self, z: C64) -> Self {
        ModuleMap {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            matrix: &self.matrix * z,
        }
    }

    /// `T_k : M_k(E) → M_k(F)`, entry-wise.
    pub fn amplify(&self, k: usize) -> Self {
        ModuleMap {
            domain: self.domain.amplify(k),
            codomain: self.codomain.amplify(k),
            matrix: linalg::kron(&CMat::identity(k * k, k * k), &self.matrix),
        }
    }

    /// `Tᵏ : Eᵏ → Fᵏ` on columns.
    pub fn power(&self, k: usize) -> Self {
        ModuleMap {
            domain: self.domain.power(k),
            codomain: self.codomain.power(k),
            matrix: linalg::kron(&CMat::identity(k, k), &self.matrix),
        }
    }

    /// `Tᵗ` for an endomorphism (`T⁰ = id`).
    pub fn iterate(&self, t: usize) -> Result<Self> {
        if self.domain.dim() != self.codomain.dim() {
            return Err(Error::Shape("iterates need an endomorphism".into()));
        }
        let mut out = Self::identity(&self.domain);
        for _ in 0..t {
            out = self.compose(&out)?;
        }
        Ok(out)
    }

    fn std_columns(&self) -> Vec<CVec> {
        columns(&(self.codomain.to_standard() * &self.matrix))
    }
}

const LEFT_LINEARITY_SEED: u64 = 0x1ef7;

fn vmax(v: &CVec) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}

fn columns(m: &CMat) -> Vec<CVec> {
    (0..m.ncols()).map(|k| m.column(k).into_owned()).collect()
}

/// Block shape of a module's standard form, for inner products computed
/// straight from standard coordinates.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    n: Vec<usize>,
    m: Vec<usize>,
    off: Vec<usize>,
}

impl Layout {
    pub(crate) fn new(f: &HilbertModuleSpace) -> Self {
        let n = f.algebra().block_dims().to_vec();
        let m = f.multiplicities();
        let mut off = Vec::with_capacity(n.len());
        let mut acc = 0;
        for i in 0..n.len() {
            off.push(acc);
            acc += m[i] * n[i];
        }
        Layout { n, m, off }
    }

    fn block(&self, u: &CVec, i: usize) -> CMat {
        let (m, n, o) = (self.m[i], self.n[i], self.off[i]);
        CMat::from_fn(m, n, |r, c| u[o + r * n + c])
    }

    /// Blocks of `⟨u, v⟩` for standard coordinates.
    pub(crate) fn inner(&self, u: &CVec, v: &CVec) -> Vec<CMat> {
        (0..self.n.len())
            .map(|i| self.block(u, i).adjoint() * self.block(v, i))
            .collect()
    }

    /// Standard coordinates of `u·c` for blocks `c`.
    pub(crate) fn mul_right(&self, u: &CVec, c: &[CMat]) -> CVec {
        let mut out = CVec::zeros(u.len());
        for (i, ci) in c.iter().enumerate().take(self.n.len()) {
            let p = self.block(u, i) * ci;
            let (n, o) = (self.n[i], self.off[i]);
            for r in 0..self.m[i] {
                for col in 0..n {
                    out[o + r * n + col] = p[(r, col)];
                }
            }
        }
        out
    }
}

fn blocks_norm(b: &[CMat]) -> f64 {
    b.iter().map(linalg::op_norm).fold(0.0, f64::max)
}

fn blocks_frob(b: &[CMat]) -> f64 {
    b.iter().map(linalg::frobenius).fold(0.0, f64::max)
}

fn diff(a: &[CMat], b: &[CMat]) -> Vec<CMat> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Running maximum of block norms, computing exact operator norms only when
/// the Frobenius bound could beat the current maximum.
#[derive(Default)]
struct MaxNorm {
    best: f64,
    scale: f64,
    at: Option<(usize, usize, usize, usize)>,
}

impl MaxNorm {
    fn offer(&mut self, lhs: &[CMat], rhs: &[CMat], at: (usize, usize, usize, usize)) {
        self.scale = self.scale.max(blocks_frob(lhs)).max(blocks_frob(rhs));
        let d = diff(lhs, rhs);
        if blocks_frob(&d) <= self.best {
            return;
        }
        let n = blocks_norm(&d);
        if n > self.best {
            self.best = n;
            self.at = Some(at);
        }
    }
}

fn inner_table(f: &HilbertModuleSpace, std_cols: &[CVec]) -> Vec<Vec<Vec<CMat>>> {
    let l = Layout::new(f);
    std_cols
        .iter()
        .map(|u| std_cols.iter().map(|v| l.inner(u, v)).collect())
        .collect()
}

/// `max ‖⟨T(x),T(x′)⟩ − τ(⟨x,x′⟩)‖` over basis pairs; the threshold is
/// `tol·(1 + largest compared norm)`.
pub fn check_tau_map(t: &ModuleMap, tau: &CpMap, tol: f64) -> Result<Check> {
    let e = &t.domain;
    if tau.domain() != e.algebra() || tau.codomain() != t.codomain.algebra() {
        return Err(Error::Shape("τ does not act between the coefficient algebras".into()));
    }
    let lf = Layout::new(&t.codomain);
    let ts = t.std_columns();
    let es = columns(e.to_standard());
    let le = Layout::new(e);
    let mut acc = MaxNorm::default();
    for a in 0..e.dim() {
        for b in 0..e.dim() {
            let lhs = lf.inner(&ts[a], &ts[b]);
            let g = e.algebra().element(le.inner(&es[a], &es[b])).expect("blocks conform");
            let rhs = tau.apply(&g);
            acc.offer(&lhs, rhs.blocks(), (a, b, 0, 0));
        }
    }
    let mut c = Check::new("tau_map", acc.best, tol * (1.0 + acc.scale));
    if let Some((a, b, _, _)) = acc.at {
        c = c.with_witness(format!("basis pair ({a}, {b})"));
    }
    Ok(c)
}

/// The CP map induced by a τ-map on the range ideal of its domain.
#[derive(Debug, Clone)]
pub struct InducedCpMap {
    /// `τ`, zero off the range ideal.
    pub tau: CpMap,
    /// Where `τ` is determined.
    pub domain: IdealDescriptor,
    /// Consistency residual of the defining system.
    pub residual: f64,
    /// Whether `τ` passed the Choi test.
    pub completely_positive: bool,
}

/// Solves `τ(⟨x,x′⟩) = ⟨T(x),T(x′)⟩` by least squares over basis pairs.
pub fn induced_cp_map(t: &ModuleMap, tol: f64) -> Result<InducedCpMap> {
    let e = &t.domain;
    let b = e.algebra();
    let c = t.codomain.algebra();
    let d = e.dim();
    let es = columns(e.to_standard());
    let ts = t.std_columns();
    let (le, lf) = (Layout::new(e), Layout::new(&t.codomain));
    let mut g = CMat::zeros(b.dim(), d * d);
    let mut h = CMat::zeros(c.dim(), d * d);
    for x in 0..d {
        for y in 0..d {
            let col = x * d + y;
            g.set_column(col, &b.element(le.inner(&es[x], &es[y])).expect("blocks").coords());
            h.set_column(col, &c.element(lf.inner(&ts[x], &ts[y])).expect("blocks").coords());
        }
    }
    let (x, _) = linalg::solve_right(&g, &h, 1e-10);
    let resid = &x * &g - &h;
    let mut worst = (0.0, 0);
    for k in 0..resid.ncols() {
        let r = resid.column(k).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if r > worst.0 {
            worst = (r, k);
        }
    }
    let scale = 1.0 + linalg::max_abs(&h);
    if worst.0 > tol * scale {
        let (px, py) = (worst.1 / d, worst.1 % d);
        let q = check_quaternary(t, tol);
        let mut w = format!("basis pair ({px}, {py})");
        if let Some(qw) = q.witness {
            w = format!("{w}; quaternary {qw}");
        }
        return Err(Error::Inconsistent {
            what: "τ(⟨x,x′⟩) = ⟨T(x),T(x′)⟩",
            residual: worst.0,
            witness: Some(w),
        });
    }
    let tau = CpMap::new(b, c, x)?;
    let completely_positive = tau.is_completely_positive(tol);
    Ok(InducedCpMap {
        tau,
        domain: e.range_ideal(),
        residual: worst.0,
        completely_positive,
    })
}

/// `max ‖⟨T(y),T(x⟨x′,y′⟩)⟩ − ⟨T(x′⟨x,y⟩),T(y′)⟩‖` over basis quadruples.
pub fn check_quaternary(t: &ModuleMap, tol: f64) -> Check {
    let e = &t.domain;
    let d = e.dim();
    let lf = Layout::new(&t.codomain);
    let ts = t.std_columns();
    let grams = inner_table(e, &columns(e.to_standard()));
    let fstd = t.codomain.to_standard() * &t.matrix;
    // trs[p·d + q] = standard columns of T∘R_{⟨e_p,e_q⟩}
    let trs: Vec<Vec<CVec>> = (0..d * d)
        .map(|k| {
            let g = e.algebra().element(grams[k / d][k % d].clone()).expect("blocks");
            columns(&(&fstd * e.right_action(&g)))
        })
        .collect();
    let mut acc = MaxNorm::default();
    for x in 0..d {
        for xp in 0..d {
            for y in 0..d {
                for yp in 0..d {
                    let lhs = lf.inner(&ts[y], &trs[xp * d + yp][x]);
                    let rhs = lf.inner(&trs[x * d + y][xp], &ts[yp]);
                    acc.offer(&lhs, &rhs, (x, xp, y, yp));
                }
            }
        }
    }
    let mut c = Check::new("quaternary", acc.best, tol * (1.0 + acc.scale));
    if let Some((x, xp, y, yp)) = acc.at {
        c = c.with_witness(format!("(x, x′, y, y′) = ({x}, {xp}, {y}, {yp})"));
    }
    c
}

/// `max ‖T(x⟨y,z⟩) − T(x)⟨T(y),T(z)⟩‖` over basis triples.
pub fn check_ternary(t: &ModuleMap, tol: f64) -> Check {
    let e = &t.domain;
    let d = e.dim();
    let lf = Layout::new(&t.codomain);
    let ts = t.std_columns();
    let grams = inner_table(e, &columns(e.to_standard()));
    let fstd = t.codomain.to_standard() * &t.matrix;
    let mut best = 0.0f64;
    let mut scale = 0.0f64;
    let mut at = None;
    for y in 0..d {
        for z in 0..d {
            let g = e.algebra().element(grams[y][z].clone()).expect("blocks");
            let lhs = columns(&(&fstd * e.right_action(&g)));
            let c = lf.inner(&ts[y], &ts[z]);
            for x in 0..d {
                let rhs = lf.mul_right(&ts[x], &c);
                scale = scale.max(lhs[x].norm()).max(rhs.norm());
                let dv = &lhs[x] - rhs;
                // the coordinate norm bounds the module norm
                if dv.norm() <= best {
                    continue;
                }
                let n = blocks_norm(&lf.inner(&dv, &dv)).sqrt();
                if n > best {
                    best = n;
                    at = Some((x, y, z));
                }
            }
        }
    }
    let mut c = Check::new("ternary", best, tol * (1.0 + scale));
    if let Some((x, y, z)) = at {
        c = c.with_witness(format!("(x, y, z) = ({x}, {y}, {z})"));
    }
    c
}

/// `F_T = cls T(E)𝒞` inside the ambient of `F`.
pub fn submodule_generated(t: &ModuleMap, tol: f64) -> Result<HilbertModuleSpace> {
    let f = &t.codomain;
    let gens: Vec<ModuleElement> = (0..t.domain.dim())
        .map(|a| f.element(&t.matrix.column(a).into_owned()))
        .collect();
    HilbertModuleSpace::make_module(f.algebra(), f.ambient_rows(), &gens, tol)
}

/// Matrix of the inclusion `sub → f` of a submodule sharing `f`'s ambient.
pub fn inclusion(sub: &HilbertModuleSpace, f: &HilbertModuleSpace) -> CMat {
    f.basis().adjoint() * sub.basis()
}

/// `T` with codomain cut down to `F_T`.
pub fn corestrict(t: &ModuleMap, ft: &HilbertModuleSpace) -> ModuleMap {
    ModuleMap {
        domain: t.domain.clone(),
        codomain: ft.clone(),
        matrix: inclusion(ft, &t.codomain).adjoint() * &t.matrix,
    }
}

/// Module-valued isometry defect `max ‖⟨Vu,Vu′⟩ − ⟨u,u′⟩‖` over basis pairs.
pub fn isometry_residual(v: &ModuleMap) -> f64 {
    let ld = Layout::new(&v.domain);
    let lc = Layout::new(&v.codomain);
    let ds = columns(v.domain.to_standard());
    let vs = v.std_columns();
    let mut best = 0.0f64;
    for a in 0..v.domain.dim() {
        for b in 0..v.domain.dim() {
            best = best.max(blocks_norm(&diff(&lc.inner(&vs[a], &vs[b]), &ld.inner(&ds[a], &ds[b]))));
        }
    }
    best
}

/// `T = v(• ⊙ ζ)` with `(𝔉, ζ)` the GNS data of `τ`.
#[derive(Debug, Clone)]
pub struct Factorization {
    /// GNS data of `τ`.
    pub gns: Gns,
    /// `E ⊙ 𝔉`.
    pub tensor: TensorProduct,
    /// `v : E ⊙ 𝔉 → F`.
    pub v: ModuleMap,
    /// `F_T`.
    pub range: HilbertModuleSpace,
    /// Well-definedness, isometry, reconstruction and co-restriction residuals.
    pub checks: Vec<Check>,
}

fn require_tau_map(t: &ModuleMap, tau: &CpMap, tol: f64) -> Result<Check> {
    let c = check_tau_map(t, tau, tol)?;
    if !c.pass {
        return Err(Error::NotTauMap { residual: c.residual });
    }
    Ok(c)
}

/// Builds `v` on spanning vectors `x ⊙ ζc ↦ T(x)c` and verifies it.
pub fn factorize(t: &ModuleMap, tau: &CpMap, tol: f64) -> Result<Factorization> {
    require_tau_map(t, tau, tol)?;
    let gns = tau.gns(tol)?;
    let e = &t.domain;
    let f = &t.codomain;
    let tp = TensorProduct::new(e, &gns.correspondence, tol)?;
    let fm = gns.correspondence.module();
    let mut u_cols = Vec::new();
    let mut y_cols = Vec::new();
    for (rz, rf) in fm.right_unit_actions().iter().zip(f.right_unit_actions()) {
        let zc = rz * &gns.zeta;
        for a in 0..e.dim() {
            u_cols.push(tp.tensor(&e.unit_coords(a), &zc));
            y_cols.push(rf * t.matrix.column(a));
        }
    }
    let u = from_cols(&u_cols, tp.dim());
    let y = from_cols(&y_cols, f.dim());
    let (vm, well) = linalg::solve_right(&u, &y, 1e-10);
    let scale = 1.0 + linalg::max_abs(&y);
    let v = ModuleMap::new(tp.module(), f, vm)?;

    let iso = isometry_residual(&v);
    let mut rec = 0.0f64;
    for a in 0..e.dim() {
        let lhs = v.apply(&tp.tensor(&e.unit_coords(a), &gns.zeta));
        rec = rec.max(vmax(&(lhs - t.matrix.column(a))));
    }
    let range = submodule_generated(t, tol)?;
    let vc = inclusion(&range, f).adjoint() * &v.matrix;
    let (cores, witness) = if vc.nrows() == vc.ncols() {
        let back = linalg::max_abs(&(&vc * vc.adjoint() - CMat::identity(vc.nrows(), vc.nrows())));
        (
            linalg::isometry_defect(&vc).max(back),
            format!("dim F_T = dim E⊙𝔉 = {}", vc.nrows()),
        )
    } else {
        (
            f64::INFINITY,
            format!("dim F_T = {}, dim E⊙𝔉 = {}", vc.nrows(), vc.ncols()),
        )
    };
    let checks = alloc::vec![
        Check::new("factorization_well_defined", well, tol * scale),
        Check::new("v_isometry", iso, tol * scale),
        Check::new("v_reconstruction", rec, tol * scale),
        Check::new("v_unitary_onto_range", cores, tol * scale).with_witness(witness),
    ];
    Ok(Factorization {
        gns,
        tensor: tp,
        v,
        range,
        checks,
    })
}

fn from_cols(cols: &[CVec], rows: usize) -> CMat {
    if cols.is_empty() {
        return CMat::zeros(rows, 0);
    }
    CMat::from_columns(cols)
}

/// The canonical block-wise CP extension `[τ T*; T ϑ]` of a τ-map.
#[derive(Debug, Clone)]
pub struct CphExtensionResult {
    /// `τ`.
    pub tau: CpMap,
    /// `ϑ = v(• ⊙ id)v*` on `𝔅ᵃ(E) → 𝔅ᵃ(F_T)`.
    pub theta: CpMap,
    /// The map between linking algebras.
    pub blockmap: CpMap,
    /// `v` co-restricted to `F_T`.
    pub isometry_v: ModuleMap,
    /// GNS data of `τ`.
    pub gns: Gns,
    /// `E ⊙ 𝔉`.
    pub tensor: TensorProduct,
    /// `T` co-restricted to `F_T`.
    pub t_ft: ModuleMap,
    /// Named residuals.
    pub residuals: Vec<Check>,
}

/// Assembles `[τ T*; T ϑ]` on the linking algebras of `E` and `F_T`.
pub fn cph_extension(t: &ModuleMap, tau: &CpMap, tol: f64) -> Result<CphExtensionResult> {
    let fac = factorize(t, tau, tol)?;
    let mut residuals = fac.checks.clone();
    let e = &t.domain;
    let ft = &fac.range;
    let incl = inclusion(ft, &t.codomain);
    let vp = incl.adjoint() * fac.v.matrix();
    let t_ft = corestrict(t, ft);
    let ops_e = e.adjointable_operators();
    let ops_ft = ft.adjointable_operators();
    let tp = &fac.tensor;
    let theta = CpMap::from_fn(ops_e.algebra(), ops_ft.algebra(), |a| {
        ops_ft.from_operator(&(&vp * tp.lift_left(&ops_e.to_operator(a)) * vp.adjoint()))
    });

    let le = e.linking_algebra();
    let lf = ft.linking_algebra();
    let blockmap = assemble_blockmap(&le, &lf, tau, &t_ft, &theta);
    let scale = 1.0 + tau.apply(&e.algebra().identity()).operator_norm();

    let cert = blockmap.certificate(tol);
    residuals.push(
        Check::new(
            "blockmap_cp",
            (-cert.min_eigenvalue).max(0.0),
            tol * cert.max_eigenvalue,
        )
        .with_witness(format!("block pair ({}, {})", cert.domain_block, cert.codomain_block)),
    );
    let (mult, adj, unit) = theta.homomorphism_residuals();
    residuals.push(Check::new("theta_multiplicative", mult, tol * scale));
    residuals.push(Check::new("theta_adjoint", adj, tol * scale));
    residuals.push(Check::new("theta_unital", unit, tol * scale));
    residuals.extend(corner_checks(&le, &lf, &blockmap, tau, &t_ft, &theta, tol * scale));
    residuals.extend(check_bimodule_property(
        &blockmap,
        &Subalgebra::linking_corner22(&le),
        tol,
    )?);
    residuals.extend(check_dilation_diagram(&t_ft, tau, &theta, tol)?);
    let isometry_v = ModuleMap::new(tp.module(), ft, vp)?;
    Ok(CphExtensionResult {
        tau: tau.clone(),
        theta,
        blockmap,
        isometry_v,
        gns: fac.gns,
        tensor: fac.tensor,
        t_ft,
        residuals,
    })
}

fn std_unit(e: &HilbertModuleSpace, i: usize, r: usize, c: usize) -> CVec {
    e.to_standard().row(e.std_index(i, r, c)).adjoint()
}

/// `[τ T*; T ϑ]` on matrix units of the source linking algebra.
pub fn assemble_blockmap(
    le: &LinkingAlgebraView,
    lf: &LinkingAlgebraView,
    tau: &CpMap,
    t: &ModuleMap,
    theta: &CpMap,
) -> CpMap {
    let e = le.module();
    let b = e.algebra();
    let dom = le.algebra();
    let mut action = CMat::zeros(lf.algebra().dim(), dom.dim());
    for k in 0..dom.dim() {
        let img = match le.corner_of(k) {
            Corner::Base { i, p, q } => lf.embed11(&tau.apply(&b.matrix_unit(i, p, q))),
            Corner::Module { i, r, c } => lf.embed21(&t.apply(&std_unit(e, i, r, c))),
            Corner::Dual { i, r, c } => lf.embed12(&t.apply(&std_unit(e, i, r, c))),
            Corner::Operators { beta, a, b: q } => {
                let ops = le.module_operators().algebra();
                lf.embed22(&theta.apply(&ops.matrix_unit(beta, a, q)))
            }
        };
        action.set_column(k, &img.coords());
    }
    CpMap::new(dom, lf.algebra(), action).expect("linking algebra shapes")
}

fn corner_checks(
    le: &LinkingAlgebraView,
    lf: &LinkingAlgebraView,
    big: &CpMap,
    tau: &CpMap,
    t: &ModuleMap,
    theta: &CpMap,
    thr: f64,
) -> Vec<Check> {
    let e = le.module();
    let b = e.algebra();
    let mut r11 = 0.0f64;
    for k in 0..b.dim() {
        let u = b.basis_element(k);
        let img = big.apply(&le.embed11(&u));
        r11 = r11.max(img.distance(&lf.embed11(&lf.corner11(&img))));
        r11 = r11.max(lf.corner11(&img).distance(&tau.apply(&u)));
    }
    let (mut r21, mut r12) = (0.0f64, 0.0f64);
    for a in 0..e.dim() {
        let x = e.unit_coords(a);
        let tx = t.apply(&x);
        let img = big.apply(&le.embed21(&x));
        r21 = r21.max(img.distance(&lf.embed21(&lf.corner21(&img))));
        r21 = r21.max(vmax(&(lf.corner21(&img) - &tx)));
        let img = big.apply(&le.embed12(&x));
        r12 = r12.max(img.distance(&lf.embed12(&lf.corner12(&img))));
        r12 = r12.max(vmax(&(lf.corner12(&img) - &tx)));
    }
    let ops = le.module_operators().algebra();
    let mut r22 = 0.0f64;
    for k in 0..ops.dim() {
        let u = ops.basis_element(k);
        let img = big.apply(&le.embed22(&u));
        r22 = r22.max(img.distance(&lf.embed22(&lf.corner22(&img))));
        r22 = r22.max(lf.corner22(&img).distance(&theta.apply(&u)));
    }
    alloc::vec![
        Check::new("corner11_tau", r11, thr),
        Check::new("corner21_t", r21, thr),
        Check::new("corner12_t_adjoint", r12, thr),
        Check::new("corner22_theta", r22, thr),
    ]
}

/// Left action of `𝔅ᵃ(E)` on `F_T` defined by `a·T(z)c = T(az)c`.
#[derive(Debug, Clone)]
pub struct LeftActionResult {
    /// `F_T` as a `𝔅ᵃ(E)`-`𝒞` correspondence.
    pub correspondence: Correspondence,
    /// `T` co-restricted to `F_T`.
    pub t_ft: ModuleMap,
    /// Consistency and left-linearity residuals.
    pub checks: Vec<Check>,
}

/// Solves for the action of each matrix unit of `𝔅ᵃ(E)` on spanning
/// vectors `T(z)c` and validates the resulting correspondence.
pub fn left_action_from_map(t: &ModuleMap, tol: f64) -> Result<LeftActionResult> {
    let e = &t.domain;
    let ft = submodule_generated(t, tol)?;
    let t_ft = corestrict(t, &ft);
    let ops = e.adjointable_operators();
    let right = ft.right_unit_actions();
    let mut x_cols = Vec::new();
    for r in right {
        let rt = r * &t_ft.matrix;
        x_cols.extend(columns(&rt));
    }
    let x = from_cols(&x_cols, ft.dim());
    let xp = linalg::pinv(&x, 1e-10);
    let mut left = Vec::with_capacity(ops.algebra().dim());
    let mut worst = (0.0f64, 0usize);
    let mut scale = 0.0f64;
    for (k, a) in ops.representation().iter().enumerate() {
        let ta = &t_ft.matrix * a;
        let mut y_cols = Vec::with_capacity(x_cols.len());
        for r in right {
            y_cols.extend(columns(&(r * &ta)));
        }
        let y = from_cols(&y_cols, ft.dim());
        let l = &y * &xp;
        let res = linalg::max_abs(&(&l * &x - &y));
        scale = scale.max(linalg::max_abs(&y));
        if res > worst.0 {
            worst = (res, k);
        }
        left.push(l);
    }
    let thr = tol * (1.0 + scale);
    if worst.0 > thr {
        let (beta, p, q) = ops.algebra().unit_of(worst.1);
        return Err(Error::Inconsistent {
            what: "(xy*)·T(z) = T(x⟨y,z⟩)",
            residual: worst.0,
            witness: Some(format!("operator unit ({beta}, {p}, {q})")),
        });
    }
    let correspondence = Correspondence::new(ft, ops.algebra().clone(), left, tol)?;
    let mut rng = random::seeded(LEFT_LINEARITY_SEED);
    let mut lin = 0.0f64;
    for _ in 0..4 {
        let a = random::element(&mut rng, ops.algebra());
        let xv = random::coords(&mut rng, e.dim());
        let lhs = t_ft.apply(&(ops.to_operator(&a) * &xv));
        let rhs = correspondence.left_action(&a) * t_ft.apply(&xv);
        lin = lin.max(vmax(&(lhs - rhs)) / (1.0 + a.operator_norm() * xv.norm()));
    }
    let checks = alloc::vec![
        Check::new("left_action_consistency", worst.0, thr),
        Check::new("left_linearity", lin, thr),
    ];
    Ok(LeftActionResult {
        correspondence,
        t_ft,
        checks,
    })
}

/// `‖T‖_cb = √‖τ(p_E)‖` with a column witness.
#[derive(Debug, Clone)]
pub struct CbNorm {
    /// `√‖τ(p_E)‖`, where `p_E` is the unit of the range ideal.
    pub value: f64,
    /// `‖Tⁿ(X)‖ / ‖X‖` for the witness column.
    pub witness_ratio: f64,
    /// The witness column `X ∈ Eⁿ`.
    pub witness: Vec<CVec>,
    /// `|value − witness_ratio|`.
    pub witness_gap: f64,
}

/// CB norm of a τ-map.
///
/// The witness column consists of the standard elements with `yᵢ = e_{0q}`,
/// one per active block `i` and column `q`; it has `Σ⟨x,x⟩ = p_E`, so
/// `Σ⟨Tx,Tx⟩ = τ(p_E)` attains the value.
pub fn cb_norm(t: &ModuleMap, tau: &CpMap, tol: f64) -> Result<CbNorm> {
    require_tau_map(t, tau, tol)?;
    let e = &t.domain;
    let p = e.range_ideal().unit();
    let value = tau.apply(&p).operator_norm().sqrt();
    let n = e.algebra().block_dims();
    let m = e.multiplicities();
    let mut witness = Vec::new();
    for i in 0..n.len() {
        if m[i] == 0 {
            continue;
        }
        for q in 0..n[i] {
            witness.push(std_unit(e, i, 0, q));
        }
    }
    let sum_inner = |f: &HilbertModuleSpace, xs: &[CVec]| -> f64 {
        let mut acc = f.algebra().zero_element();
        for x in xs {
            acc = &acc + &f.inner_coords(x, x);
        }
        acc.operator_norm().sqrt()
    };
    let images: Vec<CVec> = witness.iter().map(|x| t.apply(x)).collect();
    let den = sum_inner(e, &witness);
    let witness_ratio = if den > 0.0 {
        sum_inner(&t.codomain, &images) / den
    } else {
        0.0
    };
    Ok(CbNorm {
        value,
        witness_ratio,
        witness,
        witness_gap: (value - witness_ratio).abs(),
    })
}

/// `max ‖T(x)‖/‖x‖` over seeded random coordinate vectors.
pub fn plain_norm_lower_bound(t: &ModuleMap, samples: usize, seed: u64) -> f64 {
    let mut rng = random::seeded(seed);
    let mut best = 0.0f64;
    if t.domain.dim() == 0 {
        return 0.0;
    }
    for _ in 0..samples.max(1) {
        let x = random::coords(&mut rng, t.domain.dim());
        let nx = t.domain.norm_coords(&x);
        if nx > 0.0 {
            best = best.max(t.codomain.norm_coords(&t.apply(&x)) / nx);
        }
    }
    best
}

/// `T = v(• ⊙ ζ)` and `τ = ⟨ζ, •ζ⟩` with `v` a seeded random isometry of
/// `E ⊙ F_corr` into a full module with `headroom` extra rows per block.
pub fn generate_tau_map(
    e: &HilbertModuleSpace,
    f_corr: &Correspondence,
    zeta: &CVec,
    headroom: usize,
    seed: u64,
    tol: f64,
) -> Result<(ModuleMap, CpMap)> {
    let tp = TensorProduct::new(e, f_corr, tol)?;
    let rows: Vec<usize> = tp.module().multiplicities().iter().map(|m| m + headroom).collect();
    generate_into(&tp, f_corr, zeta, &rows, seed)
}

/// As [`generate_tau_map`], with explicit codomain row counts.
pub fn generate_tau_map_into(
    e: &HilbertModuleSpace,
    f_corr: &Correspondence,
    zeta: &CVec,
    rows: &[usize],
    seed: u64,
    tol: f64,
) -> Result<(ModuleMap, CpMap)> {
    let tp = TensorProduct::new(e, f_corr, tol)?;
    generate_into(&tp, f_corr, zeta, rows, seed)
}

fn generate_into(
    tp: &TensorProduct,
    f_corr: &Correspondence,
    zeta: &CVec,
    rows: &[usize],
    seed: u64,
) -> Result<(ModuleMap, CpMap)> {
    let fm = f_corr.module();
    if zeta.len() != fm.dim() {
        return Err(Error::Shape("ζ does not lie in the correspondence".into()));
    }
    let c = fm.algebra();
    let needed = tp.module().multiplicities();
    if rows.len() != needed.len() {
        return Err(Error::Shape("one row count per codomain block".into()));
    }
    for (j, (&have, &need)) in rows.iter().zip(&needed).enumerate() {
        if have < need {
            return Err(Error::EmbeddingTooSmall {
                block: j,
                needed: need,
                available: have,
            });
        }
    }
    let b = f_corr.left_algebra();
    let mut action = CMat::zeros(c.dim(), b.dim());
    for (u, l) in f_corr.left_units().iter().enumerate() {
        action.set_column(u, &fm.inner_coords(zeta, &(l * zeta)).coords());
    }
    let tau = CpMap::new(b, c, action)?;

    let f = HilbertModuleSpace::full(c, rows)?;
    let mut rng = random::seeded(seed);
    let w: Vec<CMat> = rows
        .iter()
        .zip(&needed)
        .map(|(&k, &m)| random::isometry(&mut rng, k, m))
        .collect();
    let tm = tp.module();
    let mut v = CMat::zeros(f.dim(), tm.dim());
    for k in 0..tm.dim() {
        let y = tm.std_blocks(&tm.unit_coords(k));
        let wy: Vec<CMat> = y.iter().zip(&w).map(|(yj, wj)| wj * yj).collect();
        v.set_column(k, &f.from_std_blocks(&wy));
    }
    let e = tp.left_factor();
    let mut matrix = CMat::zeros(f.dim(), e.dim());
    for a in 0..e.dim() {
        matrix.set_column(a, &(&v * tp.tensor(&e.unit_coords(a), zeta)));
    }
    Ok((ModuleMap::new(e, &f, matrix)?, tau))
}

/// Size limits for [`random_tau_map`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauMapLimits {
    /// Blocks per coefficient algebra.
    pub max_blocks: usize,
    /// Size of each block.
    pub max_n: usize,
    /// Ambient rows of `E` per block.
    pub max_rows: usize,
    /// Kraus rank of `τ` per block pair.
    pub max_rank: usize,
    /// Extra codomain rows per block.
    pub headroom: usize,
    /// Bound on `dim E` and `dim F`.
    pub max_dim: usize,
    /// Whether `E` must be full.
    pub full: bool,
}

impl Default for TauMapLimits {
    fn default() -> Self {
        TauMapLimits {
            max_blocks: 2,
            max_n: 2,
            max_rows: 2,
            max_rank: 3,
            headroom: 1,
            max_dim: 8,
            full: true,
        }
    }
}

/// Seeded τ-map `T = v(• ⊙ ζ)` for a random CP map `τ`; draws are repeated
/// from the same stream until both modules respect `max_dim`.
pub fn random_tau_map(limits: &TauMapLimits, seed: u64, tol: f64) -> Result<(ModuleMap, CpMap)> {
    const ATTEMPTS: usize = 256;
    let mut rng = random::seeded(seed);
    for _ in 0..ATTEMPTS {
        let b = random::algebra(&mut rng, limits.max_blocks, limits.max_n);
        let c = random::algebra(&mut rng, limits.max_blocks, limits.max_n);
        let e = random::module(&mut rng, &b, limits.max_rows, limits.full);
        let tau = random::cp_map(&mut rng, &b, &c, limits.max_rank);
        let iso_seed = random::next_seed(&mut rng);
        if e.dim() > limits.max_dim {
            continue;
        }
        let g = tau.gns(tol)?;
        let (t, tau) = generate_tau_map(&e, &g.correspondence, &g.zeta, limits.headroom, iso_seed, tol)?;
        if t.codomain().dim() <= limits.max_dim {
            return Ok((t, tau));
        }
    }
    Err(Error::Precondition(format!(
        "no instance within dimension {} after {ATTEMPTS} draws",
        limits.max_dim
    )))
}

/// Residuals of `⟨T(x), ϑ(a)T(x′)⟩ = τ(⟨x, ax′⟩)` over basis `x, x′` and
/// operator units `a`; when `ϑ` is unital, also of `ϑ(a)T(x) = T(ax)`.
pub fn check_dilation_diagram(t: &ModuleMap, tau: &CpMap, theta: &CpMap, tol: f64) -> Result<Vec<Check>> {
    let e = &t.domain;
    let f = &t.codomain;
    let ops_e = e.adjointable_operators();
    let ops_f = f.adjointable_operators();
    if theta.domain() != ops_e.algebra() || theta.codomain() != ops_f.algebra() {
        return Err(Error::Shape("ϑ does not act between the operator algebras".into()));
    }
    if tau.domain() != e.algebra() || tau.codomain() != f.algebra() {
        return Err(Error::Shape("τ does not act between the coefficient algebras".into()));
    }
    let images: Vec<CMat> = (0..ops_e.algebra().dim())
        .map(|k| ops_f.to_operator(&theta.apply(&ops_e.algebra().basis_element(k))))
        .collect();
    let stheta = 1.0 + images.iter().map(linalg::op_norm).fold(0.0, f64::max);
    let (mult, adj, unit) = theta.homomorphism_residuals();
    if mult > tol * stheta {
        return Err(Error::NotHomomorphism {
            what: "ϑ(ab) = ϑ(a)ϑ(b)",
            residual: mult,
        });
    }
    if adj > tol * stheta {
        return Err(Error::NotHomomorphism {
            what: "ϑ(a*) = ϑ(a)*",
            residual: adj,
        });
    }
    let lf = Layout::new(f);
    let le = Layout::new(e);
    let fs = f.to_standard();
    let es = e.to_standard();
    let ts = t.std_columns();
    let reps = ops_e.representation();
    let mut acc = MaxNorm::default();
    for (k, (a, th)) in reps.iter().zip(&images).enumerate() {
        let tha = columns(&(fs * th * &t.matrix));
        let ea = columns(&(es * a));
        let ecols = columns(es);
        for x in 0..e.dim() {
            for xp in 0..e.dim() {
                let lhs = lf.inner(&ts[x], &tha[xp]);
                let g = e.algebra().element(le.inner(&ecols[x], &ea[xp])).expect("blocks");
                acc.offer(&lhs, tau.apply(&g).blocks(), (k, x, xp, 0));
            }
        }
    }
    let mut c = Check::new("dilation_diagram", acc.best, tol * (1.0 + acc.scale));
    if let Some((k, x, xp, _)) = acc.at {
        c = c.with_witness(format!("operator unit {k}, basis pair ({x}, {xp})"));
    }
    let mut out = alloc::vec![c];
    if unit <= tol * stheta {
        let mut lin = 0.0f64;
        let mut scale = 0.0f64;
        for (a, th) in reps.iter().zip(&images) {
            let lhs = th * &t.matrix;
            let rhs = &t.matrix * a;
            scale = scale.max(linalg::max_abs(&lhs));
            lin = lin.max(linalg::max_abs(&(lhs - rhs)));
        }
        out.push(Check::new("dilation_left_linearity", lin, tol * (1.0 + scale)));
    }
    Ok(out)
}

/// A unital *-subalgebra `𝒜 ⊆ 𝒟` given by the images of its matrix units.
#[derive(Debug, Clone)]
pub struct Subalgebra {
    algebra: MatrixAlgebra,
    images: Vec<AlgebraElement>,
}

impl Subalgebra {
    /// Subalgebra with the given unit images.
    pub fn new(algebra: MatrixAlgebra, images: Vec<AlgebraElement>) -> Result<Self> {
        if images.len() != algebra.dim() {
            return Err(Error::Shape("one image per matrix unit".into()));
        }
        if images.windows(2).any(|w| w[0].algebra() != w[1].algebra()) {
            return Err(Error::Shape("images lie in different algebras".into()));
        }
        Ok(Subalgebra { algebra, images })
    }

    /// `𝒟` itself.
    pub fn whole(alg: &MatrixAlgebra) -> Self {
        Subalgebra {
            algebra: alg.clone(),
            images: (0..alg.dim()).map(|k| alg.basis_element(k)).collect(),
        }
    }

    /// `ℂ1`.
    pub fn scalars(alg: &MatrixAlgebra) -> Self {
        Subalgebra {
            algebra: MatrixAlgebra::full(1),
            images: alloc::vec![alg.identity()],
        }
    }

    /// The corner `𝔅ᵃ(E)` of a linking algebra.
    pub fn linking_corner22(view: &LinkingAlgebraView) -> Self {
        let ops = view.module_operators().algebra();
        Subalgebra {
            algebra: ops.clone(),
            images: (0..ops.dim()).map(|k| view.embed22(&ops.basis_element(k))).collect(),
        }
    }

    /// The abstract algebra `𝒜`.
    pub fn algebra(&self) -> &MatrixAlgebra {
        &self.algebra
    }

    /// Image of `a ∈ 𝒜`.
    pub fn embed(&self, a: &AlgebraElement) -> AlgebraElement {
        let coords = a.coords();
        let mut acc = self.images[0].algebra().zero_element();
        for (k, img) in self.images.iter().enumerate() {
            if coords[k].norm() != 0.0 {
                acc = &acc + &img.scale(coords[k]);
            }
        }
        acc
    }

    /// `1_𝒜` inside `𝒟`.
    pub fn unit(&self) -> AlgebraElement {
        self.embed(&self.algebra.identity())
    }
}

/// Residuals of `S(ba) = S(b1_𝒜)ϑ(a)` and `S(ab) = ϑ(a)S(1_𝒜 b)`, where
/// `ϑ = S|_𝒜` must be a homomorphism.
pub fn check_bimodule_property(s: &CpMap, sub: &Subalgebra, tol: f64) -> Result<Vec<Check>> {
    let d = s.domain();
    if sub.images.first().map(|x| x.algebra()) != Some(d) {
        return Err(Error::Shape("subalgebra does not lie in the domain".into()));
    }
    let a_alg = &sub.algebra;
    let theta: Vec<AlgebraElement> = sub.images.iter().map(|x| s.apply(x)).collect();
    let scale = 1.0 + theta.iter().map(|x| x.operator_norm()).fold(0.0, f64::max);
    let mut hom = 0.0f64;
    for k in 0..a_alg.dim() {
        let (i, p, q) = a_alg.unit_of(k);
        for l in 0..a_alg.dim() {
            let (i2, p2, q2) = a_alg.unit_of(l);
            let prod = &theta[k] * &theta[l];
            let exp = if i == i2 && q == p2 {
                theta[a_alg.index(i, p, q2)].clone()
            } else {
                s.codomain().zero_element()
            };
            hom = hom.max(prod.distance(&exp));
        }
        hom = hom.max(theta[k].adjoint().distance(&theta[a_alg.index(i, q, p)]));
    }
    if hom > tol * scale {
        return Err(Error::NotHomomorphism {
            what: "restriction to the subalgebra",
            residual: hom,
        });
    }
    let one = sub.unit();
    let (mut right, mut left) = (0.0f64, 0.0f64);
    let mut norm = 0.0f64;
    for bk in 0..d.dim() {
        let b = d.basis_element(bk);
        let sb1 = s.apply(&(&b * &one));
        let s1b = s.apply(&(&one * &b));
        norm = norm.max(sb1.operator_norm()).max(s1b.operator_norm());
        for (img, th) in sub.images.iter().zip(&theta) {
            right = right.max(s.apply(&(&b * img)).distance(&(&sb1 * th)));
            left = left.max(s.apply(&(img * &b)).distance(&(th * &s1b)));
        }
    }
    let thr = tol * (1.0 + norm) * scale;
    Ok(alloc::vec![
        Check::new("bimodule_right", right, thr),
        Check::new("bimodule_left", left, thr),
    ])
}

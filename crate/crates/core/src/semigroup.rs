//! Discrete-time CP-H-semigroups, the product system of their CP-semigroup
//! and left dilations.
//!
//! Time runs over `0..=t_max` with `T_t = T₁ᵗ` and `τ_t = τᵗ`. The fibers are
//! `E_t = 𝔉^{⊙t}` for the GNS correspondence `(𝔉, ζ)` of `τ`, realized as
//! `E_t = E_{t−1} ⊙ 𝔉` with unit `ξ_t = ξ_{t−1} ⊙ ζ`; the product
//! `E_s ⊙ E_t → E_{s+t}` is `x ⊙ (y′ ⊙ f) ↦ (x·y′) ⊙ f`.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

// f64 math in no_std
#[allow(unused_imports)]
use nalgebra::ComplexField as _;

use crate::correspondence::{Correspondence, TensorProduct};
use crate::cpmap::CpMap;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::modmap::{check_dilation_diagram, check_quaternary, check_tau_map, left_action_from_map, ModuleMap};
use crate::module::HilbertModuleSpace;
use crate::random;
use crate::report::Check;

const CHECK_SEED: u64 = 0x5e61;

fn from_cols(cols: &[CVec], rows: usize) -> CMat {
    if cols.is_empty() {
        return CMat::zeros(rows, 0);
    }
    CMat::from_columns(cols)
}

fn vmax(v: &CVec) -> f64 {
    v.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn tagged(mut c: Check, t: usize) -> Check {
    c.name = format!("{}_t{t}", c.name);
    c
}

/// The product system `(E_t, ξ_t)` of a CP map `τ : ℬ → ℬ`, up to `t_max`.
#[derive(Debug, Clone)]
pub struct DiscreteProductSystem {
    tau: CpMap,
    generator: Correspondence,
    zeta: CVec,
    fibers: Vec<Correspondence>,
    steps: Vec<TensorProduct>,
    units: Vec<CVec>,
    checks: Vec<Check>,
}

impl DiscreteProductSystem {
    /// Builds the fibers and verifies unit, generation and product axioms.
    pub fn gns(tau: &CpMap, t_max: usize, tol: f64) -> Result<Self> {
        if tau.domain() != tau.codomain() {
            return Err(Error::Shape("a CP-semigroup needs τ : ℬ → ℬ".into()));
        }
        let b = tau.domain();
        let g = tau.gns(tol)?;
        let mut fibers = alloc::vec![Correspondence::identity(b)];
        let mut steps = Vec::with_capacity(t_max);
        let mut units = alloc::vec![b.identity().coords()];
        for t in 1..=t_max {
            let tp = TensorProduct::of_correspondences(&fibers[t - 1], &g.correspondence, tol)?;
            units.push(tp.tensor(&units[t - 1], &g.zeta));
            fibers.push(tp.correspondence().expect("built from correspondences").clone());
            steps.push(tp);
        }
        let mut ps = DiscreteProductSystem {
            tau: tau.clone(),
            generator: g.correspondence,
            zeta: g.zeta,
            fibers,
            steps,
            units,
            checks: g.checks,
        };
        ps.checks.extend(ps.verify(tol)?);
        Ok(ps)
    }

    /// `τ`.
    pub fn tau(&self) -> &CpMap {
        &self.tau
    }

    /// Largest time step.
    pub fn t_max(&self) -> usize {
        self.fibers.len() - 1
    }

    /// GNS correspondence `𝔉 = E₁` of `τ`, as first produced.
    pub fn generator(&self) -> &Correspondence {
        &self.generator
    }

    /// Cyclic vector `ζ ∈ 𝔉`.
    pub fn zeta(&self) -> &CVec {
        &self.zeta
    }

    /// Fiber `E_t`.
    pub fn fiber(&self, t: usize) -> &Correspondence {
        &self.fibers[t]
    }

    /// Unit vector `ξ_t ∈ E_t`.
    pub fn unit(&self, t: usize) -> &CVec {
        &self.units[t]
    }

    /// `E_{t−1} ⊙ 𝔉`, whose coordinates are those of `E_t` (`t ≥ 1`).
    pub fn step(&self, t: usize) -> &TensorProduct {
        &self.steps[t - 1]
    }

    /// Checks recorded at construction.
    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    fn check_time(&self, t: usize) -> Result<()> {
        if t > self.t_max() {
            return Err(Error::Precondition(format!(
                "time {t} exceeds t_max = {}",
                self.t_max()
            )));
        }
        Ok(())
    }

    /// Matrix of `y ↦ x·y : E_t → E_{s+t}` for `x ∈ E_s`.
    pub fn left_mult(&self, s: usize, x: &CVec, t: usize) -> Result<CMat> {
        self.check_time(s + t)?;
        let es = self.fibers[s].module();
        let cols: Vec<CVec> = es.right_unit_actions().iter().map(|r| r * x).collect();
        let mut m = from_cols(&cols, es.dim());
        for j in 1..=t {
            m = self.steps[s + j - 1].map_from(&self.steps[j - 1], &m);
        }
        Ok(m)
    }

    /// `x·y ∈ E_{s+t}`.
    pub fn mult(&self, s: usize, x: &CVec, t: usize, y: &CVec) -> Result<CVec> {
        Ok(self.left_mult(s, x, t)? * y)
    }

    /// The product `u_{s,t} : E_s ⊙ E_t → E_{s+t}` on the coordinates of the
    /// returned tensor product.
    pub fn product(&self, s: usize, t: usize, tol: f64) -> Result<(TensorProduct, CMat)> {
        self.check_time(s + t)?;
        let tp = TensorProduct::new(self.fibers[s].module(), &self.fibers[t], tol)?;
        let ds = self.fibers[s].dim();
        let dt = self.fibers[t].dim();
        let mut alg = CMat::zeros(self.fibers[s + t].dim(), ds * dt);
        for a in 0..ds {
            let l = self.left_mult(s, &self.fibers[s].module().unit_coords(a), t)?;
            for bb in 0..dt {
                alg.set_column(a * dt + bb, &l.column(bb));
            }
        }
        let u = alg * tp.section();
        Ok((tp, u))
    }

    fn verify(&self, tol: f64) -> Result<Vec<Check>> {
        let b = self.tau.domain();
        let tm = self.t_max();
        let mut out = Vec::new();

        let mut rec = 0.0f64;
        let mut tau_t = CpMap::identity(b);
        for t in 0..=tm {
            let f = &self.fibers[t];
            for u in 0..b.dim() {
                let bu = b.basis_element(u);
                let lhs = f
                    .module()
                    .inner_coords(&self.units[t], &(f.left_action(&bu) * &self.units[t]));
                rec = rec.max(lhs.distance(&tau_t.apply(&bu)));
            }
            tau_t = self.tau.compose(&tau_t)?;
        }
        out.push(Check::new(
            "unit_recovers_tau",
            rec,
            tol * (1.0 + self.tau.cp_norm(tol)?.powi(tm as i32)),
        ));

        // span{b ξ b′ ξ ⋯} exhausts every fiber
        let mut d = CMat::identity(b.dim(), b.dim());
        let gm = self.generator.module();
        for t in 1..=tm {
            let prev = self.fibers[t - 1].module();
            let mut cols = Vec::new();
            for v in d.column_iter() {
                for r in prev.right_unit_actions() {
                    let w = r * v;
                    for rc in gm.right_unit_actions() {
                        cols.push(self.steps[t - 1].tensor(&w, &(rc * &self.zeta)));
                    }
                }
            }
            d = linalg::range_basis(&from_cols(&cols, self.fibers[t].dim()), 1e-9);
            let missing = self.fibers[t].dim() - d.ncols();
            out.push(
                Check::new(&format!("fiber_generation_t{t}"), missing as f64, 0.0).with_witness(format!(
                    "span {} of dim {}",
                    d.ncols(),
                    self.fibers[t].dim()
                )),
            );
        }

        let mut rng = random::seeded(CHECK_SEED);
        let (mut unit, mut assoc, mut unitary, mut bilin) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for s in 0..=tm {
            for t in 0..=tm - s {
                let xy = self.mult(s, &self.units[s], t, &self.units[t])?;
                unit = unit.max(vmax(&(xy - &self.units[s + t])));
                let (_, u) = self.product(s, t, tol)?;
                unitary = unitary.max(if u.nrows() == u.ncols() {
                    linalg::isometry_defect(&u).max(linalg::isometry_defect(&u.adjoint()))
                } else {
                    f64::INFINITY
                });
                let x = random::coords(&mut rng, self.fibers[s].dim());
                let y = random::coords(&mut rng, self.fibers[t].dim());
                let c = random::element(&mut rng, b);
                let lhs = self.mult(s, &(self.fibers[s].left_action(&c) * &x), t, &y)?;
                let rhs = self.fibers[s + t].left_action(&c) * self.mult(s, &x, t, &y)?;
                let rx = self.fibers[t].module().right_action(&c) * &y;
                let rhs2 = self.fibers[s + t].module().right_action(&c) * self.mult(s, &x, t, &y)?;
                bilin = bilin
                    .max(vmax(&(lhs - rhs)))
                    .max(vmax(&(self.mult(s, &x, t, &rx)? - rhs2)));
                for r in 0..=tm - s - t {
                    let z = random::coords(&mut rng, self.fibers[r].dim());
                    let left = self.mult(s + t, &self.mult(s, &x, t, &y)?, r, &z)?;
                    let right = self.mult(s, &x, t + r, &self.mult(t, &y, r, &z)?)?;
                    assoc = assoc.max(vmax(&(left - right)));
                }
            }
        }
        let scale = 1.0 + self.units.iter().map(vmax).fold(0.0, f64::max);
        out.push(Check::new("unit_multiplicative", unit, tol * scale));
        out.push(Check::new("product_unitary", unitary, tol * scale));
        out.push(Check::new("product_bilinear", bilin, tol * 100.0));
        out.push(Check::new("product_associative", assoc, tol * 100.0));
        Ok(out)
    }
}

/// `T₁ : E → E` with its CP map `τ`, iterated up to `t_max`.
#[derive(Debug, Clone)]
pub struct DiscreteCphSemigroup {
    t1: ModuleMap,
    tau: CpMap,
    t_max: usize,
}

impl DiscreteCphSemigroup {
    /// Semigroup generated by `t1`; shapes only are validated here.
    pub fn new(t1: ModuleMap, tau: CpMap, t_max: usize) -> Result<Self> {
        let e = t1.domain();
        if e.dim() != t1.codomain().dim() || e.algebra() != t1.codomain().algebra() {
            return Err(Error::Shape("T₁ must be an endomorphism of E".into()));
        }
        if tau.domain() != e.algebra() || tau.codomain() != e.algebra() {
            return Err(Error::Shape("τ must act on the coefficient algebra of E".into()));
        }
        Ok(DiscreteCphSemigroup { t1, tau, t_max })
    }

    /// `E`.
    pub fn module(&self) -> &HilbertModuleSpace {
        self.t1.domain()
    }

    /// `T₁`.
    pub fn generator(&self) -> &ModuleMap {
        &self.t1
    }

    /// `τ = τ₁`.
    pub fn tau(&self) -> &CpMap {
        &self.tau
    }

    /// Largest time step.
    pub fn t_max(&self) -> usize {
        self.t_max
    }

    /// `T_t = T₁ᵗ`.
    pub fn map(&self, t: usize) -> Result<ModuleMap> {
        self.t1.iterate(t)
    }

    /// `T_0, …, T_{t_max}`.
    pub fn maps(&self) -> Result<Vec<ModuleMap>> {
        let mut out = alloc::vec![ModuleMap::identity(self.module())];
        for t in 1..=self.t_max {
            out.push(self.t1.compose(&out[t - 1])?);
        }
        Ok(out)
    }
}

/// Per `t ≥ 1`: `T_t` is a `τ_t`-map, satisfies the quaternary identity
/// and admits the left action of `𝔅ᵃ(E)` on `F_{T_t}`.
pub fn check_cph_semigroup(sg: &DiscreteCphSemigroup, tol: f64) -> Result<Vec<Check>> {
    let ts = sg.maps()?;
    let mut out = Vec::new();
    let mut tau_t = sg.tau.clone();
    for (t, tt) in ts.iter().enumerate().skip(1) {
        out.push(tagged(check_tau_map(tt, &tau_t, tol)?, t));
        out.push(tagged(check_quaternary(tt, tol), t));
        match left_action_from_map(tt, tol) {
            Ok(r) => out.extend(r.checks.into_iter().map(|c| tagged(c, t))),
            Err(e) => {
                out.push(Check::new(&format!("left_action_t{t}"), f64::INFINITY, 0.0).with_witness(e.to_string()))
            }
        }
        tau_t = sg.tau.compose(&tau_t)?;
    }
    Ok(out)
}

/// The spans `D_t = cls T₁(D_{t−1})ℬ` with `D_0 = E`.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimality {
    /// `dim D_t` for `t = 0..=t_max`.
    pub dims: Vec<usize>,
    /// First `t ≥ 1` with `D_t = E`.
    pub t0: Option<usize>,
    /// Whether some `D_t` with `1 ≤ t ≤ t_max` is all of `E`.
    pub minimal: bool,
}

/// `D_t` is spanned by nested expressions `T(⋯T(xb_n)⋯b₁)b₀`; inserting
/// the `b`s one step at a time gives the recursion used here.
pub fn minimality_check(sg: &DiscreteCphSemigroup, tol: f64) -> Minimality {
    let e = sg.module();
    let mut d = CMat::identity(e.dim(), e.dim());
    let mut dims = alloc::vec![e.dim()];
    let mut t0 = None;
    for t in 1..=sg.t_max {
        let td = sg.t1.matrix() * &d;
        let cols: Vec<CVec> = e
            .right_unit_actions()
            .iter()
            .flat_map(|r| (r * &td).column_iter().map(|c| c.into_owned()).collect::<Vec<_>>())
            .collect();
        d = linalg::range_basis(&from_cols(&cols, e.dim()), tol);
        dims.push(d.ncols());
        if t0.is_none() && d.ncols() == e.dim() {
            t0 = Some(t);
        }
    }
    Minimality {
        dims,
        t0,
        minimal: t0.is_some(),
    }
}

/// Maps `v_t : E ⊙ E_t → E`, `x ⊙ (b_tξ⋯b₁ξ) ↦ T(⋯T(xb_t)⋯b₁)`.
#[derive(Debug, Clone)]
pub struct LeftDilation {
    /// `E ⊙ E_t` for `t = 0..=t_max`.
    pub tensors: Vec<TensorProduct>,
    /// `v_t` as matrices on the coordinates of `tensors[t]`.
    pub v: Vec<CMat>,
    /// Well-definedness, isometry and reproduction residuals.
    pub checks: Vec<Check>,
}

enum Built {
    Ok(LeftDilation),
    IllDefined { t: usize, residual: f64 },
}

fn build(sg: &DiscreteCphSemigroup, ps: &DiscreteProductSystem, tol: f64) -> Result<Built> {
    let e = sg.module();
    if ps.tau.domain() != e.algebra() {
        return Err(Error::Shape("product system over a different algebra".into()));
    }
    if ps.t_max() < sg.t_max {
        return Err(Error::Precondition("product system too short".into()));
    }
    let mut tensors = Vec::with_capacity(sg.t_max + 1);
    for t in 0..=sg.t_max {
        let tp = TensorProduct::new(e, ps.fiber(t), tol)?;
        if tp.dim() > e.dim() {
            return Err(Error::DimensionObstruction {
                t,
                tensor_dim: tp.dim(),
                module_dim: e.dim(),
            });
        }
        tensors.push(tp);
    }
    let t1 = sg.t1.matrix();
    let gm = ps.generator().module();
    let de = e.dim();
    let scale = 1.0 + linalg::op_norm(t1).powi(sg.t_max as i32);
    // m[a] = M_t(e_a) : E_t → E, y ↦ v_t(e_a ⊙ y)
    let mut m: Vec<CMat> = (0..de)
        .map(|a| {
            let x = e.unit_coords(a);
            let cols: Vec<CVec> = e.right_unit_actions().iter().map(|r| r * &x).collect();
            from_cols(&cols, de)
        })
        .collect();
    let ts = sg.maps()?;
    let mut v = Vec::with_capacity(sg.t_max + 1);
    let mut checks = Vec::new();
    for t in 0..=sg.t_max {
        if t > 0 {
            // y′ ⊙ ζc ↦ T(M_{t−1}(x)y′)c on the spanning set of E_t
            let prev = ps.fiber(t - 1).dim();
            let step = ps.step(t);
            let mut z = Vec::new();
            for r in gm.right_unit_actions() {
                let zc = r * ps.zeta();
                for a in 0..prev {
                    z.push(step.tensor(&ps.fiber(t - 1).module().unit_coords(a), &zc));
                }
            }
            let z = from_cols(&z, ps.fiber(t).dim());
            let zp = linalg::pinv(&z, 1e-10);
            let mut worst = 0.0f64;
            for ma in m.iter_mut() {
                let tm = t1 * &*ma;
                let mut w = Vec::new();
                for r in e.right_unit_actions() {
                    w.extend((r * &tm).column_iter().map(|c| c.into_owned()));
                }
                let w = from_cols(&w, de);
                let next = &w * &zp;
                worst = worst.max(linalg::max_abs(&(&next * &z - &w)));
                *ma = next;
            }
            if worst > tol * scale {
                return Ok(Built::IllDefined { t, residual: worst });
            }
            checks.push(Check::new(&format!("v_spanning_consistency_t{t}"), worst, tol * scale));
        }
        let tp = &tensors[t];
        let dt = ps.fiber(t).dim();
        let mut alg = CMat::zeros(de, de * dt);
        for (a, ma) in m.iter().enumerate() {
            for b in 0..dt {
                alg.set_column(a * dt + b, &ma.column(b));
            }
        }
        let vt = &alg * tp.section();
        let quot = linalg::max_abs(&(&vt * tp.projection_matrix() - &alg));
        if quot > tol * scale {
            return Ok(Built::IllDefined { t, residual: quot });
        }
        checks.push(Check::new(&format!("v_well_defined_t{t}"), quot, tol * scale));
        checks.push(Check::new(
            &format!("v_isometric_t{t}"),
            linalg::isometry_defect(&vt),
            tol * scale,
        ));
        let mut rep = 0.0f64;
        for a in 0..de {
            let x = e.unit_coords(a);
            rep = rep.max(vmax(&(&vt * tp.tensor(&x, ps.unit(t)) - ts[t].apply(&x))));
        }
        checks.push(Check::new(&format!("v_reproduces_T_t{t}"), rep, tol * scale));
        v.push(vt);
    }
    Ok(Built::Ok(LeftDilation { tensors, v, checks }))
}

/// Builds `v_t` for `t = 0..=t_max` after ruling out `dim E ⊙ E_t > dim E`.
pub fn build_isometries(sg: &DiscreteCphSemigroup, ps: &DiscreteProductSystem, tol: f64) -> Result<LeftDilation> {
    match build(sg, ps, tol)? {
        Built::Ok(d) => Ok(d),
        Built::IllDefined { t, residual } => Err(Error::Inconsistent {
            what: "v_t(x ⊙ b_tξ⋯b₁ξ) = T(⋯T(xb_t)⋯b₁)",
            residual,
            witness: Some(format!("t = {t}")),
        }),
    }
}

/// `ϑ_t(a) = v_t(a ⊙ id)v_t*` on `𝔅ᵃ(E)`.
pub fn dilation_endomorphisms(e: &HilbertModuleSpace, dil: &LeftDilation) -> Vec<CpMap> {
    let ops = e.adjointable_operators();
    dil.tensors
        .iter()
        .zip(&dil.v)
        .map(|(tp, v)| {
            CpMap::from_fn(ops.algebra(), ops.algebra(), |a| {
                ops.from_operator(&(v * tp.lift_left(&ops.to_operator(a)) * v.adjoint()))
            })
        })
        .collect()
}

/// Unitarity of each `v_t`, the associativity `v_{s+t}(x ⊙ yz) =
/// v_t(v_s(x ⊙ y) ⊙ z)`, and the semigroup and homomorphism properties of
/// `ϑ_t`.
pub fn left_dilation_check(
    sg: &DiscreteCphSemigroup,
    ps: &DiscreteProductSystem,
    dil: &LeftDilation,
    tol: f64,
) -> Result<Vec<Check>> {
    let e = sg.module();
    let tm = sg.t_max;
    let mut out = Vec::new();
    for (t, v) in dil.v.iter().enumerate() {
        let d = if v.nrows() == v.ncols() {
            linalg::isometry_defect(v).max(linalg::isometry_defect(&v.adjoint()))
        } else {
            f64::INFINITY
        };
        out.push(
            Check::new(&format!("v_unitary_t{t}"), d, tol * 10.0).with_witness(format!(
                "dim E ⊙ E_t = {}, dim E = {}",
                v.ncols(),
                v.nrows()
            )),
        );
    }
    let mut rng = random::seeded(CHECK_SEED);
    let mut assoc = 0.0f64;
    for s in 0..=tm {
        for t in 0..=tm - s {
            let x = random::coords(&mut rng, e.dim());
            let y = random::coords(&mut rng, ps.fiber(s).dim());
            let z = random::coords(&mut rng, ps.fiber(t).dim());
            let lhs = &dil.v[s + t] * dil.tensors[s + t].tensor(&x, &ps.mult(s, &y, t, &z)?);
            let inner = &dil.v[s] * dil.tensors[s].tensor(&x, &y);
            let rhs = &dil.v[t] * dil.tensors[t].tensor(&inner, &z);
            assoc = assoc.max(vmax(&(lhs - rhs)));
        }
    }
    out.push(Check::new("v_associative", assoc, tol * 100.0));
    let thetas = dilation_endomorphisms(e, dil);
    let mut semi = 0.0f64;
    let mut hom = 0.0f64;
    for s in 0..=tm {
        let (m, a, u) = thetas[s].homomorphism_residuals();
        hom = hom.max(m).max(a).max(u);
        for t in 0..=tm - s {
            semi = semi.max(thetas[s + t].distance(&thetas[s].compose(&thetas[t])?));
        }
    }
    out.push(Check::new("theta_unital_homomorphism", hom, tol * 10.0));
    out.push(Check::new("theta_semigroup", semi, tol * 10.0));
    Ok(out)
}

/// `⟨ξ, ϑ_t(ξbξ*)ξ⟩ = τ_t(b)` for a unit vector `ξ ∈ E`; with `ts` given,
/// also whether each `T_t` fixes `ξ`.
pub fn check_weak_dilation(
    e: &HilbertModuleSpace,
    thetas: &[CpMap],
    xi: &CVec,
    tau: &CpMap,
    ts: Option<&[ModuleMap]>,
    tol: f64,
) -> Result<Vec<Check>> {
    let b = e.algebra();
    let n = e.inner_coords(xi, xi);
    let r = n.distance(&b.identity());
    if r > tol {
        return Err(Error::NotUnitVector { residual: r });
    }
    let ops = e.adjointable_operators();
    let mut out = Vec::new();
    let mut tau_t = CpMap::identity(b);
    for (t, th) in thetas.iter().enumerate() {
        let mut worst = 0.0f64;
        for u in 0..b.dim() {
            let bu = b.basis_element(u);
            // z ↦ ξb⟨ξ,z⟩
            let cols: Vec<CVec> = (0..e.dim())
                .map(|k| e.right_action(&(&bu * &e.inner_coords(xi, &e.unit_coords(k)))) * xi)
                .collect();
            let op = ops.to_operator(&th.apply(&ops.from_operator(&from_cols(&cols, e.dim()))));
            let lhs = e.inner_coords(xi, &(op * xi));
            worst = worst.max(lhs.distance(&tau_t.apply(&bu)));
        }
        out.push(Check::new(&format!("weak_dilation_t{t}"), worst, tol * 10.0));
        tau_t = tau.compose(&tau_t)?;
    }
    if let Some(ts) = ts {
        for (t, tt) in ts.iter().enumerate() {
            out.push(Check::new(
                &format!("fixes_xi_t{t}"),
                vmax(&(tt.apply(xi) - xi)),
                tol * 10.0,
            ));
        }
    }
    Ok(out)
}

/// The dilation diagram of `(T_t, τ_t, ϑ_t)` for every `t`.
pub fn check_cph_dilation_sg(ts: &[ModuleMap], tau: &CpMap, thetas: &[CpMap], tol: f64) -> Result<Vec<Check>> {
    if ts.len() != thetas.len() {
        return Err(Error::Shape("one ϑ_t per T_t is required".into()));
    }
    let mut out = Vec::new();
    let mut tau_t = CpMap::identity(tau.domain());
    for (t, (tt, th)) in ts.iter().zip(thetas).enumerate() {
        out.extend(
            check_dilation_diagram(tt, &tau_t, th, tol)?
                .into_iter()
                .map(|c| tagged(c, t)),
        );
        tau_t = tau.compose(&tau_t)?;
    }
    Ok(out)
}

/// Left cocycle `u_t` with `u_t T_t = T′_t`.
#[derive(Debug, Clone)]
pub struct Cocycle {
    /// `u_t` for `t = 0..=t_max`, as operators on `E`.
    pub u: Vec<CMat>,
    /// Intertwining, unitarity and cocycle residuals.
    pub checks: Vec<Check>,
}

/// Solves `u_t T_t(x) = T′_t(x)` on the nested spanning expressions, which
/// is `u_t = v′_t v_t*` with both dilations built over the product system
/// of `a`; then verifies `u_{s+t} = u_s ϑ_s(u_t)`.
pub fn cocycle_compare(
    a: &DiscreteCphSemigroup,
    b: &DiscreteCphSemigroup,
    ps: &DiscreteProductSystem,
    tol: f64,
) -> Result<Cocycle> {
    let e = a.module();
    if b.module().dim() != e.dim() || b.module().algebra() != e.algebra() || a.t_max != b.t_max {
        return Err(Error::Shape("semigroups on different modules or horizons".into()));
    }
    let da = build_isometries(a, ps, tol)?;
    let db = match build(b, ps, tol)? {
        Built::Ok(d) => d,
        Built::IllDefined { t, residual } => return Err(Error::NoSolution { t, residual }),
    };
    for (t, v) in da.v.iter().enumerate() {
        if v.nrows() != v.ncols() || linalg::isometry_defect(&v.adjoint()) > tol * 10.0 {
            return Err(Error::Precondition(format!(
                "v_{t} of the reference semigroup is not unitary"
            )));
        }
    }
    let u: Vec<CMat> = da.v.iter().zip(&db.v).map(|(va, vb)| vb * va.adjoint()).collect();
    let ta = a.maps()?;
    let tb = b.maps()?;
    let mut checks = Vec::new();
    for t in 0..=a.t_max {
        let inter = linalg::max_abs(&(&u[t] * ta[t].matrix() - tb[t].matrix()));
        checks.push(Check::new(&format!("cocycle_intertwines_t{t}"), inter, tol * 10.0));
        let un = linalg::isometry_defect(&u[t]).max(linalg::isometry_defect(&u[t].adjoint()));
        checks.push(Check::new(&format!("cocycle_unitary_t{t}"), un, tol * 10.0));
    }
    let mut coc = 0.0f64;
    let mut at = (0, 0);
    for s in 0..=a.t_max {
        for t in 0..=a.t_max - s {
            let th = &da.v[s] * da.tensors[s].lift_left(&u[t]) * da.v[s].adjoint();
            let r = linalg::max_abs(&(&u[s + t] - &u[s] * th));
            if r > coc {
                coc = r;
                at = (s, t);
            }
        }
    }
    checks.push(Check::new("cocycle_identity", coc, tol * 10.0).with_witness(format!("(s, t) = ({}, {})", at.0, at.1)));
    Ok(Cocycle { u, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::MatrixAlgebra;
    use crate::report::all_pass;
    use alloc::vec;
    use proptest::prelude::*;

    fn left_mult_map(e: &HilbertModuleSpace, u: &CMat) -> ModuleMap {
        // x ↦ ux on E = ℬ = M_n, in matrix-unit coordinates
        let alg = e.algebra();
        let ue = alg.element(vec![u.clone()]).unwrap();
        let m = crate::correspondence::left_multiplication(alg, &ue);
        ModuleMap::new(e, e, m).unwrap()
    }

    fn unitary_sg(seed: u64, n: usize, t_max: usize) -> (DiscreteCphSemigroup, CMat) {
        let b = MatrixAlgebra::full(n);
        let e = HilbertModuleSpace::algebra_module(&b);
        let u = random::unitary(&mut random::seeded(seed), n);
        let sg = DiscreteCphSemigroup::new(left_mult_map(&e, &u), CpMap::identity(&b), t_max).unwrap();
        (sg, u)
    }

    #[test]
    fn product_system_axioms_hold() {
        let mut rng = random::seeded(40);
        let b = MatrixAlgebra::new(vec![2, 1]).unwrap();
        let tau = random::cp_map(&mut rng, &b, &b, 2);
        let ps = DiscreteProductSystem::gns(&tau, 3, 1e-9).unwrap();
        assert!(all_pass(ps.checks()), "{:#?}", ps.checks());
        assert_eq!(ps.fiber(1).dim(), ps.generator().dim());
    }

    #[test]
    fn identity_product_system_is_trivial() {
        let b = MatrixAlgebra::full(2);
        let ps = DiscreteProductSystem::gns(&CpMap::identity(&b), 3, 1e-10).unwrap();
        for t in 0..=3 {
            assert_eq!(ps.fiber(t).dim(), 4);
        }
        assert!(all_pass(ps.checks()));
    }

    #[test]
    fn unitary_semigroup_dilates_and_is_minimal() {
        let (sg, _) = unitary_sg(41, 2, 3);
        assert!(all_pass(&check_cph_semigroup(&sg, 1e-9).unwrap()));
        let m = minimality_check(&sg, 1e-9);
        assert_eq!(m.t0, Some(1));
        assert_eq!(m.dims, vec![4, 4, 4, 4]);
        let ps = DiscreteProductSystem::gns(sg.tau(), 3, 1e-10).unwrap();
        let dil = build_isometries(&sg, &ps, 1e-9).unwrap();
        assert!(all_pass(&dil.checks), "{:#?}", dil.checks);
        let lc = left_dilation_check(&sg, &ps, &dil, 1e-9).unwrap();
        assert!(all_pass(&lc), "{lc:#?}");
        let thetas = dilation_endomorphisms(sg.module(), &dil);
        let ts = sg.maps().unwrap();
        let dc = check_cph_dilation_sg(&ts, sg.tau(), &thetas, 1e-9).unwrap();
        assert!(all_pass(&dc), "{dc:#?}");
    }

    #[test]
    fn identity_semigroup_weakly_dilates_its_tau() {
        let b = MatrixAlgebra::full(2);
        let e = HilbertModuleSpace::algebra_module(&b);
        let sg = DiscreteCphSemigroup::new(ModuleMap::identity(&e), CpMap::identity(&b), 2).unwrap();
        let ps = DiscreteProductSystem::gns(sg.tau(), 2, 1e-10).unwrap();
        let dil = build_isometries(&sg, &ps, 1e-10).unwrap();
        let thetas = dilation_endomorphisms(&e, &dil);
        let xi = b.identity().coords();
        let ts = sg.maps().unwrap();
        let c = check_weak_dilation(&e, &thetas, &xi, sg.tau(), Some(&ts), 1e-9).unwrap();
        assert!(all_pass(&c), "{c:#?}");
        let not_unit = xi.clone() * crate::linalg::re(2.0);
        assert!(matches!(
            check_weak_dilation(&e, &thetas, &not_unit, sg.tau(), None, 1e-9),
            Err(Error::NotUnitVector { .. })
        ));
    }

    #[test]
    fn trace_tau_hits_dimension_obstruction() {
        let n = 2;
        let b = MatrixAlgebra::full(n);
        let e = HilbertModuleSpace::algebra_module(&b);
        let tau = CpMap::from_fn(&b, &b, |x| {
            b.identity().scale(x.trace() * crate::linalg::re(1.0 / n as f64))
        });
        let sg = DiscreteCphSemigroup::new(ModuleMap::identity(&e), tau.clone(), 1).unwrap();
        let ps = DiscreteProductSystem::gns(&tau, 1, 1e-10).unwrap();
        match build_isometries(&sg, &ps, 1e-9) {
            Err(Error::DimensionObstruction {
                t,
                tensor_dim,
                module_dim,
            }) => {
                assert_eq!(t, 1);
                assert!(tensor_dim > module_dim);
            }
            other => panic!("expected obstruction, got {other:?}"),
        }
    }

    #[test]
    fn cocycle_between_unitary_semigroups() {
        let (a, u) = unitary_sg(42, 2, 3);
        let w = random::unitary(&mut random::seeded(43), 2);
        let b = DiscreteCphSemigroup::new(left_mult_map(a.module(), &(&w * &u)), a.tau().clone(), 3).unwrap();
        let ps = DiscreteProductSystem::gns(a.tau(), 3, 1e-10).unwrap();
        let c = cocycle_compare(&a, &b, &ps, 1e-9).unwrap();
        assert!(all_pass(&c.checks), "{:#?}", c.checks);
        // u₁ is left multiplication by w
        assert!(linalg::max_abs(&(&c.u[1] - left_mult_map(a.module(), &w).matrix())) < 1e-9);
    }

    #[test]
    fn mismatched_tau_has_no_cocycle() {
        let (a, u) = unitary_sg(44, 2, 2);
        let b_alg = a.module().algebra().clone();
        let v = random::unitary(&mut random::seeded(45), 2);
        let ve = b_alg.element(vec![v]).unwrap();
        // T′(x) = u x v is a conj(v)-map, not an id-map
        let m = left_mult_map(a.module(), &u).matrix() * a.module().right_action(&ve);
        let tb = ModuleMap::new(a.module(), a.module(), m).unwrap();
        let b = DiscreteCphSemigroup::new(tb, CpMap::conjugation(&ve), 2).unwrap();
        let ps = DiscreteProductSystem::gns(a.tau(), 2, 1e-10).unwrap();
        assert!(matches!(
            cocycle_compare(&a, &b, &ps, 1e-9),
            Err(Error::NoSolution { .. })
        ));
    }

    #[test]
    fn non_minimal_semigroup_is_detected() {
        let b = MatrixAlgebra::full(2);
        let e = HilbertModuleSpace::full(&b, &[2]).unwrap();
        // T = projection onto the first row: D_t is a proper submodule
        let p = CMat::from_fn(2, 2, |i, j| {
            if i == 0 && j == 0 {
                crate::linalg::re(1.0)
            } else {
                crate::linalg::re(0.0)
            }
        });
        let t = ModuleMap::left_multiplication(&e, &e, &[p], 1e-10).unwrap();
        let sg = DiscreteCphSemigroup::new(t, CpMap::identity(&b), 3).unwrap();
        let m = minimality_check(&sg, 1e-9);
        assert!(!m.minimal);
        assert_eq!(m.dims, vec![4, 2, 2, 2]);
    }

    #[test]
    fn twisted_semigroup_is_cph() {
        let mut rng = random::seeded(46);
        let b = MatrixAlgebra::full(2);
        let e = HilbertModuleSpace::algebra_module(&b);
        let u = random::unitary_element(&mut rng, &b);
        // x ↦ xu is a conj(u)-map
        let t = ModuleMap::new(&e, &e, e.right_action(&u)).unwrap();
        let sg = DiscreteCphSemigroup::new(t, CpMap::conjugation(&u), 3).unwrap();
        assert!(all_pass(&check_cph_semigroup(&sg, 1e-9).unwrap()));
        let ps = DiscreteProductSystem::gns(sg.tau(), 3, 1e-10).unwrap();
        let dil = build_isometries(&sg, &ps, 1e-9).unwrap();
        assert!(all_pass(&dil.checks), "{:#?}", dil.checks);
        assert!(all_pass(&left_dilation_check(&sg, &ps, &dil, 1e-9).unwrap()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn products_are_unitary_and_associative(seed in 0u64..1000) {
            let mut rng = random::seeded(seed);
            let b = random::algebra(&mut rng, 2, 2);
            let tau = random::cp_map(&mut rng, &b, &b, 2);
            let ps = DiscreteProductSystem::gns(&tau, 2, 1e-9).unwrap();
            prop_assert!(all_pass(ps.checks()), "{:#?}", ps.checks());
        }

        #[test]
        fn unitary_cocycles_verify(seed in 0u64..1000) {
            let (a, u) = unitary_sg(seed, 2, 2);
            let w = random::unitary(&mut random::seeded(seed + 1), 2);
            let b = DiscreteCphSemigroup::new(left_mult_map(a.module(), &(&w * &u)), a.tau().clone(), 2).unwrap();
            let ps = DiscreteProductSystem::gns(a.tau(), 2, 1e-10).unwrap();
            let c = cocycle_compare(&a, &b, &ps, 1e-9).unwrap();
            prop_assert!(all_pass(&c.checks));
        }
    }
}

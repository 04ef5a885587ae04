//! The shipped example instances, rebuilt from library constructors.
//!
//! `cargo run -p modcp-cli --example write_instances` rewrites
//! `crates/cli/instances/`; a test keeps the files byte-identical to this.

use modcp_core::algebra::MatrixAlgebra;
use modcp_core::correspondence::left_multiplication;
use modcp_core::cpmap::CpMap;
use modcp_core::modmap::{cph_extension, ModuleMap};
use modcp_core::module::HilbertModuleSpace;
use modcp_core::random;

use crate::generate::{generate, GenKind, GenSpec};
use crate::schema::{
    cpmap_to_choi_json, cpmap_to_json, modmap_to_json, module_to_json, semigroup_to_json, InstanceFile, Kind,
    KsgnsMode, OperatorModules,
};

/// Perturbation size of the non-τ-map example.
const NOISE: f64 = 1e-2;

/// `(file stem, instance)` pairs in a fixed order.
pub fn corpus() -> Vec<(String, InstanceFile)> {
    let mut out = Vec::new();
    for n in 2..=4 {
        let t = ModuleMap::transpose(n);
        out.push((
            format!("transpose_n{n}"),
            InstanceFile::new(Kind::Modmap, &modmap_to_json(&t)),
        ));
    }

    let m2 = MatrixAlgebra::full(2);
    let e = HilbertModuleSpace::algebra_module(&m2);
    let id = ModuleMap::identity(&e);
    out.push(("identity".into(), InstanceFile::new(Kind::Modmap, &modmap_to_json(&id))));

    // identity plus noise on E = M₂, where 𝔅ᵃ(E) = M₂ makes the quaternary identity bite
    let g = random::gaussian(&mut random::seeded(13), e.dim(), e.dim());
    let noisy = ModuleMap::new(&e, &e, id.matrix() + g * modcp_core::linalg::re(NOISE)).expect("square");
    out.push((
        "non_tau_map".into(),
        InstanceFile::new(Kind::Modmap, &modmap_to_json(&noisy)),
    ));

    out.push((
        "trace_cp".into(),
        InstanceFile::new(Kind::Cpmap, &cpmap_to_json(&CpMap::trace(2))),
    ));

    let u = random::unitary_element(&mut random::seeded(11), &m2);
    let twisted = ModuleMap::new(&e, &e, e.right_action(&u)).expect("square");
    let tau = CpMap::conjugation(&u);
    out.push((
        "twisted_semigroup".into(),
        InstanceFile::new(Kind::Semigroup, &semigroup_to_json(&twisted, Some(&tau), 3)),
    ));

    let w = random::unitary_element(&mut random::seeded(12), &m2);
    let unitary = ModuleMap::new(&e, &e, left_multiplication(&m2, &w)).expect("square");
    out.push((
        "unitary_semigroup".into(),
        InstanceFile::new(
            Kind::Semigroup,
            &semigroup_to_json(&unitary, Some(&CpMap::identity(&m2)), 5),
        ),
    ));

    // every unit vector is fixed, so the weak-dilation identity applies
    out.push((
        "identity_semigroup".into(),
        InstanceFile::new(Kind::Semigroup, &semigroup_to_json(&id, Some(&CpMap::identity(&m2)), 2)),
    ));

    // τ = Tr(·)1/2 forces dim E ⊙ E₁ > dim E: no left dilation inside E
    let trace_state = CpMap::normalized_trace_state(2);
    out.push((
        "trace_obstruction_semigroup".into(),
        InstanceFile::new(Kind::Semigroup, &semigroup_to_json(&id, Some(&trace_state), 1)),
    ));

    let spec = GenSpec {
        kind: GenKind::Taumap,
        seed: 7,
        dims: vec![2, 1],
        ..GenSpec::default()
    };
    let generated = generate(&spec).expect("default limits hold");
    let taumap = generated[0].1.clone();
    let tau7 = generated[1].1.clone();
    out.push(("taumap_seed7".into(), taumap.clone()));
    out.push(("taumap_seed7_tau".into(), tau7));

    // the canonical extension of the generated τ-map, read back between linking algebras
    let t = crate::schema::modmap_from_json(&taumap.payload(Kind::Modmap).expect("modmap"), 1e-9).expect("valid");
    let tau = crate::schema::cpmap_from_json(&generated[1].1.payload(Kind::Cpmap).expect("cpmap")).expect("valid");
    let ext = cph_extension(&t, &tau, 1e-9).expect("generated maps are τ-maps");
    let mut blockmap = cpmap_to_choi_json(&ext.blockmap);
    blockmap.modules = Some(OperatorModules {
        source: module_to_json(t.domain()),
        target: module_to_json(ext.t_ft.codomain()),
        mode: KsgnsMode::Linking,
    });
    out.push(("extension_blockmap".into(), InstanceFile::new(Kind::Cpmap, &blockmap)));
    out
}

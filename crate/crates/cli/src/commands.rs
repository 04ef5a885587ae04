//! Verification pipelines behind each subcommand.
//!
//! Parsing and shape problems abort with a [`CliError`]; anything the
//! library reports about the mathematics becomes a failed check instead.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use modcp_core::cpmap::CpMap;
use modcp_core::ksgns::{block_decompose, ksgns_decompose, nondegeneracy_check};
use modcp_core::linalg;
use modcp_core::modmap::{
    cb_norm, check_quaternary, check_tau_map, check_ternary, cph_extension, factorize, induced_cp_map,
    left_action_from_map, plain_norm_lower_bound, ModuleMap,
};
use modcp_core::module::HilbertModuleSpace;
use modcp_core::semigroup::{
    build_isometries, check_cph_dilation_sg, check_cph_semigroup, check_weak_dilation, dilation_endomorphisms,
    left_dilation_check, minimality_check, DiscreteCphSemigroup, DiscreteProductSystem,
};
use modcp_core::{Check, Error};
use serde::Serialize;
use serde_json::json;

use crate::error::CliError;
use crate::report::{digest, CheckEntry, Report};
use crate::schema::{
    correspondence_to_json, cpmap_from_json, cpmap_to_choi_json, cpmap_to_json, modmap_from_json, modmap_to_json,
    module_from_json, module_to_json, read_instance, semigroup_from_json, CpMapJson, InstanceFile, Kind, KsgnsMode,
    Loaded, ModMapJson, SemigroupJson,
};

/// Instance-consuming subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Check,
    Factorize,
    Extend,
    Ksgns,
    Cbnorm,
    Semigroup,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Factorize => "factorize",
            Command::Extend => "extend",
            Command::Ksgns => "ksgns",
            Command::Cbnorm => "cbnorm",
            Command::Semigroup => "semigroup",
        }
    }

    /// Instance kind the command consumes.
    pub fn kind(self) -> Kind {
        match self {
            Command::Ksgns => Kind::Cpmap,
            Command::Semigroup => Kind::Semigroup,
            _ => Kind::Modmap,
        }
    }
}

/// Selectable checks of `modcp check`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckName {
    #[value(name = "tau_map")]
    TauMap,
    #[value(name = "quaternary")]
    Quaternary,
    #[value(name = "ternary")]
    Ternary,
    #[value(name = "left_action")]
    LeftAction,
}

/// Default selection of `modcp check`.
pub const DEFAULT_CHECKS: [CheckName; 3] = [CheckName::TauMap, CheckName::Quaternary, CheckName::LeftAction];

/// Flags shared by the instance commands.
#[derive(Debug, Clone)]
pub struct Options {
    pub tol: f64,
    pub seed: u64,
    pub tau: Option<PathBuf>,
    pub checks: Vec<CheckName>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            tol: modcp_core::DEFAULT_TOL,
            seed: 0,
            tau: None,
            checks: DEFAULT_CHECKS.to_vec(),
        }
    }
}

/// A report plus the instance files it produced, keyed by artifact name.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub artifacts: Vec<(String, InstanceFile)>,
}

#[derive(Default)]
struct Findings {
    checks: Vec<Check>,
    values: BTreeMap<String, serde_json::Value>,
    artifacts: Vec<(String, InstanceFile)>,
}

impl Findings {
    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn extend(&mut self, cs: impl IntoIterator<Item = Check>) {
        self.checks.extend(cs);
    }

    fn value(&mut self, key: &str, v: impl Serialize) {
        self.values
            .insert(key.into(), serde_json::to_value(v).expect("values serialize"));
    }

    fn artifact<T: Serialize>(&mut self, name: &str, kind: Kind, payload: &T) {
        self.artifacts.push((name.into(), InstanceFile::new(kind, payload)));
    }

    /// A library error recorded as a failed check.
    fn error(&mut self, name: &str, e: &Error) {
        self.push(Check::new(name, f64::INFINITY, 0.0).with_witness(e.to_string()));
    }
}

/// Runs `cmd` on one instance file.
pub fn run(cmd: Command, path: &Path, opts: &Options) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let loaded = read_instance(path)?;
    let tau_file = opts.tau.as_deref().map(read_instance).transpose()?;
    if tau_file.is_some() && matches!(cmd, Command::Ksgns) {
        return Err(CliError::Usage("--tau does not apply to ksgns".into()));
    }
    let mut f = Findings::default();
    match cmd {
        Command::Check | Command::Factorize | Command::Extend | Command::Cbnorm => {
            let t = modmap_from_json(&loaded.file.payload::<ModMapJson>(Kind::Modmap)?, opts.tol)?;
            f.value("domain_dim", t.domain().dim());
            f.value("codomain_dim", t.codomain().dim());
            let tau = resolve_tau(&t, tau_file.as_ref(), opts.tol, &mut f)?;
            match cmd {
                Command::Check => run_check(&t, tau.as_ref(), opts, &mut f),
                Command::Factorize => run_factorize(&t, tau.as_ref(), opts, &mut f),
                Command::Extend => run_extend(&t, tau.as_ref(), opts, &mut f),
                _ => run_cbnorm(&t, tau.as_ref(), opts, &mut f),
            }
        }
        Command::Ksgns => run_ksgns(&loaded, opts, &mut f)?,
        Command::Semigroup => run_semigroup(&loaded, tau_file.as_ref(), opts, &mut f)?,
    }
    let mut parts: Vec<&[u8]> = vec![&loaded.bytes];
    if let Some(tf) = &tau_file {
        parts.push(&tf.bytes);
    }
    let pass = f.checks.iter().all(|c| c.pass);
    let report = Report {
        command: cmd.name().into(),
        instance: path.display().to_string(),
        instance_digest: digest(&parts),
        tol: opts.tol,
        seed: opts.seed,
        checks: f.checks.into_iter().map(CheckEntry::from).collect(),
        values: f.values,
        artifacts: f.artifacts.iter().map(|(n, _)| n.clone()).collect(),
        pass,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(Outcome {
        report,
        artifacts: f.artifacts,
    })
}

fn load_cpmap(l: &Loaded) -> Result<CpMap, CliError> {
    cpmap_from_json(&l.file.payload::<CpMapJson>(Kind::Cpmap)?)
}

fn require_algebras(tau: &CpMap, e: &HilbertModuleSpace, f: &HilbertModuleSpace) -> Result<(), CliError> {
    if tau.domain() != e.algebra() || tau.codomain() != f.algebra() {
        return Err(CliError::Schema(
            "τ must act from the domain's coefficient algebra to the codomain's".into(),
        ));
    }
    Ok(())
}

/// `τ` from `--tau`, or the map induced by `T` with its consistency checks.
fn resolve_tau(t: &ModuleMap, file: Option<&Loaded>, tol: f64, f: &mut Findings) -> Result<Option<CpMap>, CliError> {
    if let Some(l) = file {
        let tau = load_cpmap(l)?;
        require_algebras(&tau, t.domain(), t.codomain())?;
        f.value("tau_source", "file");
        return Ok(Some(tau));
    }
    f.value("tau_source", "induced");
    match induced_cp_map(t, tol) {
        Ok(ind) => {
            let scale = 1.0 + linalg::op_norm(t.matrix()).powi(2);
            let consistent = Check::new("induced_tau_consistent", ind.residual, tol * scale);
            let cert = ind.tau.certificate(tol);
            let cp = Check::new(
                "induced_tau_cp",
                (-cert.min_eigenvalue).max(0.0),
                tol * cert.max_eigenvalue,
            );
            let ok = consistent.pass && cp.pass;
            f.push(consistent);
            f.push(cp);
            f.artifact("induced_tau", Kind::Cpmap, &cpmap_to_json(&ind.tau));
            Ok(ok.then_some(ind.tau))
        }
        Err(e) => {
            f.error("induced_tau", &e);
            Ok(None)
        }
    }
}

fn missing_tau(f: &mut Findings, name: &str) {
    f.push(Check::new(name, f64::INFINITY, 0.0).with_witness("no completely positive τ is available".into()));
}

fn run_check(t: &ModuleMap, tau: Option<&CpMap>, opts: &Options, f: &mut Findings) {
    let tol = opts.tol;
    for name in &opts.checks {
        match name {
            CheckName::TauMap => match tau.map(|tau| check_tau_map(t, tau, tol)) {
                Some(Ok(c)) => f.push(c),
                Some(Err(e)) => f.error("tau_map", &e),
                None => missing_tau(f, "tau_map"),
            },
            CheckName::Quaternary => f.push(check_quaternary(t, tol)),
            CheckName::Ternary => f.push(check_ternary(t, tol)),
            CheckName::LeftAction => match left_action_from_map(t, tol) {
                Ok(r) => {
                    f.value("range_dim", r.t_ft.codomain().dim());
                    f.extend(r.checks);
                }
                Err(e) => f.error("left_action", &e),
            },
        }
    }
}

fn run_factorize(t: &ModuleMap, tau: Option<&CpMap>, opts: &Options, f: &mut Findings) {
    let Some(tau) = tau else {
        return missing_tau(f, "factorize");
    };
    match factorize(t, tau, opts.tol) {
        Ok(fac) => {
            f.value("gns_dim", fac.gns.correspondence.dim());
            f.value("tensor_dim", fac.tensor.dim());
            f.value("range_dim", fac.range.dim());
            f.extend(fac.gns.checks.iter().cloned());
            f.extend(fac.checks);
            f.artifact(
                "gns",
                Kind::Correspondence,
                &correspondence_to_json(&fac.gns.correspondence, Some(&fac.gns.zeta)),
            );
            f.artifact("v", Kind::Modmap, &modmap_to_json(&fac.v));
            f.artifact("range", Kind::Module, &module_to_json(&fac.range));
        }
        Err(e) => f.error("factorize", &e),
    }
}

fn run_extend(t: &ModuleMap, tau: Option<&CpMap>, opts: &Options, f: &mut Findings) {
    let Some(tau) = tau else {
        return missing_tau(f, "extend");
    };
    match cph_extension(t, tau, opts.tol) {
        Ok(ext) => {
            let cert = ext.blockmap.certificate(opts.tol);
            f.value("blockmap_min_choi_eigenvalue", cert.min_eigenvalue);
            f.value("blockmap_max_choi_eigenvalue", cert.max_eigenvalue);
            if ext.blockmap.domain() == ext.blockmap.codomain() {
                let id = CpMap::identity(ext.blockmap.domain());
                f.value("blockmap_identity_distance", ext.blockmap.distance(&id));
            }
            f.value("range_dim", ext.t_ft.codomain().dim());
            f.extend(ext.residuals);
            f.artifact("blockmap", Kind::Cpmap, &cpmap_to_choi_json(&ext.blockmap));
            f.artifact("theta", Kind::Cpmap, &cpmap_to_json(&ext.theta));
            f.artifact("t_ft", Kind::Modmap, &modmap_to_json(&ext.t_ft));
        }
        Err(e) => f.error("extend", &e),
    }
}

/// Sample count for the plain-norm lower bound.
const PLAIN_NORM_SAMPLES: usize = 1000;

fn run_cbnorm(t: &ModuleMap, tau: Option<&CpMap>, opts: &Options, f: &mut Findings) {
    let Some(tau) = tau else {
        return missing_tau(f, "cb_norm");
    };
    match cb_norm(t, tau, opts.tol) {
        Ok(cb) => {
            let plain = plain_norm_lower_bound(t, PLAIN_NORM_SAMPLES, opts.seed);
            let scale = opts.tol * (1.0 + cb.value);
            f.value("cb_norm", cb.value);
            f.value("witness_ratio", cb.witness_ratio);
            f.value("plain_norm_lower_bound", plain);
            f.value("plain_norm_samples", PLAIN_NORM_SAMPLES);
            f.push(Check::new("cb_witness_attains", cb.witness_gap, scale));
            f.push(Check::new("plain_norm_below_cb", (plain - cb.value).max(0.0), scale));
        }
        Err(e) => f.error("cb_norm", &e),
    }
}

fn run_ksgns(l: &Loaded, opts: &Options, f: &mut Findings) -> Result<(), CliError> {
    let tol = opts.tol;
    let json = l.file.payload::<CpMapJson>(Kind::Cpmap)?;
    let s = cpmap_from_json(&json)?;
    let (e, fm, mode) = match &json.modules {
        Some(m) => (
            module_from_json(&m.source, tol)?,
            module_from_json(&m.target, tol)?,
            m.mode,
        ),
        None => (
            HilbertModuleSpace::algebra_module(s.domain()),
            HilbertModuleSpace::algebra_module(s.codomain()),
            KsgnsMode::Operators,
        ),
    };
    f.value("mode", mode);
    match mode {
        KsgnsMode::Operators => {
            if s.domain() != e.adjointable_operators().algebra() || s.codomain() != fm.adjointable_operators().algebra()
            {
                return Err(CliError::Schema(
                    "map must act between the modules' operator algebras".into(),
                ));
            }
            match nondegeneracy_check(&s, &e, &fm, tol) {
                Ok(nd) => f.value("nondegenerate", nd),
                Err(err) => f.error("nondegeneracy", &err),
            }
            match ksgns_decompose(&s, &e, &fm, tol) {
                Ok(r) => {
                    f.value("correspondence_dim", r.corr.dim());
                    f.value("reconstruction_residual", r.residual);
                    f.value("unique", r.unique);
                    f.extend(r.checks);
                    f.artifact(
                        "correspondence",
                        Kind::Correspondence,
                        &correspondence_to_json(&r.corr, None),
                    );
                    f.artifact("xi", Kind::Modmap, &modmap_to_json(&r.xi));
                }
                Err(err) => f.error("ksgns", &err),
            }
        }
        KsgnsMode::Linking => {
            if s.domain() != e.linking_algebra().algebra() || s.codomain() != fm.linking_algebra().algebra() {
                return Err(CliError::Schema(
                    "map must act between the modules' linking algebras".into(),
                ));
            }
            match block_decompose(&s, &e, &fm, tol) {
                Ok(bd) => {
                    f.value("correspondence_dim", bd.corr.dim());
                    f.value("xi2_isometry_defect", bd.xi2_isometry_defect);
                    f.extend(bd.checks);
                    f.artifact(
                        "correspondence",
                        Kind::Correspondence,
                        &correspondence_to_json(&bd.corr, Some(&bd.xi1)),
                    );
                    f.artifact("xi2", Kind::Modmap, &modmap_to_json(&bd.xi2));
                    f.artifact("tau", Kind::Cpmap, &cpmap_to_json(&bd.tau));
                    f.artifact("t", Kind::Modmap, &modmap_to_json(&bd.t));
                    f.artifact("theta", Kind::Cpmap, &cpmap_to_json(&bd.theta));
                }
                Err(err) => f.error("block_decompose", &err),
            }
        }
    }
    Ok(())
}

fn run_semigroup(l: &Loaded, tau_file: Option<&Loaded>, opts: &Options, f: &mut Findings) -> Result<(), CliError> {
    let tol = opts.tol;
    let (t1, inline_tau, t_max) = semigroup_from_json(&l.file.payload::<SemigroupJson>(Kind::Semigroup)?, tol)?;
    let e = t1.domain().clone();
    f.value("module_dim", e.dim());
    f.value("t_max", t_max);
    let tau = match (tau_file, inline_tau) {
        (Some(tf), _) => {
            let tau = load_cpmap(tf)?;
            require_algebras(&tau, &e, &e)?;
            f.value("tau_source", "file");
            Some(tau)
        }
        (None, Some(tau)) => {
            require_algebras(&tau, &e, &e)?;
            f.value("tau_source", "instance");
            Some(tau)
        }
        (None, None) => resolve_tau(&t1, None, tol, f)?,
    };
    let Some(tau) = tau else {
        missing_tau(f, "semigroup");
        return Ok(());
    };
    let sg = DiscreteCphSemigroup::new(t1, tau, t_max)?;
    match check_cph_semigroup(&sg, tol) {
        Ok(cs) => f.extend(cs),
        Err(err) => f.error("cph_semigroup", &err),
    }
    let m = minimality_check(&sg, tol);
    f.value(
        "minimality",
        json!({ "dims": m.dims, "t0": m.t0, "minimal": m.minimal }),
    );

    let ps = match DiscreteProductSystem::gns(sg.tau(), t_max, tol) {
        Ok(ps) => ps,
        Err(err) => {
            f.error("product_system", &err);
            return Ok(());
        }
    };
    f.extend(ps.checks().iter().cloned());
    f.value("fiber_dims", (0..=t_max).map(|t| ps.fiber(t).dim()).collect::<Vec<_>>());
    for t in 0..=t_max {
        f.artifact(
            &format!("fiber_t{t}"),
            Kind::Correspondence,
            &correspondence_to_json(ps.fiber(t), Some(ps.unit(t))),
        );
    }

    let dil = match build_isometries(&sg, &ps, tol) {
        Ok(d) => d,
        Err(Error::DimensionObstruction {
            t,
            tensor_dim,
            module_dim,
        }) => {
            f.value(
                "dimension_obstruction",
                json!({ "t": t, "tensor_dim": tensor_dim, "module_dim": module_dim }),
            );
            f.push(
                Check::new("left_dilation_exists", f64::INFINITY, 0.0)
                    .with_witness(format!("dim E⊙E_{t} = {tensor_dim} exceeds dim E = {module_dim}")),
            );
            return Ok(());
        }
        Err(err) => {
            f.error("left_dilation", &err);
            return Ok(());
        }
    };
    f.extend(dil.checks.iter().cloned());
    match left_dilation_check(&sg, &ps, &dil, tol) {
        Ok(cs) => f.extend(cs),
        Err(err) => f.error("left_dilation_check", &err),
    }
    let thetas = dilation_endomorphisms(&e, &dil);
    let ts = match sg.maps() {
        Ok(ts) => ts,
        Err(err) => {
            f.error("semigroup_maps", &err);
            return Ok(());
        }
    };
    match check_cph_dilation_sg(&ts, sg.tau(), &thetas, tol) {
        Ok(cs) => f.extend(cs),
        Err(err) => f.error("dilation_diagram", &err),
    }
    // the weak-dilation identity needs a unit vector with T_t(ξ) = ξ
    let fixed = e.find_unit_vector(opts.seed, tol).filter(|xi| {
        let scale = 1.0 + linalg::op_norm(sg.generator().matrix());
        (sg.generator().apply(xi) - xi).camax() <= tol * scale
    });
    match fixed {
        Some(xi) => match check_weak_dilation(&e, &thetas, &xi, sg.tau(), Some(&ts), tol) {
            Ok(cs) => f.extend(cs),
            Err(err) => f.error("weak_dilation", &err),
        },
        None => f.value("weak_dilation", "skipped: no unit vector fixed by T₁ was found"),
    }
    Ok(())
}

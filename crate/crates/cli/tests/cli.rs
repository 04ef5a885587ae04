//! The `modcp` binary and library entry points on the shipped instances.

use std::path::{Path, PathBuf};
use std::process::{Command as Proc, Output};

use modcp_cli::corpus::corpus;
use modcp_cli::report::Report;
use modcp_cli::schema::{cpmap_from_json, read_instance, validate, CpMapJson, Kind};
use modcp_cli::{instance_files, run, run_batch, CheckName, Command, Options};
use modcp_core::cpmap::CpMap;
use serde_json::Value;

fn instances() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("instances")
}

fn inst(name: &str) -> PathBuf {
    instances().join(format!("{name}.json"))
}

fn modcp(args: &[&str]) -> Output {
    Proc::new(env!("CARGO_BIN_EXE_modcp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn run_ok(cmd: Command, name: &str) -> Report {
    run(cmd, &inst(name), &Options::default()).unwrap().report
}

fn value(r: &Report, key: &str) -> f64 {
    r.values[key].as_f64().unwrap_or_else(|| panic!("{key} missing"))
}

/// Report JSON without the wall-time field.
fn stable(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_time_ms");
    v
}

#[test]
fn shipped_corpus_matches_constructors() {
    let shipped = instance_files(&instances()).unwrap();
    let built = corpus();
    assert_eq!(shipped.len(), built.len());
    for (name, file) in built {
        let on_disk = std::fs::read_to_string(inst(&name)).unwrap();
        assert_eq!(
            on_disk,
            file.to_pretty(),
            "{name} is stale; rerun the write_instances example"
        );
        validate(&file, 1e-9).unwrap();
    }
}

#[test]
fn transpose_induces_the_trace() {
    for n in 2..=4 {
        let o = run(Command::Check, &inst(&format!("transpose_n{n}")), &Options::default()).unwrap();
        assert!(o.report.pass, "{:#?}", o.report.checks);
        let (_, tau) = o.artifacts.iter().find(|(k, _)| k == "induced_tau").unwrap();
        let tau = cpmap_from_json(&tau.payload::<CpMapJson>(Kind::Cpmap).unwrap()).unwrap();
        assert!(tau.distance(&CpMap::trace(n)) <= 1e-10);
    }
}

#[test]
fn identity_checks_have_zero_residuals() {
    let r = run_ok(Command::Check, "identity");
    assert!(r.pass);
    for c in &r.checks {
        assert!(c.residual <= 1e-14, "{} = {}", c.name, c.residual);
    }
}

#[test]
fn perturbed_map_fails_quaternary_with_exit_one() {
    let o = modcp(&["check", inst("non_tau_map").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let v = report_json(&o);
    let q = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "quaternary")
        .unwrap();
    assert_eq!(q["pass"], false);
    assert!(q["residual"].as_f64().unwrap() > 1e-4);
}

#[test]
fn ternary_is_selectable_and_fails_for_transpose() {
    let opts = Options {
        checks: vec![CheckName::Ternary],
        ..Options::default()
    };
    let r = run(Command::Check, &inst("transpose_n2"), &opts).unwrap().report;
    assert!(!r.pass);
    assert!(r.checks.iter().any(|c| c.name == "ternary" && !c.pass));
}

#[test]
fn cb_norm_of_transpose_is_root_n() {
    let o = modcp(&["cbnorm", inst("transpose_n3").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = report_json(&o);
    let s3 = 3f64.sqrt();
    assert!((v["values"]["cb_norm"].as_f64().unwrap() - s3).abs() <= 1e-12);
    assert!(v["values"]["witness_ratio"].as_f64().unwrap() >= s3 - 1e-6);
    assert!((v["values"]["plain_norm_lower_bound"].as_f64().unwrap() - 1.0).abs() <= 1e-10);
}

#[test]
fn extension_of_identity_is_identity() {
    let r = run_ok(Command::Extend, "identity");
    assert!(r.pass, "{:#?}", r.checks);
    assert!(value(&r, "blockmap_identity_distance") <= 1e-12);
    assert!(value(&r, "blockmap_min_choi_eigenvalue") >= -1e-9 * value(&r, "blockmap_max_choi_eigenvalue"));
}

#[test]
fn factorize_with_explicit_tau() {
    let opts = Options {
        tau: Some(inst("taumap_seed7_tau")),
        ..Options::default()
    };
    let r = run(Command::Factorize, &inst("taumap_seed7"), &opts).unwrap().report;
    assert!(r.pass, "{:#?}", r.checks);
    assert_eq!(r.values["tau_source"], "file");
    assert_eq!(r.values["tensor_dim"], r.values["range_dim"]);
}

#[test]
fn tau_on_wrong_algebras_is_an_input_error() {
    let o = modcp(&[
        "check",
        inst("transpose_n2").to_str().unwrap(),
        "--tau",
        inst("taumap_seed7_tau").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ksgns_modes_pass() {
    let r = run_ok(Command::Ksgns, "trace_cp");
    assert!(r.pass, "{:#?}", r.checks);
    assert_eq!(r.values["mode"], "operators");
    let r = run_ok(Command::Ksgns, "extension_blockmap");
    assert!(r.pass, "{:#?}", r.checks);
    assert_eq!(r.values["mode"], "linking");
    assert!(value(&r, "xi2_isometry_defect") <= 1e-8);
}

#[test]
fn unitary_semigroup_is_minimal_and_dilates() {
    let o = modcp(&["semigroup", inst("unitary_semigroup").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = report_json(&o);
    assert_eq!(v["values"]["t_max"], 5);
    assert_eq!(v["values"]["minimality"]["minimal"], true);
    assert_eq!(v["values"]["minimality"]["t0"], 1);
    let names: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    for required in ["v_unitary_t5", "theta_semigroup", "dilation_diagram_t5"] {
        assert!(
            names.iter().any(|n| n.starts_with(required)),
            "{required} missing from {names:?}"
        );
    }
}

#[test]
fn identity_semigroup_runs_weak_dilation() {
    let r = run_ok(Command::Semigroup, "identity_semigroup");
    assert!(r.pass);
    assert!(r.checks.iter().any(|c| c.name == "weak_dilation_t2"));
    assert!(r.checks.iter().any(|c| c.name == "fixes_xi_t2"));
}

#[test]
fn twisted_semigroup_passes() {
    assert!(run_ok(Command::Semigroup, "twisted_semigroup").pass);
}

#[test]
fn trace_semigroup_reports_the_obstruction() {
    let o = modcp(&["semigroup", inst("trace_obstruction_semigroup").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let v = report_json(&o);
    assert_eq!(v["values"]["dimension_obstruction"]["t"], 1);
    assert_eq!(v["values"]["dimension_obstruction"]["tensor_dim"], 16);
    assert_eq!(v["values"]["dimension_obstruction"]["module_dim"], 4);
}

#[test]
fn reports_are_deterministic() {
    for (cmd, name) in [
        ("check", "taumap_seed7"),
        ("cbnorm", "transpose_n4"),
        ("semigroup", "twisted_semigroup"),
    ] {
        let a = report_json(&modcp(&[cmd, inst(name).to_str().unwrap(), "--seed", "3"]));
        let b = report_json(&modcp(&[cmd, inst(name).to_str().unwrap(), "--seed", "3"]));
        assert_eq!(stable(a.clone()), stable(b));
        assert_eq!(a["seed"], 3);
        assert_eq!(a["tol"], 1e-9);
    }
}

#[test]
fn tolerance_is_echoed() {
    let v = report_json(&modcp(&["check", inst("identity").to_str().unwrap(), "--tol", "1e-6"]));
    assert_eq!(v["tol"], 1e-6);
}

#[test]
fn generate_is_byte_identical_and_passes_check() {
    let a = modcp(&["generate", "--kind", "taumap", "--seed", "7", "--dims", "2,1"]);
    let b = modcp(&["generate", "--kind", "taumap", "--seed", "7", "--dims", "2,1"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.json");
    std::fs::write(&p, &a.stdout).unwrap();
    let o = modcp(&["check", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn generated_cp_maps_are_completely_positive() {
    for seed in 0..5 {
        let s = seed.to_string();
        let o = modcp(&["generate", "--kind", "cp", "--seed", &s, "--dims", "2,3", "--rank", "3"]);
        let f: modcp_cli::schema::InstanceFile = serde_json::from_slice(&o.stdout).unwrap();
        let m = cpmap_from_json(&f.payload(Kind::Cpmap).unwrap()).unwrap();
        assert!(m.is_completely_positive(1e-9));
    }
}

#[test]
fn generate_writes_every_file_to_out() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["taumap", "cp", "corr", "semigroup"] {
        let o = modcp(&[
            "generate",
            "--kind",
            kind,
            "--seed",
            "1",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{kind}");
    }
    let files = instance_files(dir.path()).unwrap();
    assert_eq!(files.len(), 5);
    for p in files {
        validate(&read_instance(&p).unwrap().file, 1e-9).unwrap();
    }
    let sg = dir.path().join("semigroup.json");
    assert_eq!(modcp(&["semigroup", sg.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn out_of_range_generation_exits_two() {
    let o = modcp(&["generate", "--kind", "semigroup", "--dims", "4,4"]);
    assert_eq!(o.status.code(), Some(2));
    let o = modcp(&["generate", "--kind", "cp", "--dims", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("bad_json", "{ not json"),
        (
            "bad_version",
            r#"{"version":"0","kind":"algebra","payload":{"blocks":[2]}}"#,
        ),
        (
            "unknown_field",
            r#"{"version":"1","kind":"modmap","payload":{},"extra":1}"#,
        ),
        (
            "ragged",
            r#"{"version":"1","kind":"modmap","payload":{"domain":{"algebra":{"blocks":[1]},"ambient_rows":[1]},"codomain":{"algebra":{"blocks":[1]},"ambient_rows":[1]},"matrix":[[]]}}"#,
        ),
    ];
    for (name, text) in cases {
        let p = dir.path().join(format!("{name}.json"));
        std::fs::write(&p, text).unwrap();
        assert_eq!(modcp(&["check", p.to_str().unwrap()]).status.code(), Some(2), "{name}");
    }
    assert_eq!(modcp(&["check", "/nonexistent/x.json"]).status.code(), Some(2));
    assert_eq!(
        modcp(&["check", inst("unitary_semigroup").to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        modcp(&["check", inst("identity").to_str().unwrap(), "--tol", "-1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn artifacts_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for (cmd, name) in [
        ("factorize", "taumap_seed7"),
        ("extend", "taumap_seed7"),
        ("ksgns", "extension_blockmap"),
        ("semigroup", "twisted_semigroup"),
    ] {
        let o = modcp(&[cmd, inst(name).to_str().unwrap(), "--out", out]);
        assert_eq!(o.status.code(), Some(0), "{cmd}");
        for a in report_json(&o)["artifacts"].as_array().unwrap() {
            let p = dir.path().join(format!("{}.json", a.as_str().unwrap()));
            validate(&read_instance(&p).unwrap().file, 1e-9).unwrap_or_else(|e| panic!("{cmd} {p:?}: {e}"));
        }
    }
    // the extension's blockmap re-enters as a CP map
    let bm = read_instance(&dir.path().join("blockmap.json")).unwrap();
    let m = cpmap_from_json(&bm.file.payload(Kind::Cpmap).unwrap()).unwrap();
    assert!(m.is_completely_positive(1e-9));
}

#[test]
fn directory_runs_match_single_runs_in_parallel() {
    let opts = Options::default();
    let paths: Vec<PathBuf> = ["transpose_n2", "identity", "taumap_seed7", "non_tau_map"]
        .iter()
        .map(|n| inst(n))
        .collect();
    let par = run_batch(Command::Check, &paths, &opts, 4);
    for (p, r) in paths.iter().zip(par) {
        let single = run(Command::Check, p, &opts).unwrap().report;
        let r = r.unwrap().report;
        assert_eq!(r.checks, single.checks);
        assert_eq!(r.instance_digest, single.instance_digest);
    }
    let o = modcp(&["check", instances().to_str().unwrap(), "--jobs", "3"]);
    // non_tau_map fails, nothing is malformed
    assert_eq!(o.status.code(), Some(1));
    let v = report_json(&o);
    assert_eq!(v["reports"].as_array().unwrap().len(), 6);
    assert!(v["errors"].as_array().unwrap().is_empty());
    assert!(!v["skipped"].as_array().unwrap().is_empty());
}

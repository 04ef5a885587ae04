//! Batch front end for `modcp-core`: JSON instances in, JSON reports out.
//!
//! Exit codes: 0 when every check passes, 1 when a mathematical check
//! fails, 2 for unreadable or ill-formed input and usage errors.

pub mod commands;
pub mod corpus;
pub mod error;
pub mod generate;
pub mod report;
pub mod schema;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub use commands::{run, CheckName, Command, Options, Outcome};
pub use error::CliError;

/// `*.json` files directly inside `dir`, sorted by name.
pub fn instance_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let io = |source| CliError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let p = entry.map_err(io)?.path();
        if p.is_file() && p.extension().is_some_and(|x| x == "json") {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// Runs `cmd` on every path with up to `jobs` worker threads; results keep
/// the order of `paths`.
pub fn run_batch(cmd: Command, paths: &[PathBuf], opts: &Options, jobs: usize) -> Vec<Result<Outcome, CliError>> {
    let slots: Vec<Mutex<Option<Result<Outcome, CliError>>>> = paths.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, paths.len().max(1)) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= paths.len() {
                    break;
                }
                let r = run(cmd, &paths[k], opts);
                *slots[k].lock().expect("no worker panics while holding a slot") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("workers joined").expect("every slot filled"))
        .collect()
}

/// Writes `<dir>/<prefix><name>.json` for each artifact and returns the paths.
pub fn write_artifacts(
    dir: &Path,
    prefix: &str,
    artifacts: &[(String, schema::InstanceFile)],
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut out = Vec::with_capacity(artifacts.len());
    for (name, file) in artifacts {
        let p = dir.join(format!("{prefix}{name}.json"));
        std::fs::write(&p, file.to_pretty()).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        })?;
        out.push(p);
    }
    Ok(out)
}

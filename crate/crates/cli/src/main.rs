use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use modcp_cli::error::{EXIT_FAIL, EXIT_INPUT, EXIT_PASS};
use modcp_cli::generate::{generate, GenKind, GenSpec};
use modcp_cli::schema::read_instance;
use modcp_cli::{instance_files, run_batch, write_artifacts, CheckName, CliError, Command, Options, Outcome};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "modcp",
    version,
    about = "Verify τ-maps, CP extensions and dilations on JSON instances"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Instance file, or a directory whose matching `*.json` files are all run.
    instance: PathBuf,
    /// CP map τ to test against, instead of the one induced by T.
    #[arg(long)]
    tau: Option<PathBuf>,
    /// Relative tolerance.
    #[arg(long, default_value_t = modcp_core::DEFAULT_TOL)]
    tol: f64,
    /// Seed for sampled quantities.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for artifact instance files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for directory runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// τ-map, quaternary, ternary and left-action checks of a module map.
    Check {
        #[command(flatten)]
        common: Common,
        /// Checks to run.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = modcp_cli::commands::DEFAULT_CHECKS)]
        checks: Vec<CheckName>,
    },
    /// GNS factorization T = v(• ⊙ ζ).
    Factorize(Common),
    /// Canonical block-wise CP extension on linking algebras.
    Extend(Common),
    /// KSGNS factorization of a CP map on operator algebras, or diagonal
    /// decomposition of one between linking algebras.
    Ksgns(Common),
    /// Completely bounded norm with witness.
    Cbnorm(Common),
    /// Discrete CP-H-semigroup: product system, left dilation, dilation diagrams.
    Semigroup(Common),
    /// Write a seeded random instance to stdout.
    Generate(GenArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: GenKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Block sizes of the coefficient algebra.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    dims: Vec<usize>,
    /// Ambient rows of the domain module (taumap); one per block.
    #[arg(long, value_delimiter = ',')]
    rows: Option<Vec<usize>>,
    /// Extra codomain rows per block (taumap).
    #[arg(long, default_value_t = 1)]
    headroom: usize,
    /// Kraus rank bound per block pair.
    #[arg(long, default_value_t = 2)]
    rank: usize,
    /// Horizon (semigroup).
    #[arg(long, default_value_t = 3)]
    t_max: usize,
    /// Directory for all generated files.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn input_error(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_INPUT)
}

fn print_json(v: &impl serde::Serialize) {
    let text = serde_json::to_string_pretty(v).expect("reports serialize");
    // a closed pipe (`| head`) is not an error worth a panic
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn run_generate(a: GenArgs) -> ExitCode {
    let spec = GenSpec {
        kind: a.kind,
        seed: a.seed,
        dims: a.dims,
        rows: a.rows,
        headroom: a.headroom,
        rank: a.rank,
        t_max: a.t_max,
    };
    let files = match generate(&spec) {
        Ok(f) => f,
        Err(e) => return input_error(&e),
    };
    if let Some(dir) = &a.out {
        if let Err(e) = write_artifacts(dir, "", &files) {
            return input_error(&e);
        }
    }
    let _ = write!(std::io::stdout().lock(), "{}", files[0].1.to_pretty());
    ExitCode::from(EXIT_PASS)
}

fn code_of(o: &Outcome) -> u8 {
    if o.report.pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn run_instances(cmd: Command, c: Common, checks: Vec<CheckName>) -> ExitCode {
    if !(c.tol.is_finite() && c.tol > 0.0) {
        return input_error(&CliError::Usage("--tol must be positive".into()));
    }
    let opts = Options {
        tol: c.tol,
        seed: c.seed,
        tau: c.tau,
        checks,
    };
    if !c.instance.is_dir() {
        let o = match modcp_cli::run(cmd, &c.instance, &opts) {
            Ok(o) => o,
            Err(e) => return input_error(&e),
        };
        if let Some(dir) = &c.out {
            if let Err(e) = write_artifacts(dir, "", &o.artifacts) {
                return input_error(&e);
            }
        }
        print_json(&o.report);
        return ExitCode::from(code_of(&o));
    }

    let paths = match instance_files(&c.instance) {
        Ok(p) => p,
        Err(e) => return input_error(&e),
    };
    // other kinds in a corpus directory are skipped, not errors
    let (mut run, mut skipped) = (Vec::new(), Vec::new());
    for p in paths {
        match read_instance(&p) {
            Ok(l) if l.file.kind != cmd.kind() => skipped.push(p.display().to_string()),
            _ => run.push(p),
        }
    }
    let results = run_batch(cmd, &run, &opts, c.jobs);
    let mut code = EXIT_PASS;
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    for (p, r) in run.iter().zip(results) {
        match r {
            Ok(o) => {
                if let Some(dir) = &c.out {
                    let stem = p
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    if let Err(e) = write_artifacts(dir, &format!("{stem}."), &o.artifacts) {
                        return input_error(&e);
                    }
                }
                code = code.max(code_of(&o));
                reports.push(o.report);
            }
            Err(e) => {
                code = EXIT_INPUT;
                errors.push(json!({ "instance": p.display().to_string(), "error": e.to_string() }));
            }
        }
    }
    print_json(&json!({ "reports": reports, "skipped": skipped, "errors": errors }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Cmd::Check { common, checks } => run_instances(Command::Check, common, checks),
        Cmd::Factorize(c) => run_instances(Command::Factorize, c, Vec::new()),
        Cmd::Extend(c) => run_instances(Command::Extend, c, Vec::new()),
        Cmd::Ksgns(c) => run_instances(Command::Ksgns, c, Vec::new()),
        Cmd::Cbnorm(c) => run_instances(Command::Cbnorm, c, Vec::new()),
        Cmd::Semigroup(c) => run_instances(Command::Semigroup, c, Vec::new()),
        Cmd::Generate(a) => run_generate(a),
    }
}

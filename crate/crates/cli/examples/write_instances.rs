//! Regenerates `crates/cli/instances/` from the library constructors.

use std::path::Path;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("instances");
    let written = modcp_cli::write_artifacts(&dir, "", &modcp_cli::corpus::corpus())?;
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

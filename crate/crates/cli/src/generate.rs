//! Seeded instance generators.

use clap::ValueEnum;
use modcp_core::algebra::MatrixAlgebra;
use modcp_core::cpmap::CpMap;
use modcp_core::modmap::{generate_tau_map, generate_tau_map_into, ModuleMap};
use modcp_core::module::HilbertModuleSpace;
use modcp_core::random;

use crate::error::CliError;
use crate::schema::{
    correspondence_to_json, cpmap_to_choi_json, cpmap_to_json, modmap_to_json, semigroup_to_json, InstanceFile, Kind,
};

/// Most blocks per algebra.
pub const MAX_BLOCKS: usize = 4;
/// Largest matrix block.
pub const MAX_BLOCK_SIZE: usize = 4;
/// Largest module dimension, for every generated module.
pub const MAX_MODULE_DIM: usize = 16;
/// Largest Kraus rank per block pair.
pub const MAX_RANK: usize = 4;
/// Longest semigroup horizon.
pub const MAX_T: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    /// `T = v(• ⊙ ζ)` from a random CP map and a random isometry.
    Taumap,
    /// A random CP map in Choi form.
    Cp,
    /// The GNS correspondence of a random CP map, with its cyclic vector.
    Corr,
    /// `T = w(• ⊙ ζ)` on `E = ℬ` for `τ = Ad u*`: a CP-H-semigroup generator.
    Semigroup,
}

/// Parameters of one generator run.
#[derive(Debug, Clone)]
pub struct GenSpec {
    pub kind: GenKind,
    pub seed: u64,
    /// Block sizes of the coefficient algebra.
    pub dims: Vec<usize>,
    /// Ambient rows of the domain module; defaults to one per block.
    pub rows: Option<Vec<usize>>,
    /// Extra codomain rows per block for `taumap`.
    pub headroom: usize,
    pub rank: usize,
    pub t_max: usize,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            kind: GenKind::Taumap,
            seed: 0,
            dims: vec![2],
            rows: None,
            headroom: 1,
            rank: 2,
            t_max: 3,
        }
    }
}

fn out_of_range(msg: String) -> CliError {
    CliError::Usage(msg)
}

fn check_module(name: &str, e: &HilbertModuleSpace) -> Result<(), CliError> {
    if e.dim() > MAX_MODULE_DIM {
        return Err(out_of_range(format!(
            "{name} has dimension {} (limit {MAX_MODULE_DIM})",
            e.dim()
        )));
    }
    Ok(())
}

fn algebra(spec: &GenSpec) -> Result<MatrixAlgebra, CliError> {
    if spec.dims.is_empty() || spec.dims.len() > MAX_BLOCKS {
        return Err(out_of_range(format!("between 1 and {MAX_BLOCKS} blocks are supported")));
    }
    if spec.dims.iter().any(|&n| n == 0 || n > MAX_BLOCK_SIZE) {
        return Err(out_of_range(format!("block sizes must lie in 1..={MAX_BLOCK_SIZE}")));
    }
    if spec.rank == 0 || spec.rank > MAX_RANK {
        return Err(out_of_range(format!("rank must lie in 1..={MAX_RANK}")));
    }
    Ok(MatrixAlgebra::new(spec.dims.clone())?)
}

/// Named instance files, the first being the primary output.
pub fn generate(spec: &GenSpec) -> Result<Vec<(String, InstanceFile)>, CliError> {
    let b = algebra(spec)?;
    let mut rng = random::seeded(spec.seed);
    let tol = modcp_core::DEFAULT_TOL;
    match spec.kind {
        GenKind::Cp => {
            let m = random::cp_map(&mut rng, &b, &b, spec.rank);
            Ok(vec![(
                "cp".into(),
                InstanceFile::new(Kind::Cpmap, &cpmap_to_choi_json(&m)),
            )])
        }
        GenKind::Corr => {
            let m = random::cp_map(&mut rng, &b, &b, spec.rank);
            let g = m.gns(tol)?;
            check_module("correspondence", g.correspondence.module())?;
            Ok(vec![(
                "corr".into(),
                InstanceFile::new(
                    Kind::Correspondence,
                    &correspondence_to_json(&g.correspondence, Some(&g.zeta)),
                ),
            )])
        }
        GenKind::Taumap => {
            let rows = spec.rows.clone().unwrap_or_else(|| vec![1; b.num_blocks()]);
            if rows.len() != b.num_blocks() {
                return Err(out_of_range("one row count per block is required".into()));
            }
            let e = HilbertModuleSpace::full(&b, &rows)?;
            check_module("domain module", &e)?;
            let tau = random::cp_map(&mut rng, &b, &b, spec.rank);
            let g = tau.gns(tol)?;
            let (t, tau) = generate_tau_map(
                &e,
                &g.correspondence,
                &g.zeta,
                spec.headroom,
                random::next_seed(&mut rng),
                tol,
            )?;
            check_module("codomain module", t.codomain())?;
            Ok(vec![
                ("taumap".into(), InstanceFile::new(Kind::Modmap, &modmap_to_json(&t))),
                ("tau".into(), InstanceFile::new(Kind::Cpmap, &cpmap_to_json(&tau))),
            ])
        }
        GenKind::Semigroup => {
            if spec.t_max == 0 || spec.t_max > MAX_T {
                return Err(out_of_range(format!("t_max must lie in 1..={MAX_T}")));
            }
            let e = HilbertModuleSpace::algebra_module(&b);
            check_module("module", &e)?;
            let tau = CpMap::conjugation(&random::unitary_element(&mut rng, &b));
            let g = tau.gns(tol)?;
            let (t, tau) = generate_tau_map_into(
                &e,
                &g.correspondence,
                &g.zeta,
                b.block_dims(),
                random::next_seed(&mut rng),
                tol,
            )?;
            let t1 = ModuleMap::new(&e, &e, t.matrix().clone())?;
            Ok(vec![(
                "semigroup".into(),
                InstanceFile::new(Kind::Semigroup, &semigroup_to_json(&t1, Some(&tau), spec.t_max)),
            )])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oversized_requests_are_usage_errors() {
        let big = GenSpec {
            dims: vec![4, 4],
            kind: GenKind::Semigroup,
            ..GenSpec::default()
        };
        assert!(matches!(generate(&big), Err(CliError::Usage(_))));
        let blocks = GenSpec {
            dims: vec![1; 5],
            ..GenSpec::default()
        };
        assert!(matches!(generate(&blocks), Err(CliError::Usage(_))));
        let size = GenSpec {
            dims: vec![5],
            ..GenSpec::default()
        };
        assert!(matches!(generate(&size), Err(CliError::Usage(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        for kind in [GenKind::Taumap, GenKind::Cp, GenKind::Corr, GenKind::Semigroup] {
            let spec = GenSpec {
                kind,
                seed: 7,
                dims: vec![2, 1],
                ..GenSpec::default()
            };
            let a = generate(&spec).unwrap();
            let b = generate(&spec).unwrap();
            assert_eq!(a[0].1.to_pretty(), b[0].1.to_pretty());
        }
    }
}

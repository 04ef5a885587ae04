//! JSON instance files and their conversion to library values.
//!
//! Complex numbers are `[re, im]` pairs and matrices are arrays of rows.
//! Module coordinates always refer to the listed orthonormal basis; an
//! omitted basis means the whole ambient in its standard order.

use std::collections::BTreeMap;
use std::path::Path;

use modcp_core::algebra::MatrixAlgebra;
use modcp_core::correspondence::Correspondence;
use modcp_core::cpmap::{ChoiBlock, CpMap, KrausBlock};
use modcp_core::linalg::{self, CMat, CVec, C64};
use modcp_core::modmap::ModuleMap;
use modcp_core::module::{HilbertModuleSpace, ModuleElement};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Current instance format version.
pub const FORMAT_VERSION: &str = "1";

/// Instance kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Algebra,
    Module,
    Cpmap,
    Modmap,
    Correspondence,
    Semigroup,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Algebra => "algebra",
            Kind::Module => "module",
            Kind::Cpmap => "cpmap",
            Kind::Modmap => "modmap",
            Kind::Correspondence => "correspondence",
            Kind::Semigroup => "semigroup",
        }
    }
}

/// Envelope shared by every instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: String,
    pub kind: Kind,
    pub payload: serde_json::Value,
}

pub type Complex = [f64; 2];
pub type Matrix = Vec<Vec<Complex>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraJson {
    pub blocks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleJson {
    pub algebra: AlgebraJson,
    pub ambient_rows: Vec<usize>,
    /// Orthonormal basis; each element lists its ambient blocks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<Matrix>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrespondenceJson {
    pub module: ModuleJson,
    pub left_algebra: AlgebraJson,
    /// Action of each matrix unit of the left algebra, keyed by basis index.
    pub left_action: BTreeMap<usize, Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cyclic_vector: Option<Vec<Complex>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiJson {
    pub domain_block: usize,
    pub codomain_block: usize,
    pub matrix: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrausJson {
    pub domain_block: usize,
    pub codomain_block: usize,
    pub operators: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "repr", content = "data", rename_all = "lowercase")]
pub enum CpRepr {
    /// `dim 𝒞 × dim ℬ`, column `k` the image of matrix unit `k`.
    Action(Matrix),
    Choi(Vec<ChoiJson>),
    Kraus(Vec<KrausJson>),
}

/// How `ksgns` reads a map: on `𝔅ᵃ(E) → 𝔅ᵃ(F)`, or between linking algebras.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KsgnsMode {
    #[default]
    Operators,
    Linking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorModules {
    pub source: ModuleJson,
    pub target: ModuleJson,
    #[serde(default)]
    pub mode: KsgnsMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpMapJson {
    pub domain: AlgebraJson,
    pub codomain: AlgebraJson,
    #[serde(flatten)]
    pub repr: CpRepr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modules: Option<OperatorModules>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModMapJson {
    pub domain: ModuleJson,
    pub codomain: ModuleJson,
    pub matrix: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemigroupJson {
    pub module: ModuleJson,
    #[serde(rename = "T1")]
    pub t1: Matrix,
    pub t_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<CpMapJson>,
}

/// A parsed instance with its raw bytes for digesting.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub bytes: Vec<u8>,
    pub file: InstanceFile,
}

pub fn read_instance(path: &Path) -> Result<Loaded, CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: InstanceFile = serde_json::from_slice(&bytes).map_err(|source| CliError::Json {
        path: path.display().to_string(),
        source,
    })?;
    if file.version != FORMAT_VERSION {
        return Err(CliError::Schema(format!(
            "{}: unsupported version {:?}, expected {FORMAT_VERSION:?}",
            path.display(),
            file.version
        )));
    }
    Ok(Loaded { bytes, file })
}

impl InstanceFile {
    pub fn new<T: Serialize>(kind: Kind, payload: &T) -> Self {
        InstanceFile {
            version: FORMAT_VERSION.into(),
            kind,
            payload: serde_json::to_value(payload).expect("payload types serialize"),
        }
    }

    /// Typed payload after checking the kind.
    pub fn payload<T: for<'de> Deserialize<'de>>(&self, kind: Kind) -> Result<T, CliError> {
        if self.kind != kind {
            return Err(CliError::Schema(format!(
                "expected a {} instance, found {}",
                kind.name(),
                self.kind.name()
            )));
        }
        serde_json::from_value(self.payload.clone())
            .map_err(|e| CliError::Schema(format!("{} payload: {e}", kind.name())))
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instances serialize");
        s.push('\n');
        s
    }
}

fn finite(z: &Complex, what: &str) -> Result<C64, CliError> {
    if !z[0].is_finite() || !z[1].is_finite() {
        return Err(CliError::Schema(format!("{what}: non-finite entry")));
    }
    Ok(C64::new(z[0], z[1]))
}

pub fn matrix_from_json(m: &Matrix, rows: usize, cols: usize, what: &str) -> Result<CMat, CliError> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        let got_cols = m.first().map_or(0, Vec::len);
        return Err(CliError::Schema(format!(
            "{what}: expected {rows}x{cols} matrix, found {}x{got_cols}",
            m.len()
        )));
    }
    let mut out = CMat::zeros(rows, cols);
    for (r, row) in m.iter().enumerate() {
        for (c, z) in row.iter().enumerate() {
            out[(r, c)] = finite(z, what)?;
        }
    }
    Ok(out)
}

pub fn matrix_to_json(m: &CMat) -> Matrix {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

pub fn vector_from_json(v: &[Complex], len: usize, what: &str) -> Result<CVec, CliError> {
    if v.len() != len {
        return Err(CliError::Schema(format!(
            "{what}: expected length {len}, found {}",
            v.len()
        )));
    }
    let entries = v.iter().map(|z| finite(z, what)).collect::<Result<Vec<_>, _>>()?;
    Ok(CVec::from_vec(entries))
}

pub fn vector_to_json(v: &CVec) -> Vec<Complex> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn algebra_from_json(a: &AlgebraJson) -> Result<MatrixAlgebra, CliError> {
    Ok(MatrixAlgebra::new(a.blocks.clone())?)
}

pub fn algebra_to_json(a: &MatrixAlgebra) -> AlgebraJson {
    AlgebraJson {
        blocks: a.block_dims().to_vec(),
    }
}

pub fn module_from_json(m: &ModuleJson, tol: f64) -> Result<HilbertModuleSpace, CliError> {
    let alg = algebra_from_json(&m.algebra)?;
    let n = alg.block_dims();
    if m.ambient_rows.len() != n.len() {
        return Err(CliError::Schema(format!(
            "module: {} ambient row counts for {} blocks",
            m.ambient_rows.len(),
            n.len()
        )));
    }
    let Some(basis) = &m.basis else {
        return Ok(HilbertModuleSpace::full(&alg, &m.ambient_rows)?);
    };
    let amb: usize = m.ambient_rows.iter().zip(n).map(|(k, n)| k * n).sum();
    let mut cols = CMat::zeros(amb, basis.len());
    for (a, elem) in basis.iter().enumerate() {
        if elem.len() != n.len() {
            return Err(CliError::Schema(format!("module basis element {a}: wrong block count")));
        }
        let mut off = 0;
        for (i, block) in elem.iter().enumerate() {
            let what = format!("module basis element {a}, block {i}");
            let b = matrix_from_json(block, m.ambient_rows[i], n[i], &what)?;
            // ambient layout is row-major within each block
            for r in 0..b.nrows() {
                for c in 0..b.ncols() {
                    cols[(off + r * n[i] + c, a)] = b[(r, c)];
                }
            }
            off += b.nrows() * n[i];
        }
    }
    Ok(HilbertModuleSpace::from_orthonormal_basis(
        &alg,
        &m.ambient_rows,
        cols,
        tol,
    )?)
}

pub fn module_to_json(e: &HilbertModuleSpace) -> ModuleJson {
    let d = e.dim();
    let standard = d == e.ambient_dim() && linalg::max_abs(&(e.basis() - CMat::identity(d, d))) == 0.0;
    let basis = (!standard).then(|| {
        (0..d)
            .map(|k| {
                e.element(&e.unit_coords(k))
                    .blocks()
                    .iter()
                    .map(matrix_to_json)
                    .collect()
            })
            .collect()
    });
    ModuleJson {
        algebra: algebra_to_json(e.algebra()),
        ambient_rows: e.ambient_rows().to_vec(),
        basis,
    }
}

/// Ambient element of a module from its JSON blocks.
pub fn element_from_json(blocks: &[Matrix], e: &HilbertModuleSpace) -> Result<ModuleElement, CliError> {
    let n = e.algebra().block_dims();
    if blocks.len() != n.len() {
        return Err(CliError::Schema("element: wrong block count".into()));
    }
    let mats = blocks
        .iter()
        .enumerate()
        .map(|(i, b)| matrix_from_json(b, e.ambient_rows()[i], n[i], "element"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ModuleElement::new(mats))
}

pub fn correspondence_from_json(c: &CorrespondenceJson, tol: f64) -> Result<(Correspondence, Option<CVec>), CliError> {
    let module = module_from_json(&c.module, tol)?;
    let left = algebra_from_json(&c.left_algebra)?;
    let d = module.dim();
    let mut ops = Vec::with_capacity(left.dim());
    for k in 0..left.dim() {
        let m = c
            .left_action
            .get(&k)
            .ok_or_else(|| CliError::Schema(format!("left_action: missing matrix unit {k}")))?;
        ops.push(matrix_from_json(m, d, d, &format!("left_action[{k}]"))?);
    }
    if let Some(&k) = c.left_action.keys().find(|&&k| k >= left.dim()) {
        return Err(CliError::Schema(format!("left_action: index {k} out of range")));
    }
    let zeta = c
        .cyclic_vector
        .as_ref()
        .map(|v| vector_from_json(v, d, "cyclic_vector"))
        .transpose()?;
    Ok((Correspondence::new(module, left, ops, tol)?, zeta))
}

pub fn correspondence_to_json(c: &Correspondence, zeta: Option<&CVec>) -> CorrespondenceJson {
    CorrespondenceJson {
        module: module_to_json(c.module()),
        left_algebra: algebra_to_json(c.left_algebra()),
        left_action: c.left_units().iter().map(matrix_to_json).enumerate().collect(),
        cyclic_vector: zeta.map(vector_to_json),
    }
}

pub fn cpmap_from_json(m: &CpMapJson) -> Result<CpMap, CliError> {
    let dom = algebra_from_json(&m.domain)?;
    let cod = algebra_from_json(&m.codomain)?;
    let (n, c) = (dom.block_dims(), cod.block_dims());
    let block_pair = |i: usize, j: usize| -> Result<(usize, usize), CliError> {
        match (n.get(i), c.get(j)) {
            (Some(&ni), Some(&cj)) => Ok((ni, cj)),
            _ => Err(CliError::Schema(format!("block pair ({i}, {j}) out of range"))),
        }
    };
    let map = match &m.repr {
        CpRepr::Action(a) => CpMap::new(&dom, &cod, matrix_from_json(a, cod.dim(), dom.dim(), "action")?)?,
        CpRepr::Choi(blocks) => {
            let mut out = Vec::with_capacity(blocks.len());
            for b in blocks {
                let (ni, cj) = block_pair(b.domain_block, b.codomain_block)?;
                out.push(ChoiBlock {
                    domain_block: b.domain_block,
                    codomain_block: b.codomain_block,
                    matrix: matrix_from_json(&b.matrix, ni * cj, ni * cj, "choi block")?,
                });
            }
            CpMap::from_choi(&dom, &cod, &out)?
        }
        CpRepr::Kraus(blocks) => {
            let mut out = Vec::with_capacity(blocks.len());
            for b in blocks {
                let (ni, cj) = block_pair(b.domain_block, b.codomain_block)?;
                let operators = b
                    .operators
                    .iter()
                    .map(|k| matrix_from_json(k, ni, cj, "kraus operator"))
                    .collect::<Result<Vec<_>, _>>()?;
                out.push(KrausBlock {
                    domain_block: b.domain_block,
                    codomain_block: b.codomain_block,
                    operators,
                });
            }
            CpMap::from_kraus(&dom, &cod, &out)?
        }
    };
    Ok(map)
}

/// Serializes with the action representation.
pub fn cpmap_to_json(m: &CpMap) -> CpMapJson {
    CpMapJson {
        domain: algebra_to_json(m.domain()),
        codomain: algebra_to_json(m.codomain()),
        repr: CpRepr::Action(matrix_to_json(m.action())),
        modules: None,
    }
}

/// Serializes with Choi blocks.
pub fn cpmap_to_choi_json(m: &CpMap) -> CpMapJson {
    let blocks = m
        .choi()
        .into_iter()
        .map(|b| ChoiJson {
            domain_block: b.domain_block,
            codomain_block: b.codomain_block,
            matrix: matrix_to_json(&b.matrix),
        })
        .collect();
    CpMapJson {
        domain: algebra_to_json(m.domain()),
        codomain: algebra_to_json(m.codomain()),
        repr: CpRepr::Choi(blocks),
        modules: None,
    }
}

pub fn modmap_from_json(m: &ModMapJson, tol: f64) -> Result<ModuleMap, CliError> {
    let e = module_from_json(&m.domain, tol)?;
    let f = module_from_json(&m.codomain, tol)?;
    let matrix = matrix_from_json(&m.matrix, f.dim(), e.dim(), "modmap matrix")?;
    Ok(ModuleMap::new(&e, &f, matrix)?)
}

pub fn modmap_to_json(t: &ModuleMap) -> ModMapJson {
    ModMapJson {
        domain: module_to_json(t.domain()),
        codomain: module_to_json(t.codomain()),
        matrix: matrix_to_json(t.matrix()),
    }
}

/// Generator `T₁`, optional `τ` and horizon of a semigroup instance.
pub fn semigroup_from_json(s: &SemigroupJson, tol: f64) -> Result<(ModuleMap, Option<CpMap>, usize), CliError> {
    let e = module_from_json(&s.module, tol)?;
    let t1 = matrix_from_json(&s.t1, e.dim(), e.dim(), "T1")?;
    let t1 = ModuleMap::new(&e, &e, t1)?;
    let tau = s.tau.as_ref().map(cpmap_from_json).transpose()?;
    Ok((t1, tau, s.t_max))
}

pub fn semigroup_to_json(t1: &ModuleMap, tau: Option<&CpMap>, t_max: usize) -> SemigroupJson {
    SemigroupJson {
        module: module_to_json(t1.domain()),
        t1: matrix_to_json(t1.matrix()),
        t_max,
        tau: tau.map(cpmap_to_json),
    }
}

/// Parses and validates an instance of any kind.
pub fn validate(file: &InstanceFile, tol: f64) -> Result<(), CliError> {
    match file.kind {
        Kind::Algebra => {
            algebra_from_json(&file.payload(Kind::Algebra)?)?;
        }
        Kind::Module => {
            module_from_json(&file.payload(Kind::Module)?, tol)?;
        }
        Kind::Cpmap => {
            let m: CpMapJson = file.payload(Kind::Cpmap)?;
            cpmap_from_json(&m)?;
            if let Some(ms) = &m.modules {
                module_from_json(&ms.source, tol)?;
                module_from_json(&ms.target, tol)?;
            }
        }
        Kind::Modmap => {
            modmap_from_json(&file.payload(Kind::Modmap)?, tol)?;
        }
        Kind::Correspondence => {
            correspondence_from_json(&file.payload(Kind::Correspondence)?, tol)?;
        }
        Kind::Semigroup => {
            semigroup_from_json(&file.payload(Kind::Semigroup)?, tol)?;
        }
    }
    Ok(())
}

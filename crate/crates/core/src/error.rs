use alloc::string::String;

/// Errors raised by constructions and checks in this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Block dimensions were empty or contained a zero.
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    /// Operands do not conform in shape or parent structure.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An ambient element lies outside the module.
    #[error("element is not in the module (residual {residual:e})")]
    NotInModule {
        /// Distance to the module's span.
        residual: f64,
    },

    /// A basis failed orthonormality or right-invariance.
    #[error("invalid module basis: {what} (residual {residual:e})")]
    InvalidModule {
        /// The violated property.
        what: &'static str,
        /// Size of the violation.
        residual: f64,
    },

    /// A Choi block has a negative eigenvalue beyond tolerance.
    #[error(
        "map is not completely positive: Choi eigenvalue {min_eigenvalue:e} in block pair \
         ({domain_block}, {codomain_block})"
    )]
    NotCompletelyPositive {
        /// Most negative Choi eigenvalue.
        min_eigenvalue: f64,
        /// Domain block of the witness.
        domain_block: usize,
        /// Codomain block of the witness.
        codomain_block: usize,
    },

    /// A left action violates a correspondence identity.
    #[error("invalid correspondence: {identity} violated (residual {residual:e})")]
    InvalidCorrespondence {
        /// The violated identity.
        identity: &'static str,
        /// Size of the violation.
        residual: f64,
    },

    /// A defining linear system has no consistent solution.
    #[error("inconsistent system for {what} (residual {residual:e}){}", witness_suffix(.witness))]
    Inconsistent {
        /// The quantity being solved for.
        what: &'static str,
        /// Least-squares residual.
        residual: f64,
        /// Worst violation, when one was located.
        witness: Option<String>,
    },

    /// `⟨T(x),T(x′)⟩ = τ(⟨x,x′⟩)` fails.
    #[error("not a tau-map (residual {residual:e})")]
    NotTauMap {
        /// Largest violation over basis pairs.
        residual: f64,
    },

    /// A map expected to be a *-homomorphism is not one.
    #[error("not a homomorphism: {what} (residual {residual:e})")]
    NotHomomorphism {
        /// The violated identity.
        what: &'static str,
        /// Size of the violation.
        residual: f64,
    },

    /// A map between linking algebras mixes corners.
    #[error("map is not block-wise: corner {corner} leaks (residual {residual:e})")]
    NotBlockwise {
        /// Source corner, as `11`, `12`, `21` or `22`.
        corner: &'static str,
        /// Size of the leaking component.
        residual: f64,
    },

    /// An isometry `E ⊙ E_t → E` cannot exist for dimension reasons.
    #[error("finite-dimension obstruction at t = {t}: dim(E ⊙ E_t) = {tensor_dim} exceeds dim E = {module_dim}")]
    DimensionObstruction {
        /// Time step.
        t: usize,
        /// Complex dimension of `E ⊙ E_t`.
        tensor_dim: usize,
        /// Complex dimension of `E`.
        module_dim: usize,
    },

    /// The requested codomain is too small to hold an isometric image.
    #[error("codomain block {block} has {available} rows, {needed} needed")]
    EmbeddingTooSmall {
        /// Codomain block index.
        block: usize,
        /// Rows required.
        needed: usize,
        /// Rows available.
        available: usize,
    },

    /// A vector expected to satisfy `⟨ξ,ξ⟩ = 1` does not.
    #[error("not a unit vector (residual {residual:e})")]
    NotUnitVector {
        /// `‖⟨ξ,ξ⟩ − 1‖`.
        residual: f64,
    },

    /// Cocycle comparison found no solution.
    #[error("no cocycle solution at t = {t} (residual {residual:e})")]
    NoSolution {
        /// Time step of the worst violation.
        t: usize,
        /// Size of the violation.
        residual: f64,
    },

    /// A documented precondition does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
}

fn witness_suffix(w: &Option<String>) -> String {
    match w {
        Some(s) => alloc::format!("; worst violation at {s}"),
        None => String::new(),
    }
}

/// Shorthand for results in this crate.
pub type Result<T> = core::result::Result<T, Error>;

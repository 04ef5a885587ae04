//! Hilbert modules over finite-dimensional C*-algebras and the completely
//! positive maps that act on them.
//!
//! Every algebra is a direct sum of full matrix blocks, every module is a
//! right-invariant subspace of block-rectangular matrices, and every claim
//! about a map is established by an explicit residual. The crate covers:
//!
//! - [`algebra`]: block algebras, norms, positivity, unitalization;
//! - [`module`]: Hilbert modules, adjointable operators, linking algebras,
//!   duals and the `|x|^α` factorization;
//! - [`correspondence`]: bimodules and their interior tensor product;
//! - [`cpmap`]: Choi and Kraus data, GNS correspondences, unitalization;
//! - [`modmap`]: τ-maps, the quaternary and ternary conditions, GNS
//!   factorization, block-wise CP extensions and CB norms;
//! - [`ksgns`]: factorizations `Ξ*(• ⊙ id)Ξ` of CP maps on operator algebras;
//! - [`semigroup`]: discrete product systems, left dilations and cocycles.
//!
//! The crate is `no_std` and needs only `alloc`.
//!
//! ```
//! use modcp_core::{algebra::MatrixAlgebra, cpmap::CpMap};
//!
//! let tr = CpMap::trace(3);
//! assert!((tr.cp_norm(1e-9).unwrap() - 3.0).abs() < 1e-12);
//! let b = MatrixAlgebra::full(2);
//! assert_eq!(b.dim(), 4);
//! ```

#![no_std]
#![warn(missing_docs)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod algebra;
pub mod correspondence;
pub mod cpmap;
mod error;
pub mod ksgns;
pub mod linalg;
pub mod modmap;
pub mod module;
pub mod random;
pub mod report;
pub mod semigroup;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
pub use report::Check;

/// Default relative tolerance for rank, membership and residual decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

//! Workbench for the storage-retrieval tradeoff in the two-message,
//! two-database private information retrieval (PIR) problem.
//!
//! The crate is organized around five building blocks:
//!
//! - [`probability`] — exact finite-alphabet joint distributions with rational
//!   masses, plus entropy, conditional entropy and mutual information.
//! - [`md_region`] — membership tests for the multiple-description rate region
//!   and its binned refinement, by explicit constraint enumeration.
//! - [`inner_bound`] — the achievable storage-retrieval schemes: the canonical
//!   auxiliary-variable family, its rate assignment, the closed-form tradeoff
//!   curve, and a verifier that re-checks a scheme against all achievability
//!   conditions.
//! - [`outer_bound`] — converse checks: the information-theoretic outer bounds,
//!   the linear-code bound, and reference quantities (capacity, MDS points).
//! - [`sim`] — concrete finite-block-length PIR codes: the Slepian-Wolf
//!   binning construction, Monte Carlo error estimation, an exact privacy
//!   audit, expurgation to zero error, and the symmetrization combinator.
//!
//! All value types are immutable after construction and safe to share across
//! threads; every operation is a pure function of its inputs.

pub mod inner_bound;
pub mod md_region;
pub mod outer_bound;
pub mod probability;
pub mod sim;
pub mod tol;

mod error;

pub use error::{Error, Result};
pub use tol::Tolerances;

//! Exact-arithmetic monads of sheaves on projective spaces `P^n` and smooth
//! quadric hypersurfaces `Q_n`.
//!
//! The crate models monads `0 -> A -> B -> C -> 0` of twisted line bundles
//! and spinor bundles, computes certified cohomology tables of their
//! cohomology sheaves through a degenerate two-row hypercohomology
//! computation, and implements decision procedures on top of those tables:
//! Horrocks/minimality checks, linear- and Steiner-bundle criteria, splitting
//! tests, and linear homological dimension with explicit resolutions.
//!
//! Everything is exact: arbitrary-precision rationals or odd prime fields,
//! no floating point anywhere. Every vanishing claim carries a certificate
//! (an elementary-term bound or a Castelnuovo-Mumford regularity witness);
//! no operation claims vanishing outside its certified window.
//!
//! Entry points:
//! - [`ring::CoordinateRing`] — graded rings `S(P^n)` and `S(Q_n)`.
//! - [`atlas::SheafAtlas`] — line bundles and spinor bundles (via Clifford
//!   matrix factorizations), their section and top-cohomology models.
//! - [`monad::Monad`] — validation, duals, twists, minimalization.
//! - [`engine`] — `hyper_dims`, certified [`engine::CohomologyTable`]s,
//!   spinor-twisted tables, graded section modules, and a Cech oracle.
//! - [`criteria`] — the decision procedures, reporting per-clause verdicts.
//! - [`resolutions`] — generator surjections, ACM-tail resolutions, `lhd`.
//!
//! The `monadforge` binary exposes the same functionality on monad files; see
//! the crate examples for library usage.

pub mod atlas;
pub mod cech;
pub mod criteria;
pub mod engine;
mod error;
pub mod field;
pub mod fixtures;
pub mod matrix;
pub mod monad;
pub mod report;
pub mod resolutions;
pub mod ring;

pub use error::{Error, Result};

//! Thermal pairwise entanglement of `n` spins-1/2 with full-range anisotropic
//! XYZ couplings in a transverse field,
//!
//! ```text
//! H = b S_z - (1/n) Σ_μ v_μ (S_μ² - n/4),   μ = x, y, z.
//! ```
//!
//! The crate offers several routes to the two-spin concurrence:
//!
//! * [`exact`]: diagonalization in total-spin sectors weighted by their
//!   multiplicities, parity-split into tridiagonal blocks.
//! * [`oracle`]: dense `2^n` brute force used as ground truth for small `n`.
//! * [`mean_field`] and [`rpa_entanglement`]: mean field + RPA closed forms,
//!   both the asymptotic O(1/n) expressions and the full ones.
//! * [`cspa`]: static path + RPA, a quadrature over static auxiliary fields.
//!
//! [`harness`] drives parameter sweeps and writes CSV/JSON tables.
//!
//! With the default `parallel` feature, sector diagonalization, temperature
//! scans, quadrature and sweeps run on rayon. Without it every map runs
//! sequentially; see [`parallel`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod concurrence;
pub mod cspa;
pub mod error;
pub mod exact;
pub mod harness;
pub mod mean_field;
pub mod oracle;
pub mod parallel;
pub mod params;
pub mod quadrature;
pub mod rpa_entanglement;
pub mod spin_algebra;
pub mod tridiag;

mod util;

pub use concurrence::{
    concurrence, formation_entanglement, ConcurrenceReport, ConcurrenceType, Correlators, PairDensity,
};
pub use error::{Error, Result};
pub use params::ModelParams;
pub use spin_algebra::TwoS;

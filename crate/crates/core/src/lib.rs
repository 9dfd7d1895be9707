//! Computational toolkit for operator-valued (M_k-valued) free probability.
//!
//! The crate is organized around four layers:
//!
//! * [`partitions`] - set partitions of `{1..m}` with the noncrossing /
//!   interval / pair classes, Kreweras-type complements, the adjacent-pair
//!   quotient map `d`, and the closedness / property-P predicates that drive
//!   the moment expansion of random band matrices.
//! * [`algebra`] - dense complex matrices over `B = M_k(C)`, completely
//!   positive maps in Kraus form with a Choi-matrix positivity check, block
//!   matrices over `B`, and the conditional expectations (normalized block
//!   trace, entrywise expectation) used by the matrix models.
//! * [`cumulants`] - multilinear moment functionals `E^(pi)`, free and
//!   Boolean cumulants, weighted step-function profiles for diagonal
//!   families, closed-form evaluators for the semicircular and Boolean
//!   limit laws, and a freeness certifier based on vanishing mixed cumulants.
//! * [`matmodel`] - random band matrix models with independent or Boolean
//!   entries, exact finite-size mixed moments via the kernel-partition sum,
//!   seeded Monte Carlo estimation, convergence sweeps against the limit
//!   evaluators, and the compressed-block consistency check for the extended
//!   model.
//!
//! The heavy engines (exact moments, Monte Carlo) are data-parallel via
//! rayon when the default `parallel` feature is enabled and fall back to
//! sequential iteration without it. Parallel reductions collect in index
//! order, so results are bit-identical across thread counts.

pub mod algebra;
pub mod cumulants;
pub mod error;
pub mod matmodel;
pub mod partitions;

mod par;

pub use error::{Error, Result};

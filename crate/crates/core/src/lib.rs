//! Weaved orthogonal operator-basis changes for globally constrained
//! Hamiltonians.
//!
//! A Hamiltonian with a term that is a function of the *sum* of all N
//! operators — the situation a global constraint produces — has a degree of
//! coupling (DoC) of N, and Trotterizing it naively costs gates exponential
//! in N. This crate constructs the sparse orthogonal "weaved" matrices that
//! rebalance such Hamiltonians so no term couples more than O(log₂N)
//! operators:
//!
//! - [`weave`]: weaved matrices `W_M` for any dimension, their defining
//!   properties, and the exact multiplication count of the construction;
//! - [`plan`]: operator partitions, block-diagonal rotations, DoC accounting
//!   and Trotter gate-cost estimates;
//! - [`u1`]: the dual-basis 2+1D compact U(1) lattice gauge theory on a
//!   periodic lattice, whose magnetic Gauss law supplies the global term;
//! - [`numerics`]: a dense exact-diagonalization oracle checking that the
//!   basis change is an exact operator rewrite and that redigitized spectra
//!   converge;
//! - [`graph`]: DOT emission of operator coupling graphs.

pub mod dense;
pub mod error;
pub mod graph;
pub mod numerics;
pub mod plan;
pub mod sparse;
pub mod u1;
pub mod weave;

pub use error::{Error, Result};
pub use sparse::SparseRowMatrix;
pub use weave::{binary_positions, givens, verify_weaved, weave_general, weave_pow2, CostLedger};
